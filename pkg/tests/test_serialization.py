import json

import numpy as np
import pytest
from conftest import make_dataset

from fairforest import serialization
from fairforest.dataset import BinarizeRecipe, binarize
from fairforest.errors import ModelFileError
from fairforest.forest import ForestConfig, fit
from fairforest.forest import predict_view as forest_predict
from fairforest.tree import TreeConfig, induce, leaf_values, print_tree
from fairforest.tree import predict_view as tree_predict


@pytest.fixture(scope="module")
def german_bin(german):
    return binarize(german, BinarizeRecipe("age", 25))


def test_tree_round_trip(german_bin, tmp_path):
    t = induce(german_bin.all_rows(), "credit", "age", TreeConfig())
    path = tmp_path / "t.json"
    serialization.save(t, path, BinarizeRecipe("age", 25))
    back, recipe = serialization.load(path)
    assert recipe == BinarizeRecipe("age", 25)
    assert np.array_equal(leaf_values(back, german_bin), leaf_values(t, german_bin))
    assert np.array_equal(tree_predict(back, german_bin), tree_predict(t, german_bin))
    assert print_tree(back) == print_tree(t)
    assert serialization.dumps(back, recipe) == path.read_text()


def test_forest_round_trip(german_bin, tmp_path):
    m = fit(german_bin.all_rows(), "credit", "age", ForestConfig(n_trees=8, seed=3))
    path = tmp_path / "f.json"
    serialization.save(m, path)
    back, recipe = serialization.load(path)
    assert recipe is None
    assert back.config == m.config
    assert np.array_equal(forest_predict(back, german_bin), forest_predict(m, german_bin))
    assert serialization.dumps(back) == path.read_text()


def test_regression_round_trip():
    ds = make_dataset({"x": [1.0, 2.0, 3.0, 4.0], "y": [1.0, 1.5, 7.0, 8.0]},
                      kinds={"x": "numeric", "y": "numeric"}, roles={"y": "label"})
    t = induce(ds.all_rows(), "y", None, TreeConfig())
    back, _ = serialization.from_dict(json.loads(serialization.dumps(t)))
    assert np.array_equal(leaf_values(back, ds), leaf_values(t, ds))


def test_file_layout(german_bin):
    d = json.loads(serialization.dumps(induce(german_bin.all_rows(), "credit", "age", TreeConfig(max_depth=2))))
    assert d["format"] == "fairforest-model" and d["version"] == 1 and d["kind"] == "tree"
    assert d["schema_fingerprint"] == german_bin.fingerprint()
    nodes = d["trees"][0]["nodes"]
    assert nodes[0]["kind"] in ("categorical", "numeric")
    assert {"label_gain", "protected_gain", "weight", "support", "value"} <= set(nodes[0])


def test_bad_files(tmp_path):
    p = tmp_path / "x.json"
    p.write_text("{not json")
    with pytest.raises(ModelFileError):
        serialization.load(p)
    p.write_text(json.dumps({"format": "other"}))
    with pytest.raises(ModelFileError):
        serialization.load(p)
    p.write_text(json.dumps({"format": "fairforest-model", "version": 99}))
    with pytest.raises(ModelFileError, match="version"):
        serialization.load(p)
    with pytest.raises(ModelFileError):
        serialization.load(tmp_path / "missing.json")


def test_truncated_node_list(german_bin):
    d = json.loads(serialization.dumps(induce(german_bin.all_rows(), "credit", None, TreeConfig(max_depth=2))))
    d["trees"][0]["nodes"] = d["trees"][0]["nodes"][:-1]
    with pytest.raises(ModelFileError):
        serialization.from_dict(d)
