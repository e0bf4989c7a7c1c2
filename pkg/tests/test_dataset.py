import numpy as np
import pytest
from conftest import DATA, make_dataset

from fairforest.dataset import (
    BinarizeRecipe, binarize, load_csv, load_schema, make_folds, materialize, moments,
)
from fairforest.errors import DataError, SchemaError, UsageError
from fairforest.forest import ForestConfig, fit
from fairforest.tree import TreeConfig


def write(tmp_path, csv_text, schema_text):
    d, s = tmp_path / "d.csv", tmp_path / "d.schema"
    d.write_text(csv_text)
    s.write_text(schema_text)
    return d, s


def test_german_has_1000_rows(german):
    assert german.n_rows == 1000
    assert len([n for n in german.feature_names if n != german.label]) == 20
    assert german.label == "credit"


def test_adult_has_45222_rows():
    train = load_csv(DATA / "adult_train.csv", DATA / "adult.schema")
    test = load_csv(DATA / "adult_test.csv", DATA / "adult.schema")
    assert train.n_rows + test.n_rows == 45222
    assert train.fingerprint() == test.fingerprint()


def test_header_only_file_gives_empty_dataset(tmp_path):
    d, s = write(tmp_path, "a,y\n", "a,numeric,feature\ny,categorical,label,p|q\n")
    ds = load_csv(d, s)
    assert ds.n_rows == 0


def test_missing_value_is_an_error_with_coordinates(tmp_path):
    d, s = write(tmp_path, "a,y\n1,p\n,q\n", "a,numeric,feature\ny,categorical,label\n")
    with pytest.raises(DataError, match=r"row 3, column 'a'"):
        load_csv(d, s)


def test_missing_value_allowed_in_ignored_column(tmp_path):
    d, s = write(tmp_path, "a,y\n1,p\n,q\n", "a,numeric,ignored\ny,categorical,label\n")
    ds = load_csv(d, s)
    assert np.isnan(ds.column("a")[1])


def test_unparseable_number_and_undeclared_category(tmp_path):
    d, s = write(tmp_path, "a,y\nx,p\n", "a,numeric,feature\ny,categorical,label\n")
    with pytest.raises(DataError, match="unparseable"):
        load_csv(d, s)
    d, s = write(tmp_path, "a,y\n1,r\n", "a,numeric,feature\ny,categorical,label,p|q\n")
    with pytest.raises(DataError, match="undeclared category"):
        load_csv(d, s)


def test_header_mismatch(tmp_path):
    d, s = write(tmp_path, "b,y\n1,p\n", "a,numeric,feature\ny,categorical,label\n")
    with pytest.raises(DataError, match="does not match"):
        load_csv(d, s)


def test_schema_errors(tmp_path):
    s = tmp_path / "bad.schema"
    s.write_text("a,numbers,feature\n")
    with pytest.raises(SchemaError):
        load_schema(s)
    s.write_text("a,numeric,feature,x|y\n")
    with pytest.raises(SchemaError, match="numeric"):
        load_schema(s)


def test_categories_discovered_in_load_order(tmp_path):
    d, s = write(tmp_path, "c,y\nz,p\na,q\nz,p\n", "c,categorical,feature\ny,categorical,label\n")
    ds = load_csv(d, s)
    assert ds.field("c").categories == ("z", "a")
    assert ds.column("c").tolist() == [0, 1, 0]


def test_binarize_directive_in_schema(tmp_path):
    d, s = write(tmp_path, "age,y\n10,p\n30,q\n",
                 "age,numeric,protected\ny,categorical,label\n@binarize,age,25,young,old\n")
    ds = load_csv(d, s)
    assert ds.field("age").categories == ("young", "old")
    assert ds.column("age").tolist() == [0, 1]
    assert ds.column("age_numeric").tolist() == [10.0, 30.0]


def test_binarize_examples():
    ds = make_dataset({"v": [10, 24, 25, 70], "y": [0, 1, 0, 1]}, kinds={"v": "numeric"},
                      roles={"y": "label"})
    out = binarize(ds, BinarizeRecipe("v", 25))
    assert out.column("v").tolist() == [0, 0, 1, 1]
    assert out.field("v").arity == 2
    same = make_dataset({"v": [7, 7, 7], "y": [0, 1, 0]}, kinds={"v": "numeric"}, roles={"y": "label"})
    assert binarize(same, BinarizeRecipe("v", 7)).column("v").tolist() == [1, 1, 1]


def test_binarize_german_age(german):
    out = binarize(german, BinarizeRecipe("age", 25))
    assert out.field("age").categories == ("<25", ">=25")
    assert int(out.column("age").sum()) == int(np.sum(german.column("age") >= 25))


def test_binarize_rejects_categorical(german):
    with pytest.raises(SchemaError):
        binarize(german, BinarizeRecipe("housing", 1))


def test_binarize_count_property(rng):
    for _ in range(50):
        v = rng.integers(0, 20, size=rng.integers(1, 40)).astype(float)
        t = float(rng.integers(0, 21))
        ds = make_dataset({"v": v, "y": np.zeros(v.size, int)}, kinds={"v": "numeric"},
                          roles={"y": "label"})
        assert int(binarize(ds, BinarizeRecipe("v", t)).column("v").sum()) == int(np.sum(v >= t))


def test_folds_partition_rows(german):
    folds = make_folds(german, 10, 3)
    assert [len(te) for _, te in folds] == [100] * 10
    tests = np.concatenate([te.row_indices for _, te in folds])
    assert np.array_equal(np.sort(tests), np.arange(1000))
    for tr, te in folds:
        assert len(np.intersect1d(tr.row_indices, te.row_indices)) == 0
        assert len(tr) + len(te) == 1000


def test_folds_leave_one_out_and_determinism():
    ds = make_dataset({"y": [0, 1] * 5}, roles={"y": "label"})
    folds = make_folds(ds, 10, 0)
    assert all(len(te) == 1 for _, te in folds)
    again = make_folds(ds, 10, 0)
    for (a, b), (c, d) in zip(folds, again):
        assert np.array_equal(a.row_indices, c.row_indices)
        assert np.array_equal(b.row_indices, d.row_indices)
    with pytest.raises(UsageError):
        make_folds(ds, 11, 0)
    with pytest.raises(UsageError):
        make_folds(ds, 1, 0)


def test_moments_examples():
    ds = make_dataset({"v": [0, 0, 10, 10], "y": [0] * 4}, kinds={"v": "numeric"}, roles={"y": "label"})
    m = moments(ds.all_rows(), "v")
    assert (m.mean, m.std_dev, m.count) == (5.0, 5.0, 4)
    one = make_dataset({"v": [7], "y": [0]}, kinds={"v": "numeric"}, roles={"y": "label"})
    assert moments(one.all_rows(), "v").std_dev == 0.0
    three = make_dataset({"v": [1, 2, 3], "y": [0] * 3}, kinds={"v": "numeric"}, roles={"y": "label"})
    m = moments(three.all_rows(), "v")
    assert m.mean == 2.0
    assert m.std_dev == pytest.approx(np.sqrt(2 / 3), abs=1e-15)


def test_moments_view_matches_materialized(rng):
    v = rng.normal(3, 2, 200)
    ds = make_dataset({"v": v, "y": np.zeros(200, int)}, kinds={"v": "numeric"}, roles={"y": "label"})
    idx = np.sort(rng.choice(200, 57, replace=False))
    view = ds.view(idx)
    a = moments(view, "v")
    b = moments(materialize(view).all_rows(), "v")
    assert abs(a.mean - b.mean) <= 1e-12 * abs(b.mean)
    assert abs(a.std_dev - b.std_dev) <= 1e-12 * b.std_dev


def test_views_validate_indices(german):
    with pytest.raises(UsageError):
        german.view([3, 1])
    with pytest.raises(UsageError):
        german.view([1000])


def test_columns_are_read_only_and_unchanged_by_training(german):
    ds = binarize(german, BinarizeRecipe("age", 25))
    before = ds.checksum()
    with pytest.raises(ValueError):
        ds.column("duration")[0] = 1.0
    fit(ds.all_rows(), "credit", "age", ForestConfig(n_trees=3, tree=TreeConfig(feature_subsample="sqrt")))
    assert ds.checksum() == before
