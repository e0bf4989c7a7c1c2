import sys
import time
from pathlib import Path

import numpy as np
import pytest

from fairforest.dataset import Dataset, FeatureSchema, load_csv

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "data"
sys.path.insert(0, str(Path(__file__).parent))


def make_dataset(columns: dict, kinds: dict | None = None, roles: dict | None = None,
                 arities: dict | None = None) -> Dataset:
    """Build a Dataset from plain lists.  Categorical columns hold integer codes."""
    kinds = kinds or {}
    roles = roles or {}
    arities = arities or {}
    schema, cols = [], {}
    for name, values in columns.items():
        kind = kinds.get(name, "categorical")
        role = roles.get(name, "feature")
        if kind == "categorical":
            codes = np.asarray(values, dtype=np.int64)
            k = arities.get(name, int(codes.max()) + 1 if codes.size else 1)
            schema.append(FeatureSchema(name, kind, role, tuple(f"c{i}" for i in range(k))))
            cols[name] = codes
        else:
            schema.append(FeatureSchema(name, kind, role))
            cols[name] = np.asarray(values, dtype=np.float64)
    return Dataset(schema, cols)


def tree_shape(node, names):
    if node.is_leaf:
        return ("leaf", tuple(int(round(v * node.support)) for v in node.value))
    j = names.index(node.feature)
    kids = tuple(tree_shape(c, names) for c in node.children)
    if node.categorical:
        return ("cat", j, tuple(node.codes), kids)
    return ("num", j, node.threshold, kids)


def random_instance(rng, numeric: bool):
    n = int(rng.integers(2, 65))
    d = int(rng.integers(1, 9))
    kinds, arities, cols = [], [], {}
    for j in range(d):
        if numeric and rng.random() < 0.4:
            kinds.append("num")
            arities.append(0)
            cols[f"a{j}"] = rng.integers(0, 6, n).astype(float)
        else:
            k = int(rng.integers(1, 5))
            kinds.append("cat")
            arities.append(k)
            cols[f"a{j}"] = rng.integers(0, k, n)
    n_classes = int(rng.integers(2, 4))
    y = rng.integers(0, n_classes, n)
    ds = make_dataset({**cols, "y": y}, roles={"y": "label"},
                      kinds={f"a{j}": "numeric" for j in range(d) if kinds[j] == "num"},
                      arities={**{f"a{j}": arities[j] for j in range(d) if kinds[j] == "cat"}, "y": n_classes})
    X = [[cols[f"a{j}"][i] for j in range(d)] for i in range(n)]
    return ds, X, kinds, arities, y.tolist(), n_classes


@pytest.fixture(scope="session")
def german():
    return load_csv(DATA / "german.csv", DATA / "german.schema")


@pytest.fixture(scope="session")
def german_sweep():
    """The full German protect-every-feature sweep and its wall time (minutes)."""
    from fairforest.evaluation import ExperimentSpec, protect_all_features_sweep

    t0 = time.perf_counter()
    res = protect_all_features_sweep(ExperimentSpec(data=str(DATA / "german.csv"), schema=str(DATA / "german.schema")))
    return res, time.perf_counter() - t0


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
