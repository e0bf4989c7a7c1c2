"""Bagged ensembles of (fair) decision trees."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from .dataset import Dataset, SubsetView
from .errors import PredictionError, UsageError
from .tree import DecisionTree, TreeConfig, encode_row, grow, leaf_values, mdi_contributions


def _forest_tree_config() -> TreeConfig:
    return TreeConfig(feature_subsample="sqrt")


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    tree: TreeConfig = field(default_factory=_forest_tree_config)
    bootstrap: bool = True
    seed: int = 0
    # ensemble aggregation: "vote" on hard labels or "mean" of leaf frequencies
    aggregation: str = "vote"

    def __post_init__(self):
        if self.n_trees < 1:
            raise UsageError("n_trees must be at least 1")
        if self.aggregation not in ("vote", "mean"):
            raise UsageError(f"unknown aggregation {self.aggregation!r}")

    def to_dict(self) -> dict:
        return {
            "n_trees": self.n_trees, "tree": self.tree.to_dict(), "bootstrap": self.bootstrap,
            "seed": self.seed, "aggregation": self.aggregation,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ForestConfig":
        d = dict(d)
        d["tree"] = TreeConfig.from_dict(d["tree"])
        return cls(**d)


@dataclass
class ForestModel:
    trees: list[DecisionTree]
    config: ForestConfig

    @property
    def schema(self):
        return self.trees[0].schema

    @property
    def fingerprint(self) -> str:
        return self.trees[0].fingerprint

    @property
    def label(self) -> str:
        return self.trees[0].label

    @property
    def protected(self) -> str | None:
        return self.trees[0].protected

    @property
    def is_classifier(self) -> bool:
        return self.trees[0].is_classifier

    @property
    def classes(self):
        return self.trees[0].classes


def tree_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for tree ``index``; depends on nothing else."""
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def _fit_one(ds, rows, label, protected, cfg: ForestConfig, index: int) -> DecisionTree:
    rng = tree_rng(cfg.seed, index)
    sample = rows[rng.integers(0, rows.size, rows.size)] if cfg.bootstrap else rows
    return grow(ds, sample, label, protected, cfg.tree, rng)


def fit(train: SubsetView, label: str, protected: str | None, cfg: ForestConfig,
        n_jobs: int = 1) -> ForestModel:
    """Train ``cfg.n_trees`` trees; output is independent of ``n_jobs``."""
    if len(train) == 0:
        raise UsageError("cannot fit a forest on an empty training view")
    ds, rows = train.parent, train.row_indices
    if n_jobs == 1:
        trees = [_fit_one(ds, rows, label, protected, cfg, i) for i in range(cfg.n_trees)]
    else:
        trees = Parallel(n_jobs=n_jobs)(
            delayed(_fit_one)(ds, rows, label, protected, cfg, i) for i in range(cfg.n_trees)
        )
    return ForestModel(list(trees), cfg)


def forest_values(model: ForestModel, ds: Dataset, rows=None, aggregation: str | None = None):
    """Per-row ensemble output.

    Classification: ``(hard_labels, mean_frequencies)``; regression: mean of
    tree outputs.
    """
    aggregation = aggregation or model.config.aggregation
    if rows is None:
        rows = np.arange(ds.n_rows, dtype=np.int64)
    if not model.is_classifier:
        return np.mean([leaf_values(t, ds, rows) for t in model.trees], axis=0)
    n_classes = len(model.classes)
    votes = np.zeros((len(rows), n_classes))
    freq = np.zeros((len(rows), n_classes))
    arange = np.arange(len(rows))
    for t in model.trees:
        vals = leaf_values(t, ds, rows)
        freq += vals
        np.add.at(votes, (arange, np.argmax(vals, axis=1)), 1.0)
    freq /= len(model.trees)
    hard = np.argmax(votes if aggregation == "vote" else freq, axis=1)
    return hard, freq


def predict_view(model: ForestModel, view) -> np.ndarray:
    if isinstance(view, Dataset):
        ds, rows = view, None
    else:
        ds, rows = view.parent, view.row_indices
    out = forest_values(model, ds, rows)
    return out[0] if model.is_classifier else out


def predict_forest(model: ForestModel, row):
    """Majority vote (ties to the lower class index) or mean for regression."""
    ds = encode_row(model.schema, row)
    if ds.fingerprint() != model.fingerprint:
        raise PredictionError("row does not match the model schema")
    out = forest_values(model, ds)
    if model.is_classifier:
        return int(out[0][0]), out[1][0]
    return float(out[0])


def importance(model: ForestModel) -> dict[str, float]:
    """Mean per-tree MDI, scaled so the top feature scores 1."""
    per_tree = [mdi_contributions(t) for t in model.trees]
    names = list(per_tree[0])
    mean = {n: float(np.mean([p.get(n, 0.0) for p in per_tree])) for n in names}
    top = max(mean.values(), default=0.0)
    if top <= 0.0:
        return {n: 0.0 for n in names}
    return {n: v / top for n, v in mean.items()}
