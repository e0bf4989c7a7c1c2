"""Group and individual fairness metrics plus accuracy/RMSE."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .dataset import Dataset
from .errors import MetricError, UsageError


def _as_pair(preds, groups):
    preds = np.asarray(preds, dtype=np.float64)
    groups = np.asarray(groups)
    if preds.shape != groups.shape or preds.ndim != 1:
        raise UsageError(f"length mismatch: {preds.shape} predictions vs {groups.shape} groups")
    return preds, groups


def discrimination_binary(preds, groups) -> float:
    """``|mean(pred | group 1) - mean(pred | group 0)|``."""
    preds, groups = _as_pair(preds, groups)
    in1 = groups == 1
    in0 = groups == 0
    if not in1.any() or not in0.any():
        raise MetricError("discrimination is undefined when a protected group is empty")
    return float(abs(preds[in1].mean() - preds[in0].mean()))


def discrimination_kway(preds, groups, k: int | None = None) -> float:
    """``(2/k) * sum_i |global mean - mean of group i|`` over non-empty groups.

    Groups declared in the schema but absent from ``groups`` are skipped and
    ``k`` shrinks with them.
    """
    preds, groups = _as_pair(preds, groups)
    if preds.size == 0:
        raise MetricError("discrimination of an empty prediction vector")
    codes, inverse, counts = np.unique(groups, return_inverse=True, return_counts=True)
    if k is not None and k < 2:
        raise UsageError("k-way discrimination needs k >= 2")
    present = codes.size
    if present < 2:
        if k is None:
            raise UsageError("k-way discrimination needs at least two groups")
        return 0.0
    sums = np.bincount(inverse, weights=preds)
    means = sums / counts
    overall = preds.mean()
    return float(2.0 / present * np.sum(np.abs(overall - means)))


def max_discrimination(preds, values) -> tuple[float, float]:
    """Largest binary discrimination over thresholds of a numeric attribute.

    Thresholds are midpoints of consecutive distinct values; returns the value
    and the lowest threshold achieving it.
    """
    preds, values = _as_pair(preds, np.asarray(values, dtype=np.float64))
    order = np.argsort(values, kind="stable")
    v = values[order]
    p = preds[order]
    cut = np.flatnonzero(v[1:] != v[:-1])
    if cut.size == 0:
        raise MetricError("MaxD needs at least two distinct protected values")
    n = p.size
    cs = np.cumsum(p)
    n_left = cut + 1.0
    left = cs[cut] / n_left
    right = (cs[-1] - cs[cut]) / (n - n_left)
    disc = np.abs(left - right)
    i = int(np.argmax(disc))
    lo, hi = v[cut[i]], v[cut[i] + 1]
    t = (lo + hi) / 2.0
    if not lo < t <= hi:
        t = hi
    return float(disc[i]), float(t)


def accuracy(preds, truth) -> float:
    preds, truth = _as_pair(preds, truth)
    return float(np.mean(preds == truth))


def mse(preds, truth) -> float:
    preds, truth = _as_pair(preds, truth)
    return float(np.mean((preds - truth) ** 2))


def rmse(preds, truth) -> float:
    return float(np.sqrt(mse(preds, truth)))


def delta(acc: float, discrimination: float) -> float:
    return acc - discrimination


# -- individual fairness ------------------------------------------------------------

@dataclass(frozen=True)
class KnnConfig:
    k: int = 5
    include_protected: bool = True

    def __post_init__(self):
        if self.k < 1:
            raise UsageError("k must be positive")


def standardized_features(ds: Dataset, rows=None, exclude=()) -> np.ndarray:
    """Z-scored numeric columns and one-hot categorical columns.

    Uses the split-candidate columns of ``ds``; statistics are population
    moments over ``rows``.
    """
    if rows is None:
        rows = np.arange(ds.n_rows)
    blocks = []
    for name in ds.feature_names:
        if name == ds.label or name in exclude:
            continue
        f = ds.field(name)
        x = ds.column(name)[rows]
        if f.is_categorical:
            blocks.append(np.eye(max(f.arity, 1))[x])
        else:
            sd = x.std()
            z = (x - x.mean()) / sd if sd > 0 else np.zeros_like(x)
            blocks.append(z[:, None])
    if not blocks:
        return np.zeros((len(rows), 0))
    return np.hstack(blocks)


def nearest_neighbors(features: np.ndarray, k: int, chunk: int = 512) -> np.ndarray:
    """Indices of each row's ``k`` nearest other rows (Euclidean).

    Distance ties go to the lower row index.  Squared distances are rounded
    to 9 decimals so duplicate points tie exactly.
    """
    X = np.asarray(features, dtype=np.float64)
    n = X.shape[0]
    if n <= k:
        raise UsageError(f"need more than k={k} rows for nearest neighbours, got {n}")
    sq = np.einsum("ij,ij->i", X, X)
    out = np.empty((n, k), dtype=np.int64)
    cols = np.arange(n)
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        d2 = sq[start:stop, None] + sq[None, :] - 2.0 * (X[start:stop] @ X.T)
        d2 = np.round(np.maximum(d2, 0.0), 9)
        d2[np.arange(stop - start), np.arange(start, stop)] = np.inf
        # k smallest, then exact ordering by (distance, index)
        m = min(k + 1, n - 1)
        part = np.argpartition(d2, m - 1, axis=1)[:, :m]
        kth = np.take_along_axis(d2, part, axis=1).max(axis=1)
        for r in range(stop - start):
            row = d2[r]
            cand = cols[row <= kth[r]]
            order = np.lexsort((cand, row[cand]))
            out[start + r] = cand[order[:k]]
    return out


def inconsistency(preds, features: np.ndarray | None = None, cfg: KnnConfig = KnnConfig(),
                  neighbors: np.ndarray | None = None) -> float:
    """Mean ``|pred_i - mean(pred over i's k nearest neighbours)|``."""
    preds = np.asarray(preds, dtype=np.float64)
    if neighbors is None:
        if features is None:
            raise UsageError("inconsistency needs features or a neighbour table")
        if len(features) != preds.size:
            raise UsageError("feature rows and predictions differ in length")
        neighbors = nearest_neighbors(features, cfg.k)
    return float(np.mean(np.abs(preds - preds[neighbors].mean(axis=1))))


# -- report -------------------------------------------------------------------------

@dataclass
class FairnessReport:
    """Metric bundle for one evaluation.  Unused fields stay ``None``."""

    model: str
    task: str  # "classification" | "regression"
    n_rows: int
    accuracy: float | None = None
    rmse: float | None = None
    mse: float | None = None
    discrimination: float | None = None
    kway_discrimination: float | None = None
    max_discrimination: float | None = None
    max_discrimination_threshold: float | None = None
    inconsistency: float | None = None
    delta: float | None = None
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)
