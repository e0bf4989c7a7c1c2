"""Split scoring: impurities, gains and the fair-gain combination.

Every gain is normalized to [0, 1] so label and protected gains can be
subtracted.  Categorical attributes are scored with Gini impurity divided by
its maximum ``1 - 1/arity``; numeric attributes with the capped mean-drift
gain (or, optionally, the CART variance-reduction gain).

Two layers live here.  The public functions (``gini``, ``categorical_gain``,
``drift_gain`` ...) take :class:`SubsetView` and :class:`SplitSpec` objects.
:class:`NodeScorer` wraps the compiled loops in ``_kernels`` that tree
induction uses; the view-level functions are the plain reference path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .dataset import FeatureSchema, SubsetView, moments
from .errors import DomainError, SchemaError, UsageError

GAIN_EPS = _kernels.TIE_EPS

CATEGORICAL_CRITERIA = ("normalized_gini",)
NUMERIC_CRITERIA = ("drift", "variance")


@dataclass(frozen=True)
class CriterionConfig:
    """Which gain scores the label and the protected attribute.

    ``None`` picks by attribute kind: normalized Gini for categorical,
    drift for numeric.  ``drift_form="printed"`` selects ``1 - drift``
    (one means *no* mean shift) for comparison runs.
    """

    label_criterion: str | None = None
    protected_criterion: str | None = None
    fairness_enabled: bool = True
    drift_cap: float = 3.0
    drift_form: str = "magnitude"

    def __post_init__(self):
        if self.drift_cap <= 0:
            raise UsageError("drift_cap must be positive")
        if self.drift_form not in ("magnitude", "printed"):
            raise UsageError(f"unknown drift_form {self.drift_form!r}")
        for c in (self.label_criterion, self.protected_criterion):
            if c is not None and c not in CATEGORICAL_CRITERIA + NUMERIC_CRITERIA:
                raise UsageError(f"unknown criterion {c!r}")

    def criterion_for(self, field: FeatureSchema, role: str) -> str:
        chosen = self.label_criterion if role == "label" else self.protected_criterion
        if field.is_categorical:
            if chosen not in (None, "normalized_gini"):
                raise SchemaError(f"{chosen} cannot score categorical attribute {field.name!r}")
            return "normalized_gini"
        if chosen == "normalized_gini":
            raise SchemaError(f"normalized_gini cannot score numeric attribute {field.name!r}")
        return chosen or "drift"

    def to_dict(self) -> dict:
        return {
            "label_criterion": self.label_criterion,
            "protected_criterion": self.protected_criterion,
            "fairness_enabled": self.fairness_enabled,
            "drift_cap": self.drift_cap,
            "drift_form": self.drift_form,
        }


@dataclass(frozen=True)
class SplitSpec:
    feature: str
    kind: str  # "categorical_multiway" | "numeric_threshold"
    branches: tuple[SubsetView, ...]
    threshold: float | None = None


@dataclass(frozen=True)
class GainScore:
    label_gain: float
    protected_gain: float
    fair_gain: float

    @classmethod
    def of(cls, label_gain: float, protected_gain: float) -> "GainScore":
        return cls(float(label_gain), float(protected_gain), float(label_gain - protected_gain))


NO_SPLIT = GainScore(0.0, 0.0, 0.0)


# -- count-level helpers shared by both layers --------------------------------

def _gini_from_counts(counts: np.ndarray) -> np.ndarray:
    """Gini impurity along the last axis; empty rows score 0."""
    counts = np.asarray(counts, dtype=np.float64)
    n = counts.sum(axis=-1)
    safe = np.where(n > 0, n, 1.0)
    p = counts / safe[..., None]
    return np.where(n > 0, 1.0 - np.einsum("...c,...c->...", p, p), 0.0)


def _norm(arity: int) -> float:
    return 1.0 - 1.0 / arity if arity >= 2 else 0.0


def _gini_gain(parent_counts: np.ndarray, branch_counts: np.ndarray, arity: int) -> np.ndarray:
    """Normalized Gini gain; ``branch_counts`` has shape (..., B, C)."""
    denom = _norm(arity)
    if denom == 0.0:
        return np.zeros(branch_counts.shape[:-2])
    n = parent_counts.sum()
    child = _gini_from_counts(branch_counts) / denom
    weights = branch_counts.sum(axis=-1) / n
    parent = _gini_from_counts(parent_counts) / denom
    return parent - np.sum(weights * child, axis=-1)


def _drift(n_b, mean_dev_b, sigma, n, cap, form):
    """Capped mean drift; ``mean_dev_b`` is (branch mean - parent mean)."""
    if sigma <= 0.0:
        mag = np.zeros(np.shape(n_b)[:-1])
    else:
        shift = np.minimum(np.abs(mean_dev_b) / sigma, cap)
        mag = np.sum((n_b / n) * np.where(n_b > 0, shift, 0.0), axis=-1) / cap
    return 1.0 - mag if form == "printed" else mag


def _variance(n_b, var_b, var_parent, n):
    if var_parent <= 0.0:
        return np.zeros(np.shape(n_b)[:-1])
    return 1.0 - np.sum((n_b / n) * np.where(n_b > 0, var_b, 0.0), axis=-1) / var_parent


# -- public view-level API ------------------------------------------------------

def _categorical(view: SubsetView, attribute: str) -> tuple[np.ndarray, int]:
    f = view.field(attribute)
    if not f.is_categorical:
        raise SchemaError(f"attribute {attribute!r} is numeric; Gini needs a categorical attribute")
    return view.values(attribute), f.arity


def gini(view: SubsetView, attribute: str) -> float:
    codes, arity = _categorical(view, attribute)
    if codes.size == 0:
        raise DomainError("Gini impurity of an empty view")
    return float(_gini_from_counts(np.bincount(codes, minlength=arity)))


def normalized_gini(view: SubsetView, attribute: str) -> float:
    """Gini divided by ``1 - 1/arity`` using the schema-declared arity."""
    g = gini(view, attribute)
    denom = _norm(view.field(attribute).arity)
    return g / denom if denom else 0.0


def _check_partition(parent: SubsetView, split: SplitSpec) -> None:
    sizes = sum(len(b) for b in split.branches)
    if sizes != len(parent):
        raise UsageError("split branches do not partition the parent view")
    joined = np.sort(np.concatenate([b.row_indices for b in split.branches]))
    if not np.array_equal(joined, parent.row_indices):
        raise UsageError("split branches do not partition the parent view")


def categorical_gain(parent: SubsetView, split: SplitSpec, attribute: str) -> float:
    _check_partition(parent, split)
    codes, arity = _categorical(parent, attribute)
    if codes.size == 0:
        raise DomainError("gain of an empty view")
    pc = np.bincount(codes, minlength=arity)
    bc = np.stack([np.bincount(b.values(attribute), minlength=arity) for b in split.branches])
    return float(_gini_gain(pc, bc, arity))


def _numeric_branch_stats(parent, split, attribute):
    f = parent.field(attribute)
    if f.is_categorical:
        raise SchemaError(f"attribute {attribute!r} is categorical; expected numeric")
    _check_partition(parent, split)
    m = moments(parent, attribute)
    n_b = np.array([len(b) for b in split.branches], dtype=np.float64)
    means = np.array([b.values(attribute).mean() if len(b) else m.mean for b in split.branches])
    var_b = np.array([b.values(attribute).var() if len(b) else 0.0 for b in split.branches])
    return m, n_b, means, var_b


def drift_gain(parent: SubsetView, split: SplitSpec, attribute: str,
               cap: float = 3.0, form: str = "magnitude") -> float:
    """Weighted mean shift of the children in parent standard deviations.

    ``(1/cap) * sum_i |T_i|/|T| * min(|mu_T - mu_Ti| / sigma_T, cap)``.  Zero
    when every child keeps the parent mean; one when all children drift by
    ``cap`` sigmas or more.  A constant attribute scores 0.
    """
    m, n_b, means, _ = _numeric_branch_stats(parent, split, attribute)
    return float(_drift(n_b, means - m.mean, m.std_dev, m.count, cap, form))


def variance_gain(parent: SubsetView, split: SplitSpec, attribute: str) -> float:
    m, n_b, _, var_b = _numeric_branch_stats(parent, split, attribute)
    return float(_variance(n_b, var_b, m.std_dev ** 2, m.count))


def attribute_gain(parent: SubsetView, split: SplitSpec, attribute: str, criterion: str,
                   cap: float = 3.0, form: str = "magnitude") -> float:
    if criterion == "normalized_gini":
        return categorical_gain(parent, split, attribute)
    if criterion == "drift":
        return drift_gain(parent, split, attribute, cap, form)
    if criterion == "variance":
        return variance_gain(parent, split, attribute)
    raise UsageError(f"unknown criterion {criterion!r}")


def fair_gain(parent: SubsetView, split: SplitSpec, label: str, protected: str | None,
              cfg: CriterionConfig) -> GainScore:
    lc = cfg.criterion_for(parent.field(label), "label")
    g_label = attribute_gain(parent, split, label, lc, cfg.drift_cap, cfg.drift_form)
    g_prot = 0.0
    if protected is not None and cfg.fairness_enabled:
        pc = cfg.criterion_for(parent.field(protected), "protected")
        g_prot = attribute_gain(parent, split, protected, pc, cfg.drift_cap, cfg.drift_form)
    return GainScore.of(g_label, g_prot)


def categorical_split(parent: SubsetView, feature: str) -> SplitSpec:
    """One branch per schema category (absent categories give empty branches)."""
    f = parent.field(feature)
    if not f.is_categorical:
        raise SchemaError(f"{feature!r} is not categorical")
    codes = parent.values(feature)
    branches = tuple(parent.select(codes == c) for c in range(f.arity))
    return SplitSpec(feature, "categorical_multiway", branches)


def threshold_split(parent: SubsetView, feature: str, threshold: float) -> SplitSpec:
    values = parent.values(feature)
    below = values < threshold
    return SplitSpec(feature, "numeric_threshold",
                     (parent.select(below), parent.select(~below)), float(threshold))


def best_numeric_threshold(parent: SubsetView, feature: str, label: str, protected: str | None,
                           cfg: CriterionConfig, min_samples_leaf: int = 1
                           ) -> tuple[SplitSpec | None, GainScore]:
    """Scan midpoints between consecutive distinct values; maximize fair gain.

    Returns ``(None, NO_SPLIT)`` when the feature has fewer than two distinct
    values in the node.  Ties go to the smaller threshold.
    """
    f = parent.field(feature)
    if f.is_categorical:
        raise SchemaError(f"{feature!r} is categorical")
    if len(parent) == 0:
        raise DomainError("cannot split an empty view")
    scorer = NodeScorer(
        parent.values(label), parent.field(label),
        parent.values(protected) if protected is not None else None,
        parent.field(protected) if protected is not None else None,
        cfg, min_samples_leaf,
    )
    best = scorer.numeric(parent.values(feature))
    if best is None:
        return None, NO_SPLIT
    return threshold_split(parent, feature, best.threshold), best.score


# -- node kernels ---------------------------------------------------------------

_EMPTY_I = np.zeros(0, dtype=np.int64)
_EMPTY_F = np.zeros(0, dtype=np.float64)
_ABSENT = (_kernels.ABSENT, _EMPTY_I, _EMPTY_F, 0, 0.0, 0.0)


def _target(values: np.ndarray, field: FeatureSchema, role: str, cfg: CriterionConfig) -> tuple:
    crit = cfg.criterion_for(field, role)
    if field.is_categorical:
        return (_kernels.GINI, np.ascontiguousarray(values, dtype=np.int64), _EMPTY_F,
                field.arity, 0.0, 0.0)
    centered = np.asarray(values, dtype=np.float64) - values.mean()
    var = float(np.mean(centered * centered))
    if crit == "variance":
        kind = _kernels.VARIANCE
    else:
        kind = _kernels.DRIFT_PRINTED if cfg.drift_form == "printed" else _kernels.DRIFT
    return (kind, _EMPTY_I, centered, 0, float(np.sqrt(var)), var)


@dataclass(frozen=True)
class Candidate:
    score: GainScore
    threshold: float | None = None


class NodeScorer:
    """Scores candidate splits of one node against its label and protected values."""

    def __init__(self, label_values, label_field, protected_values, protected_field,
                 cfg: CriterionConfig, min_samples_leaf: int = 1):
        self.label = _target(label_values, label_field, "label", cfg)
        if protected_field is not None and cfg.fairness_enabled:
            self.protected = _target(protected_values, protected_field, "protected", cfg)
        else:
            self.protected = _ABSENT
        self.cap = float(cfg.drift_cap)
        self.min_leaf = float(min_samples_leaf)

    def categorical(self, x: np.ndarray, arity: int) -> Candidate | None:
        ok, lg, pg = _kernels.score_multiway(
            np.ascontiguousarray(x, dtype=np.int64), arity,
            *self.label, *self.protected, self.cap, self.min_leaf)
        return Candidate(GainScore.of(lg, pg)) if ok else None

    def numeric(self, x: np.ndarray) -> Candidate | None:
        found, t, lg, pg = _kernels.scan_numeric(
            np.ascontiguousarray(x, dtype=np.float64),
            *self.label, *self.protected, self.cap, self.min_leaf)
        return Candidate(GainScore.of(lg, pg), float(t)) if found else None
