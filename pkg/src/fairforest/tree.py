"""Greedy induction of a single (optionally fair) decision tree."""

from __future__ import annotations

import math
import re
from dataclasses import asdict, dataclass, field
from typing import Mapping

import numpy as np

from .criteria import GAIN_EPS, CriterionConfig, NodeScorer
from .dataset import Dataset, FeatureSchema, SubsetView
from .errors import PredictionError, SchemaError, UsageError


@dataclass(frozen=True)
class TreeConfig:
    """Induction limits.  ``feature_subsample`` is None (all), an int or "sqrt"."""

    criterion: CriterionConfig = field(default_factory=CriterionConfig)
    max_depth: int | None = None
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    feature_subsample: int | str | None = None
    protected_as_candidate: bool = True

    def __post_init__(self):
        if self.max_depth is not None and self.max_depth < 0:
            raise UsageError("max_depth must be non-negative")
        if self.min_samples_split < 1 or self.min_samples_leaf < 1:
            raise UsageError("sample limits must be positive")
        if self.min_samples_leaf > self.min_samples_split:
            raise UsageError("min_samples_leaf must not exceed min_samples_split")
        fs = self.feature_subsample
        if fs is not None and fs != "sqrt" and not (isinstance(fs, int) and fs >= 1):
            raise UsageError(f"bad feature_subsample {fs!r}")

    def n_candidates(self, n_features: int) -> int:
        fs = self.feature_subsample
        if fs is None:
            return n_features
        if fs == "sqrt":
            return max(1, min(n_features, int(round(math.sqrt(n_features)))))
        return min(fs, n_features)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["criterion"] = self.criterion.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TreeConfig":
        d = dict(d)
        d["criterion"] = CriterionConfig(**d.get("criterion", {}))
        return cls(**d)


class Leaf:
    __slots__ = ("value", "support", "weight")

    def __init__(self, value, support, weight):
        self.value = value  # class-frequency vector, or mean for regression
        self.support = support
        self.weight = weight

    is_leaf = True


class Split:
    """Internal node.  Numeric: children (below, at-or-above) ``threshold``.

    Categorical: one child per category code present at the node; ``codes``
    lists those codes.  A code absent at the node falls back to ``value``,
    the node's own class frequencies (or mean).
    """

    __slots__ = ("feature", "threshold", "codes", "children", "value", "support",
                 "weight", "label_gain", "protected_gain")

    def __init__(self, feature, threshold, codes, children, value, support, weight,
                 label_gain, protected_gain):
        self.feature = feature
        self.threshold = threshold
        self.codes = codes
        self.children = children
        self.value = value
        self.support = support
        self.weight = weight
        self.label_gain = label_gain
        self.protected_gain = protected_gain

    is_leaf = False

    @property
    def categorical(self) -> bool:
        return self.threshold is None


@dataclass
class DecisionTree:
    root: Leaf | Split
    schema: tuple[FeatureSchema, ...]
    fingerprint: str
    label: str
    protected: str | None
    config: TreeConfig

    @property
    def label_field(self) -> FeatureSchema:
        return next(s for s in self.schema if s.name == self.label)

    @property
    def is_classifier(self) -> bool:
        return self.label_field.is_categorical

    @property
    def classes(self) -> tuple[str, ...]:
        return self.label_field.categories

    def nodes(self):
        """Pre-order traversal."""
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            if not node.is_leaf:
                stack.extend(reversed(node.children))

    @property
    def n_nodes(self) -> int:
        return sum(1 for _ in self.nodes())

    @property
    def n_leaves(self) -> int:
        return sum(1 for n in self.nodes() if n.is_leaf)

    def depth(self) -> int:
        best, stack = 0, [(self.root, 0)]
        while stack:
            node, d = stack.pop()
            best = max(best, d)
            if not node.is_leaf:
                stack.extend((c, d + 1) for c in node.children)
        return best


# -- induction ---------------------------------------------------------------------

def candidate_features(ds: Dataset, label: str, protected: str | None, cfg: TreeConfig) -> list[str]:
    names = [n for n in ds.feature_names if n != label]
    if protected is not None and not cfg.protected_as_candidate:
        names = [n for n in names if n != protected]
    return names


def induce(train: SubsetView, label: str, protected: str | None, cfg: TreeConfig,
           rng_seed: int = 0) -> DecisionTree:
    if len(train) == 0:
        raise UsageError("cannot induce a tree from an empty training view")
    return grow(train.parent, train.row_indices, label, protected, cfg,
                np.random.default_rng(rng_seed))


def grow(ds: Dataset, rows: np.ndarray, label: str, protected: str | None, cfg: TreeConfig,
         rng: np.random.Generator) -> DecisionTree:
    """Build a tree on ``rows`` of ``ds`` (repeats allowed, e.g. a bootstrap)."""
    rows = np.asarray(rows, dtype=np.int64)
    if rows.size == 0:
        raise UsageError("cannot induce a tree from zero rows")
    label_field = ds.field(label)
    if label_field.role == "ignored":
        raise SchemaError(f"label column {label!r} is ignored by the schema")
    prot_field = None
    if protected is not None:
        prot_field = ds.field(protected)
        if protected == label:
            raise UsageError("the label cannot also be the protected attribute")
    crit = cfg.criterion
    use_prot = prot_field is not None and crit.fairness_enabled
    names = candidate_features(ds, label, protected, cfg)
    fields = [ds.field(n) for n in names]
    cols = [ds.column(n) for n in names]
    n_try = cfg.n_candidates(len(names))
    y_all = ds.column(label)
    p_all = ds.column(protected) if use_prot else None
    classifier = label_field.is_categorical
    n_classes = label_field.arity
    n_root = rows.size

    def node_value(y):
        if classifier:
            return np.bincount(y, minlength=n_classes) / y.size
        return float(y.mean())

    def is_pure(y):
        return bool(np.all(y == y[0]))

    root_holder = [None]
    # (container, slot, rows, depth)
    stack = [(root_holder, 0, rows, 0)]
    while stack:
        container, slot, idx, depth = stack.pop()
        y = y_all[idx]
        n = idx.size
        weight = n / n_root
        value = node_value(y)
        if (is_pure(y) or n < cfg.min_samples_split
                or (cfg.max_depth is not None and depth >= cfg.max_depth)
                or n < 2 * cfg.min_samples_leaf):
            container[slot] = Leaf(value, n, weight)
            continue

        scorer = NodeScorer(y, label_field, p_all[idx] if use_prot else None,
                            prot_field if use_prot else None, crit, cfg.min_samples_leaf)
        if n_try < len(names):
            tried = np.sort(rng.choice(len(names), size=n_try, replace=False))
        else:
            tried = range(len(names))

        best, best_j = None, -1
        for j in tried:
            x = cols[j][idx]
            if fields[j].is_categorical:
                cand = scorer.categorical(x, fields[j].arity)
            else:
                cand = scorer.numeric(x)
            if cand is None:
                continue
            if best is None or cand.score.fair_gain > best.score.fair_gain + GAIN_EPS:
                best, best_j = cand, j
        if (best is None or best.score.fair_gain <= GAIN_EPS
                or best.score.label_gain <= GAIN_EPS):
            container[slot] = Leaf(value, n, weight)
            continue

        x = cols[best_j][idx]
        if fields[best_j].is_categorical:
            codes = np.unique(x)
            parts = [idx[x == c] for c in codes]
            node = Split(names[best_j], None, [int(c) for c in codes], [None] * len(parts),
                         value, n, weight, best.score.label_gain, best.score.protected_gain)
        else:
            below = x < best.threshold
            parts = [idx[below], idx[~below]]
            node = Split(names[best_j], best.threshold, None, [None, None],
                         value, n, weight, best.score.label_gain, best.score.protected_gain)
        container[slot] = node
        # push in reverse so children are built left to right
        for k in range(len(parts) - 1, -1, -1):
            stack.append((node.children, k, parts[k], depth + 1))

    return DecisionTree(root_holder[0], ds.schema, ds.fingerprint(), label, protected, cfg)


# -- prediction -------------------------------------------------------------------

def _check_schema(tree: DecisionTree, ds: Dataset) -> None:
    if ds.fingerprint() != tree.fingerprint:
        raise PredictionError(
            f"schema fingerprint mismatch: model {tree.fingerprint}, data {ds.fingerprint()}"
        )


def leaf_values(tree: DecisionTree, ds: Dataset, rows: np.ndarray | None = None) -> np.ndarray:
    """Leaf payload per row: (n, n_classes) frequencies, or (n,) means."""
    _check_schema(tree, ds)
    if rows is None:
        rows = np.arange(ds.n_rows, dtype=np.int64)
    rows = np.asarray(rows, dtype=np.int64)
    if tree.is_classifier:
        out = np.empty((rows.size, len(tree.classes)))
    else:
        out = np.empty(rows.size)
    stack = [(tree.root, np.arange(rows.size))]
    while stack:
        node, pos = stack.pop()
        if pos.size == 0:
            continue
        if node.is_leaf:
            out[pos] = node.value
            continue
        x = ds.column(node.feature)[rows[pos]]
        if node.categorical:
            arity = ds.field(node.feature).arity
            if x.size and (x.min() < 0 or x.max() >= arity):
                raise PredictionError(f"unseen category code in column {node.feature!r}")
            lookup = np.full(arity, -1, dtype=np.int64)
            lookup[node.codes] = np.arange(len(node.codes))
            slot = lookup[x]
            out[pos[slot < 0]] = node.value
            for k, child in enumerate(node.children):
                stack.append((child, pos[slot == k]))
        else:
            below = x < node.threshold
            stack.append((node.children[0], pos[below]))
            stack.append((node.children[1], pos[~below]))
    return out


def hard_labels(values: np.ndarray) -> np.ndarray:
    """Argmax over class frequencies; ties go to the lower class index."""
    return np.argmax(values, axis=1)


def predict_view(tree: DecisionTree, view) -> np.ndarray:
    """Predicted class index (classification) or value (regression) per row."""
    if isinstance(view, Dataset):
        ds, rows = view, None
    else:
        ds, rows = view.parent, view.row_indices
    vals = leaf_values(tree, ds, rows)
    return hard_labels(vals) if tree.is_classifier else vals


def encode_row(schema, row: Mapping[str, object]) -> Dataset:
    """One-row dataset from raw cell values (category names or numbers)."""
    cols = {}
    for s in schema:
        if s.role in ("label", "ignored") and s.name not in row:
            cols[s.name] = [0 if s.is_categorical else math.nan]
            continue
        if s.name not in row:
            raise PredictionError(f"row is missing column {s.name!r}")
        v = row[s.name]
        if s.is_categorical:
            if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
                code = int(v)
                if not 0 <= code < s.arity:
                    raise PredictionError(f"unseen category code {code} for {s.name!r}")
            else:
                try:
                    code = s.categories.index(str(v))
                except ValueError:
                    raise PredictionError(f"unseen category {v!r} for {s.name!r}") from None
            cols[s.name] = [code]
        else:
            cols[s.name] = [float(v)]
    return Dataset(schema, cols)


def predict(tree: DecisionTree, row: Mapping[str, object]):
    """Route one row.  Returns ``(class_index, class_scores)`` or a float."""
    vals = leaf_values(tree, encode_row(tree.schema, row))
    if tree.is_classifier:
        return int(hard_labels(vals)[0]), vals[0]
    return float(vals[0])


# -- inspection -------------------------------------------------------------------

def _leaf_text(tree: DecisionTree, node) -> str:
    if tree.is_classifier:
        dist = " ".join(f"{c}={p:.4f}" for c, p in zip(tree.classes, node.value))
        return f"leaf {dist} n={node.support}"
    return f"leaf mean={node.value:.6g} n={node.support}"


def print_tree(tree: DecisionTree) -> str:
    """Indented rendering, one node per line."""
    fields = {s.name: s for s in tree.schema}
    lines = []
    stack = [(tree.root, 0, "")]
    while stack:
        node, depth, cond = stack.pop()
        pad = "  " * depth + (f"[{cond}] " if cond else "")
        if node.is_leaf:
            lines.append(pad + _leaf_text(tree, node))
            continue
        lines.append(
            f"{pad}split {node.feature} n={node.support} "
            f"label_gain={node.label_gain:.6f} protected_gain={node.protected_gain:.6f}"
        )
        if node.categorical:
            cats = fields[node.feature].categories
            conds = [f"{node.feature} = {cats[c]}" for c in node.codes]
        else:
            conds = [f"{node.feature} < {node.threshold:.6g}", f"{node.feature} >= {node.threshold:.6g}"]
        for child, c in reversed(list(zip(node.children, conds))):
            stack.append((child, depth + 1, c))
    return "\n".join(lines) + "\n"


LEAF_LINE = re.compile(r"^\s*(\[.*\] )?leaf ")


def mdi_contributions(tree: DecisionTree) -> dict[str, float]:
    """Sum of node weight times label gain per splitting feature."""
    out = {n: 0.0 for n in candidate_features_from_schema(tree)}
    for node in tree.nodes():
        if not node.is_leaf:
            out[node.feature] = out.get(node.feature, 0.0) + node.weight * node.label_gain
    return out


def candidate_features_from_schema(tree: DecisionTree) -> list[str]:
    names = [s.name for s in tree.schema if s.role in ("feature", "protected") and s.name != tree.label]
    if tree.protected is not None and not tree.config.protected_as_candidate:
        names = [n for n in names if n != tree.protected]
    return names
