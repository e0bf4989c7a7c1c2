"""Experiment protocols: cross-validation, hold-out, all-features sweep.

An experiment is described by an :class:`ExperimentSpec`, loadable from a
JSON file whose relative paths resolve against the file's directory.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import forest as forest_mod
from .criteria import CriterionConfig
from .dataset import BinarizeRecipe, Dataset, FeatureSchema, SubsetView, binarize, load_csv, make_folds
from .errors import SchemaError, UsageError
from .forest import ForestConfig, ForestModel, forest_values
from .metrics import (
    FairnessReport, KnnConfig, accuracy, delta, discrimination_binary, discrimination_kway,
    inconsistency, max_discrimination, mse, nearest_neighbors, standardized_features,
)
from .tree import DecisionTree, TreeConfig, grow, leaf_values

MODELS = ("tree", "forest")
MODES = ("plain", "fair", "fair_continuous")
SCORES = ("hard", "mean")
# class index whose hard indicator (or frequency) is the scored prediction
POSITIVE_CLASS = 1


@dataclass(frozen=True)
class ExperimentSpec:
    data: str
    schema: str
    test_data: str | None = None
    model: str = "forest"
    mode: str = "plain"
    protected: str | None = None
    binarize: float | None = None
    folds: int = 10
    seed: int = 0
    n_trees: int = 100
    max_depth: int | None = None
    min_samples_leaf: int = 1
    knn_k: int = 5
    knn_include_protected: bool = True
    score: str = "hard"
    n_jobs: int = 1

    def __post_init__(self):
        if self.model not in MODELS:
            raise UsageError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.mode not in MODES:
            raise UsageError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.score not in SCORES:
            raise UsageError(f"score must be one of {SCORES}, got {self.score!r}")
        if self.mode != "plain" and self.protected is None:
            raise UsageError(f"mode {self.mode!r} needs a protected attribute")
        if self.folds < 2:
            raise UsageError("folds must be at least 2")

    @property
    def name(self) -> str:
        base = "DT" if self.model == "tree" else "RF"
        return {"plain": base, "fair": f"{base}-fair", "fair_continuous": f"{base}-fair-cont"}[self.mode]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict, base: Path | None = None) -> "ExperimentSpec":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise UsageError(f"unknown experiment keys: {sorted(extra)}")
        d = dict(d)
        if base is not None:
            for key in ("data", "schema", "test_data"):
                if d.get(key) is not None:
                    d[key] = str(base / d[key])
        return cls(**d)


def load_spec(path) -> ExperimentSpec:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from None
    return ExperimentSpec.from_dict(raw, base=path.parent)


# -- preparation --------------------------------------------------------------------

@dataclass
class Prepared:
    """Loaded data plus everything needed to score predictions on it."""

    spec: ExperimentSpec
    train: Dataset  # training columns (protected possibly binarized)
    raw: Dataset  # untransformed columns, used for kNN features and MaxD
    test: Dataset | None = None
    test_raw: Dataset | None = None
    label: str = ""
    recipe: BinarizeRecipe | None = None


def _recipe(spec: ExperimentSpec) -> BinarizeRecipe | None:
    if spec.binarize is None or spec.protected is None:
        return None
    return BinarizeRecipe(spec.protected, float(spec.binarize))


def prepare(spec: ExperimentSpec) -> Prepared:
    raw = load_csv(spec.data, spec.schema)
    test_raw = load_csv(spec.test_data, spec.schema) if spec.test_data else None
    label = raw.label
    if label is None:
        raise SchemaError("schema declares no label column")
    recipe = _recipe(spec)
    if spec.protected is not None:
        pf = raw.field(spec.protected)
        if spec.mode == "fair_continuous" and pf.kind != "numeric":
            raise UsageError(f"continuous protection needs a numeric column; {pf.name!r} is {pf.kind}")
        if recipe is not None and pf.kind != "numeric":
            raise UsageError(f"cannot binarize categorical column {pf.name!r}")
    # continuous protection trains on the raw column; the threshold is only for reporting
    train_recipe = recipe if spec.mode != "fair_continuous" else None
    train = binarize(raw, train_recipe) if train_recipe else raw
    test = (binarize(test_raw, train_recipe) if train_recipe else test_raw) if test_raw else None
    return Prepared(spec, train, raw, test, test_raw, label, recipe)


def tree_config(spec: ExperimentSpec, fair: bool) -> TreeConfig:
    return TreeConfig(
        criterion=CriterionConfig(fairness_enabled=fair),
        max_depth=spec.max_depth,
        min_samples_split=max(2, spec.min_samples_leaf),
        min_samples_leaf=spec.min_samples_leaf,
        feature_subsample="sqrt" if spec.model == "forest" else None,
    )


def forest_config(spec: ExperimentSpec, fair: bool) -> ForestConfig:
    return ForestConfig(n_trees=spec.n_trees, tree=tree_config(spec, fair), seed=spec.seed)


def train_model(spec: ExperimentSpec, view: SubsetView, label: str, protected: str | None,
                fair: bool | None = None):
    """Fit the tree or forest described by ``spec`` on ``view``."""
    if fair is None:
        fair = spec.mode != "plain"
    if spec.model == "tree":
        return grow(view.parent, view.row_indices, label, protected, tree_config(spec, fair),
                    np.random.default_rng(spec.seed))
    return forest_mod.fit(view, label, protected, forest_config(spec, fair), n_jobs=spec.n_jobs)


def model_outputs(model, ds: Dataset, rows=None, score: str = "hard"):
    """``(hard, yhat)``: hard class indices (None for regression) and scored predictions."""
    if isinstance(model, ForestModel):
        out = forest_values(model, ds, rows)
        if not model.is_classifier:
            return None, out
        hard, freq = out
    else:
        vals = leaf_values(model, ds, rows)
        if not model.is_classifier:
            return None, vals
        hard, freq = np.argmax(vals, axis=1), vals
    if score == "hard":
        yhat = (hard == POSITIVE_CLASS).astype(np.float64)
    else:
        yhat = freq[:, POSITIVE_CLASS] if freq.shape[1] > POSITIVE_CLASS else np.zeros(len(hard))
    return hard, yhat


# -- scoring ------------------------------------------------------------------------

def knn_features(raw: Dataset, protected: str | None, cfg: KnnConfig) -> np.ndarray:
    exclude = (protected,) if protected is not None and not cfg.include_protected else ()
    return standardized_features(raw, exclude=exclude)


def _group_metrics(report: FairnessReport, yhat, raw: Dataset, protected: str | None,
                   recipe: BinarizeRecipe | None) -> None:
    if protected is None:
        return
    pf = raw.field(protected)
    col = raw.column(protected)
    if pf.is_categorical:
        groups = col
        if pf.arity == 2:
            report.discrimination = discrimination_binary(yhat, groups)
        present = np.unique(groups).size
        report.kway_discrimination = discrimination_kway(yhat, groups, k=pf.arity)
        if present < pf.arity:
            report.metadata["kway_groups_skipped"] = pf.arity - present
        if pf.arity > 2:
            report.discrimination = report.kway_discrimination
        return
    if recipe is not None:
        groups = (col >= recipe.threshold).astype(np.int64)
        report.discrimination = discrimination_binary(yhat, groups)
        report.kway_discrimination = report.discrimination
    report.max_discrimination, report.max_discrimination_threshold = max_discrimination(yhat, col)


def score_predictions(name: str, truth, hard, yhat, raw: Dataset, protected: str | None,
                      recipe: BinarizeRecipe | None, neighbors: np.ndarray,
                      spec: ExperimentSpec, protocol: str) -> FairnessReport:
    classification = hard is not None
    report = FairnessReport(model=name, task="classification" if classification else "regression",
                            n_rows=int(len(yhat)))
    if classification:
        report.accuracy = accuracy(hard, truth)
    else:
        report.mse = mse(yhat, truth)
        report.rmse = float(np.sqrt(report.mse))
    _group_metrics(report, yhat, raw, protected, recipe)
    report.inconsistency = inconsistency(yhat, neighbors=neighbors)
    if classification and report.discrimination is not None:
        report.delta = delta(report.accuracy, report.discrimination)
    report.metadata.update({
        "protocol": protocol,
        "seed": spec.seed,
        "score": spec.score,
        "positive_class": POSITIVE_CLASS if classification else None,
        "knn": {"k": spec.knn_k, "distance": "euclidean", "scaling": "zscore+onehot",
                "include_protected": spec.knn_include_protected, "ties": "row index"},
        "protected": protected,
        "binarize": recipe.threshold if recipe else None,
    })
    return report


# -- protocols ------------------------------------------------------------------------

@dataclass
class Evaluation:
    report: FairnessReport
    predictions: np.ndarray  # scored yhat per evaluated row
    hard: np.ndarray | None


def _neighbors(raw: Dataset, spec: ExperimentSpec) -> np.ndarray:
    cfg = KnnConfig(spec.knn_k, spec.knn_include_protected)
    return nearest_neighbors(knn_features(raw, spec.protected, cfg), cfg.k)


def _out_of_fold(prep: Prepared, protected: str | None, fair: bool):
    """Pooled out-of-fold predictions plus per-fold (size, accuracy)."""
    spec = prep.spec
    ds = prep.train
    n = ds.n_rows
    yhat = np.empty(n)
    hard = np.empty(n, dtype=np.int64) if ds.field(prep.label).is_categorical else None
    truth = ds.column(prep.label)
    per_fold = []
    for train, test in make_folds(ds, spec.folds, spec.seed):
        model = train_model(spec, train, prep.label, protected, fair)
        h, s = model_outputs(model, ds, test.row_indices, spec.score)
        yhat[test.row_indices] = s
        if hard is not None:
            hard[test.row_indices] = h
            per_fold.append((len(test), float(np.mean(h == truth[test.row_indices]))))
        else:
            per_fold.append((len(test), float(np.mean((s - truth[test.row_indices]) ** 2))))
    return hard, yhat, per_fold


def cross_validate(spec: ExperimentSpec, prep: Prepared | None = None,
                   neighbors: np.ndarray | None = None) -> Evaluation:
    """k-fold CV with metrics on the pooled out-of-fold predictions.

    Inconsistency uses neighbours from the whole dataset, so each row is
    compared with rows that were predicted by other folds' models.
    """
    prep = prep or prepare(spec)
    if neighbors is None:
        neighbors = _neighbors(prep.raw, spec)
    protected = spec.protected
    hard, yhat, per_fold = _out_of_fold(prep, protected, spec.mode != "plain")
    report = score_predictions(spec.name, prep.train.column(prep.label), hard, yhat, prep.raw,
                               protected, prep.recipe, neighbors, spec, f"{spec.folds}-fold CV")
    report.metadata["folds"] = [{"size": s, "score": v} for s, v in per_fold]
    return Evaluation(report, yhat, hard)


def holdout(spec: ExperimentSpec, prep: Prepared | None = None,
            neighbors: np.ndarray | None = None) -> Evaluation:
    """Train on ``spec.data``, score on ``spec.test_data``."""
    prep = prep or prepare(spec)
    if prep.test is None:
        raise UsageError("hold-out evaluation needs test_data")
    if neighbors is None:
        neighbors = _neighbors(prep.test_raw, spec)
    model = train_model(spec, prep.train.all_rows(), prep.label, spec.protected)
    hard, yhat = model_outputs(model, prep.test, None, spec.score)
    report = score_predictions(spec.name, prep.test.column(prep.label), hard, yhat, prep.test_raw,
                               spec.protected, prep.recipe, neighbors, spec, "hold-out")
    return Evaluation(report, yhat, hard)


def evaluate(spec: ExperimentSpec) -> Evaluation:
    """Hold-out when the experiment names a test set, otherwise cross-validation."""
    return holdout(spec) if spec.test_data else cross_validate(spec)


def evaluate_model(model, data: Dataset, raw: Dataset, spec: ExperimentSpec,
                   recipe: BinarizeRecipe | None) -> Evaluation:
    """Score an already trained model on ``data``."""
    hard, yhat = model_outputs(model, data, None, spec.score)
    name = ("DT" if isinstance(model, DecisionTree) else "RF")
    report = score_predictions(name, data.column(model.label), hard, yhat, raw, model.protected,
                               recipe, _neighbors(raw, spec), spec, "stored model")
    return Evaluation(report, yhat, hard)


# -- all-features sweep ----------------------------------------------------------------

@dataclass
class SweepRow:
    feature: str
    metric: str  # "kway" or "maxd"
    raw_discrimination: float
    protected_discrimination: float
    protected_accuracy: float


@dataclass
class SweepResult:
    rows: list[SweepRow]
    mean: dict[str, float] = field(default_factory=dict)
    std: dict[str, float] = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])


SWEEP_STATS = ("raw_discrimination", "protected_discrimination", "protected_accuracy")


def feature_discrimination(yhat, ds: Dataset, feature: str) -> tuple[float, str]:
    """k-way discrimination for categorical columns, MaxD for numeric ones."""
    f = ds.field(feature)
    col = ds.column(feature)
    if f.is_categorical:
        if np.unique(col).size < 2:
            return 0.0, "kway"
        return discrimination_kway(yhat, col, k=f.arity), "kway"
    if np.unique(col).size < 2:
        return 0.0, "maxd"
    return max_discrimination(yhat, col)[0], "maxd"


def _sweep_predictions(prep: Prepared, protected: str | None, fair: bool):
    spec = prep.spec
    if prep.test is None:
        hard, yhat, _ = _out_of_fold(prep, protected, fair)
        return hard, yhat, prep.train
    model = train_model(spec, prep.train.all_rows(), prep.label, protected, fair)
    hard, yhat = model_outputs(model, prep.test, None, spec.score)
    return hard, yhat, prep.test


def protect_all_features_sweep(spec: ExperimentSpec, features: list[str] | None = None,
                               progress=None) -> SweepResult:
    """Protect each feature in turn and compare with one unprotected baseline.

    Columns are used as loaded (no binarization).  Categorical features are
    protected with the Gini criterion, numeric ones with the drift criterion.
    """
    spec = replace(spec, binarize=None, protected=None, mode="plain")
    prep = prepare(spec)
    if prep.train.field(prep.label).is_categorical is False:
        raise UsageError("the sweep reports accuracy and needs a categorical label")
    names = features or [n for n in prep.train.feature_names if n != prep.label]
    unknown = [n for n in names if n not in prep.train.feature_names]
    if unknown:
        raise UsageError(f"unknown sweep features: {unknown}")
    _, base, data = _sweep_predictions(prep, None, fair=False)
    truth = data.column(prep.label)
    rows = []
    for name in names:
        t0 = time.perf_counter()
        raw, metric = feature_discrimination(base, data, name)
        hard, yhat, _ = _sweep_predictions(prep, name, fair=True)
        prot, _ = feature_discrimination(yhat, data, name)
        rows.append(SweepRow(name, metric, raw, prot, accuracy(hard, truth)))
        if progress is not None:
            progress(rows[-1], time.perf_counter() - t0)
    result = SweepResult(rows)
    for stat in SWEEP_STATS:
        vals = result.column(stat)
        result.mean[stat] = float(vals.mean())
        result.std[stat] = float(vals.std())
    return result


# -- synthetic fixture -------------------------------------------------------------------

def fig5_fixture(seed: int = 0, n_per_cluster: int = 200) -> Dataset:
    """Two clusters with protected mean 0 but different spreads.

    ``split`` lies below 0.5 for the first cluster and above it for the
    second; ``protected`` is N(0, 1) in the first and N(0, 0.1^2) in the
    second.  ``label`` is the cluster id.
    """
    if n_per_cluster < 2:
        raise UsageError("n_per_cluster must be at least 2")
    rng = np.random.default_rng(seed)
    n = n_per_cluster
    split = np.concatenate([rng.uniform(0.0, 0.45, n), rng.uniform(0.55, 1.0, n)])
    prot = np.concatenate([rng.normal(0.0, 1.0, n), rng.normal(0.0, 0.1, n)])
    label = np.repeat(np.array([0, 1], dtype=np.int64), n)
    schema = [
        FeatureSchema("split", "numeric", "feature"),
        FeatureSchema("protected", "numeric", "protected"),
        FeatureSchema("label", "categorical", "label", ("cluster-1", "cluster-2")),
    ]
    return Dataset(schema, {"split": split, "protected": prot, "label": label})


# -- rendering -----------------------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)


def report_columns(reports: list[FairnessReport]) -> list[tuple[str, str]]:
    """(header, attribute) pairs: accuracy layout, regression layout, MaxD when present."""
    has_maxd = any(r.max_discrimination is not None for r in reports)
    if all(r.task == "classification" for r in reports):
        cols = [("Accuracy", "accuracy"), ("Discrim", "discrimination")]
        if has_maxd:
            cols.append(("MaxD", "max_discrimination"))
        cols += [("Incon", "inconsistency"), ("Delta", "delta")]
    else:
        cols = [("MSE", "mse"), ("RMSE", "rmse"), ("Discrim", "discrimination")]
        if has_maxd:
            cols.append(("MaxD", "max_discrimination"))
        cols.append(("Incon", "inconsistency"))
    return [("Model", "model")] + cols


def text_table(header: list[str], rows: list[list[str]], footer: list[list[str]] = ()) -> str:
    widths = [max(len(h), *(len(r[i]) for r in [*rows, *footer])) for i, h in enumerate(header)]

    def line(cells):
        return "  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(cells, widths)))

    out = [line(header), "  ".join("-" * w for w in widths)]
    out += [line(r) for r in rows]
    if footer:
        out.append("  ".join("-" * w for w in widths))
        out += [line(r) for r in footer]
    return "\n".join(out) + "\n"


def csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in r])
    return buf.getvalue()


def render_reports(reports: list[FairnessReport]) -> tuple[str, str]:
    """Aligned text table and CSV for a list of reports."""
    cols = report_columns(reports)
    header = [h for h, _ in cols]
    text = text_table(header, [[_fmt(getattr(r, a)) for _, a in cols] for r in reports])
    csv_cols = [("model", "model"), ("task", "task"), ("n_rows", "n_rows"), ("accuracy", "accuracy"),
                ("mse", "mse"), ("rmse", "rmse"), ("discrimination", "discrimination"),
                ("kway_discrimination", "kway_discrimination"),
                ("max_discrimination", "max_discrimination"),
                ("max_discrimination_threshold", "max_discrimination_threshold"),
                ("inconsistency", "inconsistency"), ("delta", "delta")]
    csv_out = csv_text([h for h, _ in csv_cols], [[getattr(r, a) for _, a in csv_cols] for r in reports])
    return text, csv_out


def render_sweep(result: SweepResult) -> tuple[str, str]:
    header = ["Feature", "Metric", "Raw Discrim", "Protected Discrim", "Protected Acc"]
    rows = [[r.feature, r.metric, _fmt(r.raw_discrimination), _fmt(r.protected_discrimination),
             _fmt(r.protected_accuracy)] for r in result.rows]
    footer = [["mean", ""] + [_fmt(result.mean[s]) for s in SWEEP_STATS],
              ["std", ""] + [_fmt(result.std[s]) for s in SWEEP_STATS]]
    text = text_table(header, rows, footer)
    csv_rows = [[r.feature, r.metric, r.raw_discrimination, r.protected_discrimination,
                 r.protected_accuracy] for r in result.rows]
    csv_rows += [["mean", ""] + [result.mean[s] for s in SWEEP_STATS],
                 ["std", ""] + [result.std[s] for s in SWEEP_STATS]]
    csv_out = csv_text(["feature", "metric", *SWEEP_STATS], csv_rows)
    return text, csv_out
