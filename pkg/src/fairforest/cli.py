"""Command-line interface: train, predict, evaluate, sweep, importance, inspect.

Exit codes: 0 success, 2 usage error, 3 data or model error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import serialization
from .dataset import BinarizeRecipe, binarize, load_csv
from .errors import FairForestError, UsageError
from .evaluation import (
    ExperimentSpec, csv_text, evaluate, evaluate_model, model_outputs,
    protect_all_features_sweep, render_reports, render_sweep, text_table, train_model,
)
from .forest import ForestModel, importance
from .tree import mdi_contributions, print_tree

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 2, 3


# -- argument helpers ----------------------------------------------------------------

def _add_data(p, required=True):
    p.add_argument("--data", required=required, help="CSV file with a header row")
    p.add_argument("--schema", required=required, help="schema sidecar for --data")


def _add_model(p):
    p.add_argument("--model", choices=("tree", "forest"), default="forest")
    p.add_argument("--fair", action="store_true", help="penalize splits that separate the protected groups")
    p.add_argument("--protected", help="protected column")
    p.add_argument("--protected-binarize", type=float, metavar="T",
                   help="turn a numeric protected column into groups <T and >=T")
    p.add_argument("--trees", type=int, default=100, help="forest size (default 100)")
    p.add_argument("--depth", type=int, default=None, help="maximum depth (default unlimited)")
    p.add_argument("--min-leaf", type=int, default=1, help="minimum rows per leaf")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1, help="worker processes for forest fitting")


def _add_metrics(p):
    p.add_argument("--score", choices=("hard", "mean"), default="hard",
                   help="predictions fed to the metrics: 0/1 labels or class-1 frequency")
    p.add_argument("--knn-k", type=int, default=5, help="neighbours for inconsistency")
    p.add_argument("--knn-exclude-protected", action="store_true")


def _mode(args, ds_raw) -> str:
    if not args.fair:
        return "plain"
    if args.protected is None:
        raise UsageError("--fair requires --protected")
    kind = ds_raw.field(args.protected).kind
    if kind == "numeric" and args.protected_binarize is None:
        return "fair_continuous"
    return "fair"


def _spec_from_args(args, **extra) -> ExperimentSpec:
    raw = load_csv(args.data, args.schema)
    if args.protected is not None:
        raw.field(args.protected)  # unknown column -> schema error
    return ExperimentSpec(
        data=args.data, schema=args.schema, test_data=getattr(args, "test_data", None),
        model=args.model, mode=_mode(args, raw), protected=args.protected,
        binarize=args.protected_binarize, seed=args.seed, n_trees=args.trees,
        max_depth=args.depth, min_samples_leaf=args.min_leaf, n_jobs=args.jobs,
        **extra,
    )


def _recipe(spec: ExperimentSpec) -> BinarizeRecipe | None:
    if spec.binarize is None or spec.mode == "fair_continuous":
        return None
    return BinarizeRecipe(spec.protected, float(spec.binarize))


def _load_for_model(recipe, data, schema):
    raw = load_csv(data, schema)
    return (binarize(raw, recipe) if recipe else raw), raw


def _write(text: str, path: str | None, out=None) -> None:
    if path is None:
        (out or sys.stdout).write(text)
    else:
        Path(path).write_text(text)


def _n_nodes(model) -> int:
    trees = model.trees if isinstance(model, ForestModel) else [model]
    return sum(t.n_nodes for t in trees)


# -- commands -----------------------------------------------------------------------------

def cmd_train(args) -> int:
    spec = _spec_from_args(args)
    recipe = _recipe(spec)
    ds, _ = _load_for_model(recipe, spec.data, spec.schema)
    if args.protected is not None and ds.field(args.protected).role == "label":
        raise UsageError("the label cannot be the protected attribute")
    t0 = time.perf_counter()
    model = train_model(spec, ds.all_rows(), ds.label, spec.protected)
    elapsed = time.perf_counter() - t0
    serialization.save(model, args.out, recipe)
    n_trees = len(model.trees) if isinstance(model, ForestModel) else 1
    print(f"trained {spec.name}: trees={n_trees} nodes={_n_nodes(model)} "
          f"time={elapsed:.2f}s -> {args.out}")
    return EXIT_OK


def cmd_predict(args) -> int:
    model, recipe = serialization.load(args.model_file)
    ds, _ = _load_for_model(recipe, args.data, args.schema)
    hard, yhat = model_outputs(model, ds, None, "mean")
    if hard is None:
        header, rows = ["row", "prediction"], [[i, float(v)] for i, v in enumerate(yhat)]
    else:
        names = model.classes
        header = ["row", "prediction", f"score_{names[1] if len(names) > 1 else names[0]}"]
        rows = [[i, names[h], float(s)] for i, (h, s) in enumerate(zip(hard, yhat))]
    _write(csv_text(header, rows), args.out)
    return EXIT_OK


def _specs_from_config(path) -> list[ExperimentSpec]:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from None
    base = Path(path).parent
    items = raw if isinstance(raw, list) else [raw]
    return [ExperimentSpec.from_dict(d, base=base) for d in items]


def cmd_evaluate(args) -> int:
    if args.model_file:
        if not (args.data and args.schema):
            raise UsageError("--model-file needs --data and --schema")
        model, recipe = serialization.load(args.model_file)
        ds, raw = _load_for_model(recipe, args.data, args.schema)
        spec = ExperimentSpec(args.data, args.schema, protected=model.protected, score=args.score,
                              knn_k=args.knn_k, knn_include_protected=not args.knn_exclude_protected)
        reports = [evaluate_model(model, ds, raw, spec, recipe).report]
    else:
        if args.config:
            specs = _specs_from_config(args.config)
        elif args.data and args.schema:
            specs = [_spec_from_args(args, folds=args.folds, score=args.score, knn_k=args.knn_k,
                                     knn_include_protected=not args.knn_exclude_protected)]
        else:
            raise UsageError("evaluate needs --config, --model-file, or --data with --schema")
        reports = [evaluate(s).report for s in specs]
    text, csv_out = render_reports(reports)
    sys.stdout.write(text)
    if args.csv:
        _write(csv_out, args.csv)
    if args.json:
        _write(json.dumps([r.to_dict() for r in reports], indent=1, sort_keys=True) + "\n", args.json)
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec = ExperimentSpec(
        data=args.data, schema=args.schema, test_data=args.test_data, model="forest",
        folds=args.folds, seed=args.seed, n_trees=args.trees, max_depth=args.depth,
        min_samples_leaf=args.min_leaf, n_jobs=args.jobs, score=args.score,
    )

    def progress(row, secs):
        print(f"  {row.feature}: protected={row.protected_discrimination:.4f} "
              f"acc={row.protected_accuracy:.4f} ({secs:.1f}s)", file=sys.stderr)

    result = protect_all_features_sweep(spec, args.features, progress if args.verbose else None)
    text, csv_out = render_sweep(result)
    sys.stdout.write(text)
    if args.csv:
        _write(csv_out, args.csv)
    if args.plot:
        from .plotting import sweep_chart
        sweep_chart(result, args.plot)
    return EXIT_OK


def _importance_of(model) -> dict[str, float]:
    if isinstance(model, ForestModel):
        return importance(model)
    raw = mdi_contributions(model)
    top = max(raw.values(), default=0.0)
    return {k: (v / top if top > 0 else 0.0) for k, v in raw.items()}


def cmd_importance(args) -> int:
    columns: dict[str, dict[str, float]] = {}
    if args.train_pair:
        if not (args.data and args.schema and args.protected):
            raise UsageError("--train-pair needs --data, --schema and --protected")
        args.fair = True
        spec = _spec_from_args(args)
        recipe = _recipe(spec)
        ds, _ = _load_for_model(recipe, spec.data, spec.schema)
        columns["standard"] = _importance_of(train_model(spec, ds.all_rows(), ds.label, spec.protected, False))
        columns["fair"] = _importance_of(train_model(spec, ds.all_rows(), ds.label, spec.protected, True))
        schema_names = [n for n in ds.feature_names if n != ds.label]
    else:
        if not args.model_file:
            raise UsageError("importance needs --model-file (once or twice) or --train-pair")
        if len(args.model_file) > 2:
            raise UsageError("at most two model files")
        tags = ["standard", "fair"] if len(args.model_file) == 2 else ["importance"]
        fingerprints = set()
        for tag, path in zip(tags, args.model_file):
            model, _ = serialization.load(path)
            fingerprints.add(model.fingerprint)
            columns[tag] = _importance_of(model)
        if len(fingerprints) > 1:
            raise serialization.ModelFileError("model files were trained on different schemas")
        first = next(iter(columns.values()))
        schema_names = list(first)
    names = [n for n in schema_names if any(n in c for c in columns.values())]
    header = ["feature", *columns]
    rows = [[n, *(c.get(n, 0.0) for c in columns.values())] for n in names]
    csv_out = csv_text(header, rows)
    if args.csv:
        _write(csv_out, args.csv)
        sys.stdout.write(text_table(header, [[r[0], *(f"{v:.4f}" for v in r[1:])] for r in rows]))
    else:
        sys.stdout.write(csv_out)
    if args.plot:
        from .plotting import importance_chart
        importance_chart(names, {k.capitalize(): [c.get(n, 0.0) for n in names] for k, c in columns.items()},
                         args.plot)
    return EXIT_OK


def cmd_inspect(args) -> int:
    model, _ = serialization.load(args.model_file)
    trees = model.trees if isinstance(model, ForestModel) else [model]
    if not 0 <= args.tree < len(trees):
        raise UsageError(f"tree index {args.tree} out of range (model has {len(trees)} trees)")
    sys.stdout.write(print_tree(trees[args.tree]))
    return EXIT_OK


# -- parser ----------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairforest", description="Fair decision trees and forests")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a model and write a model file")
    _add_data(p)
    _add_model(p)
    p.add_argument("--out", required=True, help="model file to write")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict every row of a CSV")
    p.add_argument("--model-file", required=True)
    _add_data(p)
    p.add_argument("--out", help="CSV output (default stdout)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="accuracy and fairness metrics")
    _add_data(p, required=False)
    _add_model(p)
    _add_metrics(p)
    p.add_argument("--config", help="JSON experiment (object or list of objects)")
    p.add_argument("--model-file", help="score a stored model instead of training")
    p.add_argument("--test-data", help="hold-out CSV; without it, cross-validate")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--csv", help="also write the report as CSV")
    p.add_argument("--json", help="also write the full reports as JSON")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="protect every feature in turn")
    _add_data(p)
    p.add_argument("--test-data")
    p.add_argument("--features", nargs="+", help="subset of features to sweep")
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--min-leaf", type=int, default=1)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--score", choices=("hard", "mean"), default="hard")
    p.add_argument("--csv")
    p.add_argument("--plot", help="figure path (.png, .pdf or .svg)")
    p.add_argument("-v", "--verbose", action="store_true", help="per-feature progress on stderr")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("importance", help="normalized MDI feature importance")
    p.add_argument("--model-file", action="append", help="model file; give twice for standard and fair")
    p.add_argument("--train-pair", action="store_true", help="train standard and fair forests from the data")
    _add_data(p, required=False)
    _add_model(p)
    p.add_argument("--csv", help="write CSV here and print a table")
    p.add_argument("--plot", help="figure path (.png, .pdf or .svg)")
    p.set_defaults(func=cmd_importance)

    p = sub.add_parser("inspect", help="print one tree of a model file")
    p.add_argument("--model-file", required=True)
    p.add_argument("--tree", type=int, default=0)
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"fairforest: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FairForestError, OSError) as exc:
        print(f"fairforest: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
