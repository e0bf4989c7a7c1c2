"""Versioned JSON model files for trees and forests.

Layout::

    {"format": "fairforest-model", "version": 1, "kind": "tree" | "forest",
     "schema_fingerprint": ..., "schema": [...], "label": ..., "protected": ...,
     "preprocess": {"binarize": {...}} | null, "config": {...},
     "trees": [{"nodes": [...]}, ...]}

Nodes are stored in pre-order; an internal node is followed by its
children's subtrees in branch order.  Keys are sorted and floats written
with ``repr`` precision, so equal models serialize to identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .dataset import BinarizeRecipe, FeatureSchema
from .errors import ModelFileError
from .forest import ForestConfig, ForestModel
from .tree import DecisionTree, Leaf, Split, TreeConfig

FORMAT = "fairforest-model"
VERSION = 1


def _value(v):
    if isinstance(v, np.ndarray):
        return [float(x) for x in v]
    return float(v)


def _node_dict(node) -> dict:
    d = {"value": _value(node.value), "support": int(node.support), "weight": float(node.weight)}
    if node.is_leaf:
        d["kind"] = "leaf"
        return d
    d.update({
        "feature": node.feature,
        "kind": "categorical" if node.categorical else "numeric",
        "label_gain": float(node.label_gain),
        "protected_gain": float(node.protected_gain),
    })
    if node.categorical:
        d["codes"] = [int(c) for c in node.codes]
    else:
        d["threshold"] = float(node.threshold)
    return d


def tree_nodes(tree: DecisionTree) -> list[dict]:
    return [_node_dict(n) for n in tree.nodes()]


def _build(nodes: list[dict], classifier: bool):
    it = iter(nodes)

    def payload(d):
        v = d["value"]
        return np.asarray(v, dtype=np.float64) if classifier else float(v)

    def take():
        try:
            d = next(it)
        except StopIteration:
            raise ModelFileError("node list ends inside a subtree") from None
        kind = d.get("kind")
        if kind == "leaf":
            return Leaf(payload(d), d["support"], d["weight"])
        if kind == "numeric":
            children = [take(), take()]
            return Split(d["feature"], float(d["threshold"]), None, children, payload(d),
                         d["support"], d["weight"], d["label_gain"], d["protected_gain"])
        if kind == "categorical":
            children = [take() for _ in d["codes"]]
            return Split(d["feature"], None, list(d["codes"]), children, payload(d),
                         d["support"], d["weight"], d["label_gain"], d["protected_gain"])
        raise ModelFileError(f"unknown node kind {kind!r}")

    root = take()
    if next(it, None) is not None:
        raise ModelFileError("trailing nodes after the root subtree")
    return root


def to_dict(model, recipe: BinarizeRecipe | None = None) -> dict:
    if isinstance(model, ForestModel):
        kind, trees, config = "forest", model.trees, model.config.to_dict()
    elif isinstance(model, DecisionTree):
        kind, trees, config = "tree", [model], model.config.to_dict()
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    first = trees[0]
    return {
        "format": FORMAT,
        "version": VERSION,
        "kind": kind,
        "schema_fingerprint": first.fingerprint,
        "schema": [s.to_dict() for s in first.schema],
        "label": first.label,
        "protected": first.protected,
        "preprocess": None if recipe is None else {"binarize": {
            "source": recipe.source_feature, "threshold": float(recipe.threshold),
            "labels": list(recipe.labels) if recipe.labels else None,
        }},
        "config": config,
        "trees": [{"nodes": tree_nodes(t)} for t in trees],
    }


def dumps(model, recipe: BinarizeRecipe | None = None) -> str:
    return json.dumps(to_dict(model, recipe), sort_keys=True, indent=1) + "\n"


def save(model, path, recipe: BinarizeRecipe | None = None) -> None:
    Path(path).write_text(dumps(model, recipe))


def from_dict(d: dict):
    """Returns ``(model, recipe)``."""
    if d.get("format") != FORMAT:
        raise ModelFileError("not a fairforest model file")
    if d.get("version") != VERSION:
        raise ModelFileError(f"unsupported model file version {d.get('version')!r}")
    try:
        schema = tuple(FeatureSchema.from_dict(s) for s in d["schema"])
        label, protected = d["label"], d["protected"]
        classifier = next(s for s in schema if s.name == label).is_categorical
        pre = d.get("preprocess")
        recipe = None
        if pre and pre.get("binarize"):
            b = pre["binarize"]
            recipe = BinarizeRecipe(b["source"], b["threshold"], tuple(b["labels"]) if b["labels"] else None)
        if d["kind"] == "forest":
            cfg = ForestConfig.from_dict(d["config"])
            tree_cfg = cfg.tree
        elif d["kind"] == "tree":
            cfg = tree_cfg = TreeConfig.from_dict(d["config"])
        else:
            raise ModelFileError(f"unknown model kind {d['kind']!r}")
        trees = [DecisionTree(_build(t["nodes"], classifier), schema, d["schema_fingerprint"],
                              label, protected, tree_cfg) for t in d["trees"]]
    except (KeyError, TypeError, StopIteration) as exc:
        raise ModelFileError(f"malformed model file: {exc!r}") from None
    if not trees:
        raise ModelFileError("model file holds no trees")
    if d["kind"] == "tree":
        if len(trees) != 1:
            raise ModelFileError("a tree model file must hold exactly one tree")
        return trees[0], recipe
    return ForestModel(trees, cfg), recipe


def load(path):
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ModelFileError(f"{path}: no such model file") from None
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"{path}: invalid JSON ({exc})") from None
    return from_dict(raw)
