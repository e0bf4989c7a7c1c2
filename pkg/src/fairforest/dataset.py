"""Column store, schema sidecar parsing, subset views and fold assignment.

Schema sidecar grammar (one entry per CSV column, in CSV order)::

    # comment
    name,kind,role[,cat|cat|...]
    @binarize,source,threshold[,below_name,above_name]

``kind`` is ``categorical`` or ``numeric``; ``role`` is ``feature``, ``label``,
``protected`` or ``ignored``.  A declared category list fixes the code order;
otherwise categories are discovered in order of first appearance.
``@binarize`` lines are applied right after loading.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError, DomainError, SchemaError, UsageError

KINDS = ("categorical", "numeric")
ROLES = ("feature", "label", "protected", "ignored")


@dataclass(frozen=True)
class FeatureSchema:
    name: str
    kind: str
    role: str = "feature"
    categories: tuple[str, ...] = ()
    # set on binarized columns: name of the preserved numeric column and cut point
    numeric_source: str | None = None
    threshold: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.role not in ROLES:
            raise SchemaError(f"column {self.name!r}: unknown role {self.role!r}")

    @property
    def is_categorical(self) -> bool:
        return self.kind == "categorical"

    @property
    def arity(self) -> int:
        return len(self.categories)

    def to_dict(self) -> dict:
        d = {"name": self.name, "kind": self.kind, "role": self.role}
        if self.categories:
            d["categories"] = list(self.categories)
        if self.numeric_source is not None:
            d["numeric_source"] = self.numeric_source
            d["threshold"] = self.threshold
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSchema":
        return cls(
            name=d["name"], kind=d["kind"], role=d.get("role", "feature"),
            categories=tuple(d.get("categories", ())),
            numeric_source=d.get("numeric_source"), threshold=d.get("threshold"),
        )


@dataclass(frozen=True)
class BinarizeRecipe:
    source_feature: str
    threshold: float
    labels: tuple[str, str] | None = None

    def category_names(self) -> tuple[str, str]:
        if self.labels is not None:
            return self.labels
        return (f"<{self.threshold:g}", f">={self.threshold:g}")


@dataclass(frozen=True)
class MomentSummary:
    mean: float
    std_dev: float
    count: int


def _validate_schema(schema: Sequence[FeatureSchema]) -> None:
    names = [s.name for s in schema]
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise SchemaError(f"duplicate column names: {dupes}")
    labels = [s.name for s in schema if s.role == "label"]
    if len(labels) != 1:
        raise SchemaError(f"exactly one label column required, found {len(labels)}")
    if sum(s.role == "protected" for s in schema) > 1:
        raise SchemaError("at most one column may have role 'protected'")


class Dataset:
    """Immutable column-oriented table.

    Categorical columns hold int64 codes into ``schema[j].categories``; numeric
    columns hold float64.  Arrays are flagged read-only.
    """

    def __init__(self, schema: Sequence[FeatureSchema], columns: dict[str, np.ndarray]):
        schema = tuple(schema)
        _validate_schema(schema)
        lengths = {len(columns[s.name]) for s in schema}
        if len(lengths) > 1:
            raise DataError(f"columns have unequal lengths {sorted(lengths)}")
        self.schema = schema
        self.n_rows = lengths.pop() if lengths else 0
        self._fields = {s.name: s for s in schema}
        cols = {}
        for s in schema:
            arr = np.array(columns[s.name], dtype=np.int64 if s.is_categorical else np.float64)
            if s.is_categorical and s.role != "ignored" and arr.size:
                if arr.min() < 0 or arr.max() >= s.arity:
                    raise DataError(f"column {s.name!r}: codes outside [0, {s.arity})")
            arr.setflags(write=False)
            cols[s.name] = arr
        self._columns = cols
        self._fingerprint = None

    def __repr__(self):
        return f"Dataset(n_rows={self.n_rows}, columns={len(self.schema)})"

    def __len__(self):
        return self.n_rows

    def field(self, name: str) -> FeatureSchema:
        try:
            return self._fields[name]
        except KeyError:
            raise SchemaError(f"no column named {name!r}") from None

    def column(self, name: str) -> np.ndarray:
        self.field(name)
        return self._columns[name]

    @property
    def names(self) -> list[str]:
        return [s.name for s in self.schema]

    @property
    def label(self) -> str | None:
        return next((s.name for s in self.schema if s.role == "label"), None)

    @property
    def protected(self) -> str | None:
        return next((s.name for s in self.schema if s.role == "protected"), None)

    @property
    def feature_names(self) -> list[str]:
        """Columns usable as split candidates (role feature or protected)."""
        return [s.name for s in self.schema if s.role in ("feature", "protected")]

    def fingerprint(self) -> str:
        if self._fingerprint is None:
            blob = json.dumps([s.to_dict() for s in self.schema], sort_keys=True)
            self._fingerprint = hashlib.sha256(blob.encode()).hexdigest()[:16]
        return self._fingerprint

    def checksum(self) -> str:
        """Digest of schema and all column bytes."""
        h = hashlib.sha256(self.fingerprint().encode())
        for s in self.schema:
            h.update(self._columns[s.name].tobytes())
        return h.hexdigest()

    def all_rows(self) -> "SubsetView":
        return SubsetView(self, np.arange(self.n_rows, dtype=np.int64))

    def view(self, indices: Iterable[int]) -> "SubsetView":
        return SubsetView(self, np.asarray(list(indices) if not isinstance(indices, np.ndarray) else indices, dtype=np.int64))

    def with_schema(self, schema: Sequence[FeatureSchema]) -> "Dataset":
        """Same columns under a re-roled schema (names and kinds must match)."""
        for old, new in zip(self.schema, schema):
            if (old.name, old.kind, old.categories) != (new.name, new.kind, new.categories):
                raise SchemaError("with_schema may only change roles")
        return Dataset(schema, self._columns)

    def decode(self, name: str, codes: np.ndarray) -> list[str]:
        cats = self.field(name).categories
        return [cats[c] for c in codes]


@dataclass(frozen=True, eq=False)
class SubsetView:
    """Rows of a root :class:`Dataset` addressed by strictly increasing indices."""

    parent: Dataset
    row_indices: np.ndarray = field(repr=False)

    def __post_init__(self):
        idx = np.asarray(self.row_indices, dtype=np.int64)
        if idx.ndim != 1:
            raise UsageError("row_indices must be one-dimensional")
        if idx.size:
            if idx[0] < 0 or idx[-1] >= self.parent.n_rows:
                raise UsageError("row index out of range")
            if np.any(np.diff(idx) <= 0):
                raise UsageError("row_indices must be strictly increasing")
        idx.setflags(write=False)
        object.__setattr__(self, "row_indices", idx)

    def __len__(self):
        return int(self.row_indices.size)

    def values(self, name: str) -> np.ndarray:
        return self.parent.column(name)[self.row_indices]

    def field(self, name: str) -> FeatureSchema:
        return self.parent.field(name)

    def view(self, local_indices) -> "SubsetView":
        """Sub-view addressed by positions within this view."""
        local = np.asarray(local_indices, dtype=np.int64)
        return SubsetView(self.parent, self.row_indices[local])

    def select(self, mask: np.ndarray) -> "SubsetView":
        return SubsetView(self.parent, self.row_indices[np.asarray(mask, dtype=bool)])


# -- loading -----------------------------------------------------------------

def load_schema(schema_path) -> tuple[list[FeatureSchema], list[BinarizeRecipe]]:
    schema, recipes = [], []
    text = Path(schema_path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in next(csv.reader([line]))]
        if parts[0] == "@binarize":
            if len(parts) not in (3, 5):
                raise SchemaError(f"{schema_path}:{lineno}: @binarize,source,threshold[,below,above]")
            try:
                t = float(parts[2])
            except ValueError:
                raise SchemaError(f"{schema_path}:{lineno}: bad threshold {parts[2]!r}") from None
            labels = (parts[3], parts[4]) if len(parts) == 5 else None
            recipes.append(BinarizeRecipe(parts[1], t, labels))
            continue
        if len(parts) < 3:
            raise SchemaError(f"{schema_path}:{lineno}: expected name,kind,role")
        name, kind, role = parts[:3]
        cats = ()
        if len(parts) > 3 and parts[3]:
            if kind != "categorical":
                raise SchemaError(f"{schema_path}:{lineno}: categories given for numeric column")
            cats = tuple(parts[3].split("|"))
            if len(set(cats)) != len(cats):
                raise SchemaError(f"{schema_path}:{lineno}: duplicate categories")
        try:
            schema.append(FeatureSchema(name, kind, role, cats))
        except SchemaError as exc:
            raise SchemaError(f"{schema_path}:{lineno}: {exc}") from None
    _validate_schema(schema)
    return schema, recipes


def load_csv(data_path, schema_path) -> Dataset:
    """Load an RFC-4180 CSV whose header matches the schema sidecar."""
    schema, recipes = load_schema(schema_path)
    ds = _read_csv(Path(data_path), schema)
    for recipe in recipes:
        ds = binarize(ds, recipe)
    return ds


def _read_csv(path: Path, schema: list[FeatureSchema]) -> Dataset:
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: missing header row")
        header = [h.strip() for h in header]
        if len(header) != len(schema):
            raise DataError(f"{path}: {len(header)} columns but schema lists {len(schema)}")
        for h, s in zip(header, schema):
            if h != s.name:
                raise DataError(f"{path}: header column {h!r} does not match schema entry {s.name!r}")
        raw_cols = [[] for _ in schema]
        for rowno, row in enumerate(reader, 2):
            if not row:
                continue
            if len(row) != len(schema):
                raise DataError(f"{path}:{rowno}: expected {len(schema)} cells, found {len(row)}")
            for j, cell in enumerate(row):
                raw_cols[j].append(cell.strip())

    columns, final_schema = {}, []
    for s, cells in zip(schema, raw_cols):
        if s.kind == "numeric":
            arr = np.empty(len(cells), dtype=np.float64)
            for i, cell in enumerate(cells):
                if cell == "":
                    if s.role != "ignored":
                        raise DataError(f"{path}: missing value at row {i + 2}, column {s.name!r}")
                    arr[i] = math.nan
                    continue
                try:
                    arr[i] = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}: unparseable number {cell!r} at row {i + 2}, column {s.name!r}"
                    ) from None
            columns[s.name] = arr
            final_schema.append(s)
        else:
            lookup = {c: k for k, c in enumerate(s.categories)}
            discover = not s.categories
            codes = np.empty(len(cells), dtype=np.int64)
            for i, cell in enumerate(cells):
                if cell == "":
                    if s.role != "ignored":
                        raise DataError(f"{path}: missing value at row {i + 2}, column {s.name!r}")
                    codes[i] = -1
                    continue
                code = lookup.get(cell)
                if code is None:
                    if not discover:
                        raise DataError(
                            f"{path}: undeclared category {cell!r} at row {i + 2}, column {s.name!r}"
                        )
                    code = lookup[cell] = len(lookup)
                codes[i] = code
            columns[s.name] = codes
            final_schema.append(FeatureSchema(s.name, s.kind, s.role, tuple(lookup)))
    return Dataset(final_schema, columns)


def concat(first: Dataset, second: Dataset) -> Dataset:
    """Stack the rows of two datasets with identical schemas."""
    if first.fingerprint() != second.fingerprint():
        raise DataError("cannot concatenate datasets with different schemas")
    cols = {n: np.concatenate([first.column(n), second.column(n)]) for n in first.names}
    return Dataset(first.schema, cols)


def materialize(view: SubsetView) -> Dataset:
    return Dataset(view.parent.schema, {n: view.values(n) for n in view.parent.names})


# -- transforms ---------------------------------------------------------------

def binarize(ds: Dataset, recipe: BinarizeRecipe) -> Dataset:
    """Replace a numeric column by ``value >= threshold`` codes.

    The original values are kept as an ``ignored`` column named
    ``<source>_numeric`` so MaxD can still be computed on them.
    """
    src = ds.field(recipe.source_feature)
    if src.kind != "numeric":
        raise SchemaError(f"binarize: column {src.name!r} is not numeric")
    keep = f"{src.name}_numeric"
    if keep in ds.names:
        raise SchemaError(f"binarize: derived column {keep!r} already exists")
    values = ds.column(src.name)
    schema, cols = [], {}
    for s in ds.schema:
        if s.name == src.name:
            schema.append(FeatureSchema(
                s.name, "categorical", s.role, recipe.category_names(),
                numeric_source=keep, threshold=float(recipe.threshold),
            ))
            cols[s.name] = (values >= recipe.threshold).astype(np.int64)
        else:
            schema.append(s)
            cols[s.name] = ds.column(s.name)
    schema.append(FeatureSchema(keep, "numeric", "ignored"))
    cols[keep] = values
    return Dataset(schema, cols)


def make_folds(ds, folds: int, seed: int) -> list[tuple[SubsetView, SubsetView]]:
    """Seeded shuffle, then contiguous slices of near-equal size."""
    root = ds.parent if isinstance(ds, SubsetView) else ds
    rows = ds.row_indices if isinstance(ds, SubsetView) else np.arange(ds.n_rows, dtype=np.int64)
    n = rows.size
    if folds < 2:
        raise UsageError("folds must be at least 2")
    if folds > n:
        raise UsageError(f"folds ({folds}) exceeds row count ({n})")
    perm = rows[np.random.default_rng(seed).permutation(n)]
    out = []
    for chunk in np.array_split(perm, folds):
        test = np.sort(chunk)
        mask = np.ones(root.n_rows, dtype=bool)
        mask[test] = False
        train = rows[mask[rows]]
        out.append((SubsetView(root, train), SubsetView(root, test)))
    return out


def moments(view: SubsetView, feature: str) -> MomentSummary:
    s = view.field(feature)
    if s.kind != "numeric":
        raise SchemaError(f"moments: column {feature!r} is not numeric")
    if len(view) == 0:
        raise DomainError("moments of an empty view")
    values = view.values(feature)
    return MomentSummary(float(values.mean()), float(values.std()), int(values.size))
