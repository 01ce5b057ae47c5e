"""Mixed-type microdata: schema, validation, CSV round-trip, standardization.

A Dataset stores numeric columns as float64 arrays (NaN marks a missing
cell) and categorical columns as int64 code arrays (-1 marks missing),
keyed by an explicit per-column schema. Cell values at the API surface are
plain python floats, category labels, or None for missing.

Datasets and StandardizedViews are immutable after construction and safe
for concurrent reads.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DataValidationError, SchemaError

NUMERIC = "numeric"
CATEGORICAL = "categorical"

#: Default missing-value token in CSV files (configurable at the CLI).
NA_TOKEN = "NA"


@dataclass(frozen=True)
class ColumnSchema:
    """One column: a name, a kind, and (for categorical) its label set."""

    name: str
    kind: str
    categories: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise SchemaError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == CATEGORICAL:
            if not self.categories:
                raise SchemaError(f"column {self.name!r}: categorical without categories")
            object.__setattr__(self, "categories", tuple(self.categories))
            if len(set(self.categories)) != len(self.categories):
                raise SchemaError(f"column {self.name!r}: duplicate categories")
        elif self.categories is not None:
            raise SchemaError(f"column {self.name!r}: numeric column lists categories")


class Dataset:
    """n x p grid of validated cells plus its column schema."""

    def __init__(self, schema: Sequence[ColumnSchema], columns: Sequence[np.ndarray]):
        schema = tuple(schema)
        if not schema:
            raise SchemaError("dataset needs at least one column")
        names = [c.name for c in schema]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate column names")
        if len(columns) != len(schema):
            raise SchemaError("schema/column count mismatch")
        n = len(columns[0])
        if n < 1:
            raise DataValidationError("dataset needs at least one row")
        cols = []
        for spec, raw in zip(schema, columns):
            if len(raw) != n:
                raise DataValidationError("ragged columns")
            if spec.kind == NUMERIC:
                col = np.array(raw, dtype=np.float64)
                if np.isinf(col).any():
                    raise DataValidationError(f"column {spec.name!r}: non-finite value")
            else:
                col = np.array(raw, dtype=np.int64)
                ncat = len(spec.categories)
                if ((col < -1) | (col >= ncat)).any():
                    raise DataValidationError(f"column {spec.name!r}: code out of range")
            col.flags.writeable = False
            cols.append(col)
        self.schema = schema
        self.columns = tuple(cols)
        self.n = n
        self.p = len(schema)
        self._index = {c.name: j for j, c in enumerate(schema)}

    # -- construction -------------------------------------------------

    @classmethod
    def from_rows(cls, schema: Sequence[ColumnSchema], rows: Iterable[Sequence]) -> "Dataset":
        """Build from row-major cell values (numbers, labels, None for missing)."""
        schema = tuple(schema)
        rows = list(rows)
        if not rows:
            raise DataValidationError("dataset needs at least one row")
        columns = []
        for j, spec in enumerate(schema):
            if spec.kind == NUMERIC:
                col = np.empty(len(rows), dtype=np.float64)
            else:
                col = np.empty(len(rows), dtype=np.int64)
                lookup = {label: c for c, label in enumerate(spec.categories)}
            for i, row in enumerate(rows):
                if len(row) != len(schema):
                    raise DataValidationError(f"row {i}: expected {len(schema)} cells, got {len(row)}")
                v = row[j]
                if spec.kind == NUMERIC:
                    if v is None:
                        col[i] = np.nan
                    else:
                        x = float(v)
                        if not math.isfinite(x):
                            raise DataValidationError(f"row {i}, column {spec.name!r}: non-finite value")
                        col[i] = x
                else:
                    if v is None:
                        col[i] = -1
                    elif v in lookup:
                        col[i] = lookup[v]
                    else:
                        raise DataValidationError(
                            f"row {i}, column {spec.name!r}: label {v!r} not in declared categories"
                        )
            columns.append(col)
        return cls(schema, columns)

    # -- access -------------------------------------------------------

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.schema)

    def column_index(self, name: str) -> int:
        if name not in self._index:
            raise SchemaError(f"no column named {name!r}")
        return self._index[name]

    def column(self, name: str) -> np.ndarray:
        return self.columns[self.column_index(name)]

    def cell(self, i: int, j: int):
        """Cell value: float, label, or None when missing."""
        spec = self.schema[j]
        raw = self.columns[j][i]
        if spec.kind == NUMERIC:
            return None if np.isnan(raw) else float(raw)
        return None if raw < 0 else spec.categories[raw]

    def row(self, i: int) -> tuple:
        return tuple(self.cell(i, j) for j in range(self.p))

    def iter_rows(self) -> Iterable[tuple]:
        return (self.row(i) for i in range(self.n))

    def missing_mask(self) -> np.ndarray:
        """n x p boolean mask of missing cells."""
        out = np.empty((self.n, self.p), dtype=bool)
        for j, spec in enumerate(self.schema):
            col = self.columns[j]
            out[:, j] = np.isnan(col) if spec.kind == NUMERIC else col < 0
        return out

    def subset(self, row_indices: np.ndarray) -> "Dataset":
        """New dataset holding the given rows (original order of `row_indices`)."""
        idx = np.asarray(row_indices, dtype=np.int64)
        return Dataset(self.schema, [col[idx] for col in self.columns])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        if self.schema != other.schema or self.n != other.n:
            return False
        for spec, a, b in zip(self.schema, self.columns, other.columns):
            if spec.kind == NUMERIC:
                if not np.array_equal(a, b, equal_nan=True):
                    return False
            elif not np.array_equal(a, b):
                return False
        return True

    def __repr__(self) -> str:
        return f"Dataset(n={self.n}, p={self.p})"


# -- schema JSON -----------------------------------------------------


def schema_to_json(schema: Sequence[ColumnSchema]) -> list[dict]:
    out = []
    for c in schema:
        entry = {"name": c.name, "kind": c.kind}
        if c.kind == CATEGORICAL:
            entry["categories"] = list(c.categories)
        out.append(entry)
    return out


def schema_from_json(obj) -> tuple[ColumnSchema, ...]:
    if not isinstance(obj, list):
        raise SchemaError("schema JSON must be a list of column objects")
    cols = []
    for entry in obj:
        try:
            cols.append(
                ColumnSchema(
                    name=entry["name"],
                    kind=entry["kind"],
                    categories=tuple(entry["categories"]) if "categories" in entry else None,
                )
            )
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed schema entry {entry!r}") from exc
    return tuple(cols)


def load_schema(path) -> tuple[ColumnSchema, ...]:
    with open(path, "r", encoding="utf-8") as fh:
        return schema_from_json(json.load(fh))


def save_schema(schema: Sequence[ColumnSchema], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(schema_to_json(schema), fh, indent=2)
        fh.write("\n")


# -- CSV I/O ----------------------------------------------------------


def _parse_finite(token: str) -> float | None:
    try:
        x = float(token)
    except ValueError:
        return None
    return x if math.isfinite(x) else None


def load_csv(path, schema="infer", na: str = NA_TOKEN) -> Dataset:
    """Read a header-ed CSV into a validated Dataset.

    With schema="infer", a column is numeric iff every non-missing token
    parses as a finite number; otherwise it is categorical with the sorted
    distinct labels as categories.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataValidationError(f"{path}: empty file") from None
        raw_rows = list(reader)
    if not raw_rows:
        raise DataValidationError(f"{path}: no data rows")
    for i, row in enumerate(raw_rows):
        if len(row) != len(header):
            raise DataValidationError(f"{path}: row {i + 1} has {len(row)} fields, expected {len(header)}")

    if schema == "infer":
        schema = _infer_schema(header, raw_rows, na)
    else:
        schema = tuple(schema)
        if [c.name for c in schema] != header:
            raise SchemaError(f"{path}: header {header} does not match schema names")

    rows = []
    for i, raw in enumerate(raw_rows):
        row = []
        for j, spec in enumerate(schema):
            token = raw[j]
            if token == na:
                row.append(None)
            elif spec.kind == NUMERIC:
                x = _parse_finite(token)
                if x is None:
                    raise DataValidationError(
                        f"{path}: row {i + 1}, column {spec.name!r}: bad numeric token {token!r}"
                    )
                row.append(x)
            else:
                row.append(token)
        rows.append(row)
    return Dataset.from_rows(schema, rows)


def _infer_schema(header, raw_rows, na) -> tuple[ColumnSchema, ...]:
    cols = []
    for j, name in enumerate(header):
        tokens = [row[j] for row in raw_rows if row[j] != na]
        if all(_parse_finite(t) is not None for t in tokens):
            cols.append(ColumnSchema(name, NUMERIC))
        else:
            cols.append(ColumnSchema(name, CATEGORICAL, tuple(sorted(set(tokens)))))
    return tuple(cols)


def write_csv(d: Dataset, path, na: str = NA_TOKEN) -> None:
    """Write a Dataset; load_csv with the same schema reproduces it exactly.

    Numeric cells use shortest round-trip decimal rendering, so the
    float64 bits survive the trip.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(d.column_names)
        for i in range(d.n):
            out = []
            for j, spec in enumerate(d.schema):
                v = d.cell(i, j)
                if v is None:
                    out.append(na)
                elif spec.kind == NUMERIC:
                    out.append(repr(v))
                else:
                    out.append(v)
            writer.writerow(out)


# -- standardization --------------------------------------------------


@dataclass(frozen=True)
class StandardizedView:
    """Numeric columns z-scored (sample sd), categoricals passed through as codes.

    Means and sds are retained so other datasets with the same schema can be
    mapped into the same coordinates (apply_to) or values mapped back.
    Constant numeric columns become all-zero (sd is recorded as 0).
    """

    source: Dataset
    numeric_names: tuple[str, ...]
    values: np.ndarray          # n x p_num, z-scored, NaN = missing
    means: np.ndarray
    sds: np.ndarray             # 0 where the column was constant or too short
    categorical_names: tuple[str, ...]
    codes: np.ndarray           # n x p_cat, -1 = missing
    category_counts: tuple[int, ...] = field(default=())

    @property
    def n(self) -> int:
        return self.source.n

    def apply_to(self, other: Dataset) -> "StandardizedView":
        """View of `other` in this view's coordinates (same schema required)."""
        if other.schema != self.source.schema:
            raise SchemaError("schema mismatch between datasets")
        values, codes = _split_parts(other)
        with np.errstate(invalid="ignore"):
            z = np.where(self.sds > 0, (values - self.means) / np.where(self.sds > 0, self.sds, 1.0), 0.0)
        z[np.isnan(values)] = np.nan
        return StandardizedView(
            source=other,
            numeric_names=self.numeric_names,
            values=z,
            means=self.means,
            sds=self.sds,
            categorical_names=self.categorical_names,
            codes=codes,
            category_counts=self.category_counts,
        )


def _split_parts(d: Dataset) -> tuple[np.ndarray, np.ndarray]:
    num = [d.columns[j] for j, c in enumerate(d.schema) if c.kind == NUMERIC]
    cat = [d.columns[j] for j, c in enumerate(d.schema) if c.kind == CATEGORICAL]
    values = np.column_stack(num) if num else np.empty((d.n, 0))
    codes = np.column_stack(cat) if cat else np.empty((d.n, 0), dtype=np.int64)
    return values, codes


def standardize(d: Dataset) -> StandardizedView:
    """Zero-mean unit-sd view of the numeric columns; missing cells stay missing."""
    values, codes = _split_parts(d)
    num_names = tuple(c.name for c in d.schema if c.kind == NUMERIC)
    cat_names = tuple(c.name for c in d.schema if c.kind == CATEGORICAL)
    cat_counts = tuple(len(c.categories) for c in d.schema if c.kind == CATEGORICAL)

    p_num = values.shape[1]
    means = np.zeros(p_num)
    sds = np.zeros(p_num)
    z = np.full_like(values, np.nan)
    for c in range(p_num):
        col = values[:, c]
        present = ~np.isnan(col)
        m = int(present.sum())
        if m == 0:
            continue
        mean = float(col[present].mean())
        sd = float(col[present].std(ddof=1)) if m >= 2 else 0.0
        means[c] = mean
        sds[c] = sd
        z[present, c] = (col[present] - mean) / sd if sd > 0 else 0.0
    return StandardizedView(
        source=d,
        numeric_names=num_names,
        values=z,
        means=means,
        sds=sds,
        categorical_names=cat_names,
        codes=codes,
        category_counts=cat_counts,
    )
