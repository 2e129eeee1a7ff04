"""Typed mixed-attribute tabular data: loading, cleaning, standardization.

A :class:`MixedDataset` is an immutable columnar table whose columns are
either categorical (nominal/ordinal, stored as integer codes into a level
list) or continuous (stored as float64). All operations return new values.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConstantColumn, ParseFailure

CATEGORICAL_KINDS = ("nominal", "ordinal")
VALID_KINDS = CATEGORICAL_KINDS + ("continuous",)

MISSING_LEVEL = "__NA__"


@dataclass(frozen=True)
class AttributeSchema:
    """Name, kind and (for categorical kinds) ordered level labels."""

    name: str
    kind: str
    levels: tuple = ()

    def __post_init__(self):
        if self.kind not in VALID_KINDS:
            raise ValueError(f"unknown attribute kind {self.kind!r}")
        if self.kind == "continuous" and self.levels:
            raise ValueError(f"continuous attribute {self.name!r} cannot have levels")
        if len(set(self.levels)) != len(self.levels):
            raise ValueError(f"duplicate levels in attribute {self.name!r}")

    @property
    def is_categorical(self) -> bool:
        return self.kind in CATEGORICAL_KINDS


@dataclass(frozen=True)
class MixedDataset:
    """Immutable columnar table of categorical codes and continuous values."""

    schema: tuple
    categorical_codes: dict
    continuous_values: dict
    row_index: np.ndarray = field(default=None)

    def __post_init__(self):
        names = [a.name for a in self.schema]
        if len(set(names)) != len(names):
            raise ValueError("attribute names must be unique")
        # n_rows = 0 is allowed only for derived row subsets; loaders
        # reject empty inputs
        n = self.n_rows
        for a in self.schema:
            if a.is_categorical:
                codes = self.categorical_codes[a.name]
                if len(codes) != n:
                    raise ValueError(f"column {a.name!r} has wrong length")
                if len(codes) and (codes.min() < 0 or codes.max() >= len(a.levels)):
                    raise ValueError(f"code out of range for attribute {a.name!r}")
            else:
                if len(self.continuous_values[a.name]) != n:
                    raise ValueError(f"column {a.name!r} has wrong length")
        if self.row_index is None:
            object.__setattr__(self, "row_index", np.arange(n))
        elif len(self.row_index) != n:
            raise ValueError("row_index has wrong length")

    @property
    def n_rows(self) -> int:
        for a in self.schema:
            col = (self.categorical_codes if a.is_categorical
                   else self.continuous_values)[a.name]
            return len(col)
        raise ValueError("dataset has no attributes")

    @property
    def categorical_schema(self) -> tuple:
        return tuple(a for a in self.schema if a.is_categorical)

    @property
    def continuous_schema(self) -> tuple:
        return tuple(a for a in self.schema if not a.is_categorical)

    @property
    def p_c(self) -> int:
        return len(self.categorical_schema)

    @property
    def p_n(self) -> int:
        return len(self.continuous_schema)

    def attribute(self, name: str) -> AttributeSchema:
        for a in self.schema:
            if a.name == name:
                return a
        raise KeyError(name)

    def select_rows(self, mask_or_index) -> "MixedDataset":
        """New dataset restricted to the given boolean mask or index array."""
        idx = np.asarray(mask_or_index)
        return MixedDataset(
            schema=self.schema,
            categorical_codes={k: v[idx] for k, v in self.categorical_codes.items()},
            continuous_values={k: v[idx] for k, v in self.continuous_values.items()},
            row_index=self.row_index[idx],
        )


def load_schema(schema_path) -> list:
    """Read the column-kind declaration file: {"columns": [{"name", "kind"}]}."""
    with open(schema_path) as fh:
        doc = json.load(fh)
    cols = doc.get("columns")
    if not cols:
        raise ParseFailure(f"schema file {schema_path} declares no columns")
    out = []
    for c in cols:
        if c["kind"] not in VALID_KINDS:
            raise ParseFailure(f"unknown kind {c['kind']!r} for column {c['name']!r}")
        out.append((c["name"], c["kind"]))
    return out


def load_csv(path, schema_path, missing_as_level: bool = False) -> MixedDataset:
    """Load an RFC-4180 CSV with header into a typed MixedDataset.

    Categorical levels are enumerated in first-appearance order. Missing
    (empty) cells are rejected with a row/column diagnostic unless
    ``missing_as_level`` maps missing categorical cells to ``__NA__``.
    """
    declared = load_schema(schema_path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseFailure(f"{path}: empty file")
        rows = list(reader)
    if not rows:
        raise ParseFailure(f"{path}: no data rows")

    col_pos = {name: i for i, name in enumerate(header)}
    for name, _ in declared:
        if name not in col_pos:
            raise ParseFailure(f"{path}: schema column {name!r} not in CSV header")

    schema = []
    categorical_codes = {}
    continuous_values = {}
    for name, kind in declared:
        pos = col_pos[name]
        raw = [r[pos] for r in rows]
        if kind == "continuous":
            values = np.empty(len(raw))
            for i, tok in enumerate(raw):
                if tok == "":
                    raise ParseFailure(
                        f"{path}: missing value at row {i + 2}, column {name!r}")
                try:
                    values[i] = float(tok)
                except ValueError:
                    raise ParseFailure(
                        f"{path}: non-numeric token {tok!r} at row {i + 2}, "
                        f"column {name!r}")
            schema.append(AttributeSchema(name, kind))
            continuous_values[name] = values
        else:
            level_of = {}
            codes = np.empty(len(raw), dtype=np.int64)
            for i, tok in enumerate(raw):
                if tok == "":
                    if not missing_as_level:
                        raise ParseFailure(
                            f"{path}: missing value at row {i + 2}, "
                            f"column {name!r}")
                    tok = MISSING_LEVEL
                codes[i] = level_of.setdefault(tok, len(level_of))
            schema.append(AttributeSchema(name, kind, tuple(level_of)))
            categorical_codes[name] = codes
    return MixedDataset(tuple(schema), categorical_codes, continuous_values)


def _format_real(x: float) -> str:
    # shortest decimal that round-trips to the same float64
    return repr(float(x))


def write_csv(d: MixedDataset, path) -> None:
    """Write the dataset back to CSV (schema column order, level labels)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([a.name for a in d.schema])
        cols = []
        for a in d.schema:
            if a.is_categorical:
                levels = np.asarray(a.levels, dtype=object)
                cols.append(levels[d.categorical_codes[a.name]])
            else:
                cols.append([_format_real(x) for x in d.continuous_values[a.name]])
        for row in zip(*cols):
            writer.writerow(row)


def standardize(d: MixedDataset) -> MixedDataset:
    """Center every continuous column and scale to population sd 1."""
    out = dict(d.continuous_values)
    for a in d.continuous_schema:
        v = d.continuous_values[a.name]
        sd = v.std()  # population (1/n) convention, matching the score constraint
        if sd == 0.0:
            raise ConstantColumn(f"continuous column {a.name!r} has zero spread")
        out[a.name] = (v - v.mean()) / sd
    return replace(d, continuous_values=out)


def clip_upper_quantile(d: MixedDataset, attr: str, q: float) -> MixedDataset:
    """Keep only rows whose ``attr`` value is at or below the q-quantile.

    The quantile is the linear-interpolation ("type 7") order statistic.
    """
    a = d.attribute(attr)
    if a.is_categorical:
        raise ValueError(f"attribute {attr!r} is not continuous")
    if not 0.0 < q < 1.0:
        raise ValueError(f"quantile must lie in (0, 1), got {q}")
    v = d.continuous_values[attr]
    threshold = np.quantile(v, q)
    return d.select_rows(v <= threshold)
