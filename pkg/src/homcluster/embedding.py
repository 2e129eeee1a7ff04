"""Assembly of the final Euclidean data matrix.

Continuous columns pass through unchanged (they are expected to be
standardized upstream); each categorical attribute is replaced by the
fitted quantification of its level, contributing r columns. A thin
sklearn-style transformer wraps the fit-then-embed sequence so the
embedding composes with the wider ecosystem.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .dataset import MixedDataset
from .errors import SchemaMismatch, UnseenLevel
from .homals import (HomalsConfig, HomalsSolution, fit as homals_fit,
                     schema_fingerprint)
from .indicator import build_indicator


@dataclass(frozen=True)
class EmbeddedDataset:
    """Dense n x (p_n + r * p_c) matrix with provenance column names."""

    matrix: np.ndarray
    column_names: tuple
    row_index: np.ndarray

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_columns(self) -> int:
        return self.matrix.shape[1]


def _check_fingerprint(d: MixedDataset, sol: HomalsSolution) -> None:
    names = tuple(a.name for a in d.categorical_schema)
    if names != sol.attributes:
        raise SchemaMismatch(
            f"categorical attributes {names} do not match the fitted "
            f"solution {sol.attributes}")
    if sol.schema_fingerprint is not None:
        if schema_fingerprint(d) != sol.schema_fingerprint:
            raise SchemaMismatch("categorical schema fingerprint mismatch")


def _quantified_columns(d: MixedDataset, sol: HomalsSolution) -> list:
    cols = []
    for a in d.categorical_schema:
        index_of = {level: i for i, level in enumerate(sol.levels[a.name])}
        lookup = np.full(len(a.levels), -1, dtype=np.int64)
        for code, label in enumerate(a.levels):
            if label in index_of:
                lookup[code] = index_of[label]
        codes = d.categorical_codes[a.name]
        rows = lookup[codes] if len(codes) else codes
        if len(rows) and rows.min() < 0:
            bad = a.levels[codes[np.argmin(rows)]]
            raise UnseenLevel(
                f"level {bad!r} of attribute {a.name!r} was not present "
                f"when the solution was fitted")
        block = sol.quantifications[a.name]
        for s in range(sol.r):
            cols.append((f"{a.name}#dim_{s + 1}",
                         block[rows, s] if len(rows) else np.empty(0)))
    return cols


def embed(d: MixedDataset, sol: HomalsSolution) -> EmbeddedDataset:
    """Join continuous columns with quantified categorical columns."""
    _check_fingerprint(d, sol)
    cols = [(a.name, d.continuous_values[a.name]) for a in d.continuous_schema]
    cols += _quantified_columns(d, sol)
    names = tuple(name for name, _ in cols)
    if cols and len(cols[0][1]):
        matrix = np.column_stack([v for _, v in cols])
    else:
        matrix = np.empty((0, len(cols)))
    if not np.all(np.isfinite(matrix)):
        raise ValueError("embedded matrix contains non-finite entries")
    return EmbeddedDataset(matrix=matrix, column_names=names,
                           row_index=d.row_index)


def score_new(rows: MixedDataset, sol: HomalsSolution) -> EmbeddedDataset:
    """Apply a fitted quantification to held-out rows (no refitting)."""
    return embed(rows, sol)


def write_embedded_csv(e: EmbeddedDataset, path, sol: HomalsSolution = None):
    """Write the embedded matrix with provenance header, plus a JSON
    sidecar recording the solution fingerprint when one is given."""
    from pathlib import Path

    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("row_id",) + tuple(e.column_names))
        for rid, row in zip(e.row_index, e.matrix):
            writer.writerow([int(rid)] + [repr(float(v)) for v in row])
    if sol is not None:
        sidecar = {"schema_fingerprint": sol.schema_fingerprint,
                   "columns": list(e.column_names)}
        with open(path.with_suffix(".meta.json"), "w") as fh:
            json.dump(sidecar, fh, indent=2, sort_keys=True)
            fh.write("\n")


def read_embedded_csv(path) -> EmbeddedDataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    row_index = np.array([int(r[0]) for r in rows], dtype=np.int64)
    matrix = np.array([[float(v) for v in r[1:]] for r in rows])
    if matrix.size == 0:
        matrix = matrix.reshape(len(rows), len(header) - 1)
    return EmbeddedDataset(matrix=matrix, column_names=tuple(header[1:]),
                           row_index=row_index)


class HomogeneityAnalysis(BaseEstimator, TransformerMixin):
    """Optimal-scaling transformer for mixed datasets.

    ``fit`` solves the alternating-least-squares problem on the categorical
    sub-table; ``transform`` returns the embedded numeric matrix. Operates
    on :class:`MixedDataset` values rather than raw arrays.
    """

    def __init__(self, r: int = 1, max_iter: int = 500,
                 rel_tol: float = 1e-6, seed: int = 0):
        self.r = r
        self.max_iter = max_iter
        self.rel_tol = rel_tol
        self.seed = seed

    def fit(self, d: MixedDataset, y=None):
        cfg = HomalsConfig(r=self.r, max_iter=self.max_iter,
                           rel_tol=self.rel_tol, seed=self.seed)
        g = build_indicator(d)
        self.solution_ = homals_fit(g, cfg,
                                    fingerprint=schema_fingerprint(d))
        return self

    def transform(self, d: MixedDataset) -> np.ndarray:
        return score_new(d, self.solution_).matrix

    def embed(self, d: MixedDataset) -> EmbeddedDataset:
        """Like transform, but keeps column names and row identifiers."""
        return score_new(d, self.solution_)
