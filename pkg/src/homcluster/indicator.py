"""Sparse one-hot indicator matrix over the categorical sub-table.

Each categorical attribute j contributes an n x l_j block whose rows are
one-hot; the block is stored as one integer code per row, never as a dense
0/1 matrix. The only products the alternating-least-squares loop needs are
the gather G_j v and the scatter-sum G_j' x, provided here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import MixedDataset
from .errors import NoCategoricalAttributes


@dataclass(frozen=True)
class IndicatorBlock:
    """One-hot block for a single attribute, stored as a code per row."""

    codes: np.ndarray
    n_levels: int

    def dense(self) -> np.ndarray:
        g = np.zeros((len(self.codes), self.n_levels))
        g[np.arange(len(self.codes)), self.codes] = 1.0
        return g


@dataclass(frozen=True)
class IndicatorMatrix:
    """Block one-hot encoding of all categorical attributes.

    Levels absent from the data are dropped at construction, so every
    level count is at least 1 and every D_j is invertible.
    """

    n_rows: int
    attributes: tuple          # attribute names, dataset schema order
    blocks: dict               # name -> IndicatorBlock
    levels: dict               # name -> tuple of observed level labels
    level_counts: dict         # name -> occurrence count per observed level

    @property
    def p_c(self) -> int:
        return len(self.attributes)

    @property
    def ncc(self) -> int:
        return sum(b.n_levels for b in self.blocks.values())

    def dense(self) -> np.ndarray:
        return np.hstack([self.blocks[a].dense() for a in self.attributes])

    def dump_triplets(self, fh) -> None:
        # debug format for test tooling: "row col 1" per nonzero of dense G
        offset = 0
        for a in self.attributes:
            b = self.blocks[a]
            for row, code in enumerate(b.codes):
                fh.write(f"{row} {offset + code} 1\n")
            offset += b.n_levels


def build_indicator(d: MixedDataset) -> IndicatorMatrix:
    """Encode the categorical sub-table of ``d``, dropping unseen levels."""
    cat = d.categorical_schema
    if not cat:
        raise NoCategoricalAttributes("dataset has no categorical attribute")
    blocks, levels, counts = {}, {}, {}
    for a in cat:
        codes = d.categorical_codes[a.name]
        observed, remapped = np.unique(codes, return_inverse=True)
        blocks[a.name] = IndicatorBlock(remapped.astype(np.int64), len(observed))
        levels[a.name] = tuple(a.levels[c] for c in observed)
        counts[a.name] = np.bincount(remapped, minlength=len(observed))
    return IndicatorMatrix(
        n_rows=d.n_rows,
        attributes=tuple(a.name for a in cat),
        blocks=blocks,
        levels=levels,
        level_counts=counts,
    )


def apply_block(g_j: IndicatorBlock, v: np.ndarray) -> np.ndarray:
    """G_j v: select the quantification row for each data row (gather)."""
    v = np.asarray(v)
    if v.shape[0] != g_j.n_levels:
        raise ValueError(
            f"shape mismatch: block has {g_j.n_levels} levels, operand has "
            f"{v.shape[0]} rows")
    return v[g_j.codes]


def apply_block_transpose(g_j: IndicatorBlock, x: np.ndarray) -> np.ndarray:
    """G_j' x: sum the score rows carried by each level (scatter-sum)."""
    x = np.asarray(x)
    if x.shape[0] != len(g_j.codes):
        raise ValueError(
            f"shape mismatch: block has {len(g_j.codes)} rows, operand has "
            f"{x.shape[0]}")
    if x.ndim == 1:
        return np.bincount(g_j.codes, weights=x, minlength=g_j.n_levels)
    out = np.empty((g_j.n_levels, x.shape[1]))
    for s in range(x.shape[1]):
        out[:, s] = np.bincount(g_j.codes, weights=x[:, s],
                                minlength=g_j.n_levels)
    return out
