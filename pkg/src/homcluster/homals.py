"""Alternating-least-squares solver for homogeneity analysis.

Minimizes the average squared discrepancy between object scores X and their
per-attribute one-hot reconstructions G_j Y_j, subject to X'X = n I_r and
centered columns. The alternation is closed-form in both directions:
Y_j <- D_j^{-1} G_j' X, then X <- mean_j G_j Y_j followed by re-centering
and orthonormalization, which is an orthogonal (block power) iteration on
the average projection matrix of the indicator blocks. A dense eigenvalue
cross-check of the converged loss is provided for small instances.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .dataset import MixedDataset
from .errors import DegenerateData, RankDeficient, TooLarge
from .indicator import IndicatorMatrix, apply_block, apply_block_transpose

_EPS_DENOM = 1e-12  # floor for the relative-change denominator

_DENSE_GUARD = 5000  # max n for the dense eigenvalue cross-check


@dataclass(frozen=True)
class HomalsConfig:
    r: int = 1
    max_iter: int = 500
    rel_tol: float = 1e-6
    seed: int = 0

    def validate(self, ncc: int, p_c: int) -> None:
        if self.r < 1:
            raise ValueError("embedding dimension must be >= 1")
        if self.r > ncc - p_c:
            raise ValueError(
                f"embedding dimension r={self.r} exceeds the {ncc - p_c} "
                f"nontrivial dimensions of this data")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be positive")


@dataclass(frozen=True)
class HomalsSolution:
    """Converged object scores and category quantifications."""

    object_scores: np.ndarray          # n x r
    quantifications: dict              # attribute -> (l_j x r)
    attributes: tuple                  # attribute names, block order
    levels: dict                       # attribute -> observed level labels
    loss_trace: tuple
    converged: bool
    eigenvalues: np.ndarray            # r values implied by the final scores
    schema_fingerprint: str = None

    @property
    def r(self) -> int:
        return self.object_scores.shape[1]

    @property
    def stacked_quantifications(self) -> np.ndarray:
        """The ncc x r quantification matrix, blocks in attribute order."""
        return np.vstack([self.quantifications[a] for a in self.attributes])


def schema_fingerprint(d: MixedDataset) -> str:
    """Stable digest of the categorical schema (names, kinds, levels)."""
    doc = [[a.name, a.kind, list(a.levels)] for a in d.categorical_schema]
    return hashlib.sha1(json.dumps(doc).encode()).hexdigest()


def center_and_orthonormalize(x: np.ndarray, rng=None) -> np.ndarray:
    """Center columns, orthogonalize, and scale so that X'X = n I_r.

    Modified Gram-Schmidt with one re-orthogonalization pass. A column that
    collapses under centering/orthogonalization is redrawn once from ``rng``
    if one is given; otherwise (or on a second collapse) RankDeficient.
    """
    x = np.array(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n, r = x.shape
    sqrt_n = np.sqrt(n)
    tol = 1e-10 * sqrt_n
    q = np.empty_like(x)
    for s in range(r):
        retried = False
        v = x[:, s] - x[:, s].mean()
        while True:
            for _ in range(2):  # MGS plus one re-orthogonalization
                for t in range(s):
                    v -= (q[:, t] @ v) / n * q[:, t]
            norm = np.linalg.norm(v)
            if norm > tol:
                break
            if rng is None or retried:
                raise RankDeficient(
                    f"column {s} is dependent after centering")
            v = rng.standard_normal(n)
            v -= v.mean()
            retried = True
        q[:, s] = v * (sqrt_n / norm)
    return q


def loss(x: np.ndarray, g: IndicatorMatrix, y: dict) -> float:
    """Average squared residual (1/p_c) sum_j SSQ(X - G_j Y_j)."""
    total = 0.0
    for a in g.attributes:
        resid = x - apply_block(g.blocks[a], np.asarray(y[a]))
        total += float(np.sum(resid * resid))
    return total / g.p_c


def _update_quantifications(g: IndicatorMatrix, x: np.ndarray) -> dict:
    # Y_j <- D_j^{-1} G_j' X, i.e. per-level means of the object scores
    return {
        a: apply_block_transpose(g.blocks[a], x)
        / g.level_counts[a][:, None]
        for a in g.attributes
    }


def _average_reconstruction(g: IndicatorMatrix, y: dict) -> np.ndarray:
    # p_c^{-1} sum_j G_j Y_j, which equals P* X when Y came from X
    acc = apply_block(g.blocks[g.attributes[0]], y[g.attributes[0]]).copy()
    for a in g.attributes[1:]:
        acc += apply_block(g.blocks[a], y[a])
    return acc / g.p_c


def _fix_signs(x: np.ndarray, y: dict) -> None:
    # make the first nonzero entry of each score column positive, in place
    for s in range(x.shape[1]):
        nz = np.flatnonzero(np.abs(x[:, s]) > 1e-12)
        if len(nz) and x[nz[0], s] < 0:
            x[:, s] = -x[:, s]
            for block in y.values():
                block[:, s] = -block[:, s]


def fit(g: IndicatorMatrix, cfg: HomalsConfig = HomalsConfig(),
        on_iteration=None, fingerprint: str = None) -> HomalsSolution:
    """Run the alternating-least-squares loop to convergence.

    ``on_iteration(t, x, sigma)`` is called after each iteration with the
    constraint-conforming scores and current loss, for diagnostics.
    """
    ncc, p_c = g.ncc, g.p_c
    if ncc - p_c < 1:
        raise DegenerateData(
            "every categorical attribute has a single level; no nontrivial "
            "dimension exists")
    cfg.validate(ncc, p_c)
    rng = np.random.default_rng(cfg.seed)
    n = g.n_rows
    x = center_and_orthonormalize(rng.standard_normal((n, cfg.r)), rng)

    trace = []
    converged = False
    y = _update_quantifications(g, x)
    for t in range(cfg.max_iter):
        x = center_and_orthonormalize(_average_reconstruction(g, y), rng)
        y = _update_quantifications(g, x)
        sigma = loss(x, g, y)
        trace.append(sigma)
        if on_iteration is not None:
            on_iteration(t, x, sigma)
        if t > 0:
            prev = trace[-2]
            if abs(sigma - prev) / max(prev, _EPS_DENOM) < cfg.rel_tol:
                converged = True
                break

    _fix_signs(x, y)
    # per-column Rayleigh quotient of the average projection matrix
    px = _average_reconstruction(g, y)
    lambdas = np.einsum("ns,ns->s", x, px) / n
    return HomalsSolution(
        object_scores=x,
        quantifications=y,
        attributes=g.attributes,
        levels=dict(g.levels),
        loss_trace=tuple(trace),
        converged=converged,
        eigenvalues=lambdas,
        schema_fingerprint=fingerprint,
    )


def average_projection_dense(g: IndicatorMatrix) -> np.ndarray:
    """Materialize P* = p_c^{-1} sum_j G_j D_j^{-1} G_j' as a dense matrix."""
    n = g.n_rows
    p = np.zeros((n, n))
    for a in g.attributes:
        gd = g.blocks[a].dense()
        p += (gd / g.level_counts[a]) @ gd.T
    return p / g.p_c


def nontrivial_eigenvalues(g: IndicatorMatrix) -> np.ndarray:
    """Descending eigenvalues of P* restricted to the centered subspace.

    The all-ones eigenvector (eigenvalue 1) is excluded by conjugating with
    the centering projector, since the constraint u'X = 0 removes it.
    """
    n = g.n_rows
    p = average_projection_dense(g)
    c = np.eye(n) - np.full((n, n), 1.0 / n)
    m = c @ p @ c
    vals = np.linalg.eigvalsh((m + m.T) / 2.0)
    return vals[::-1]


def eigen_check(g: IndicatorMatrix, sol: HomalsSolution):
    """Cross-check the converged loss against the eigenvalue identity.

    Returns (sigma_direct, sigma_eigen, lambdas) where sigma_eigen is
    n (r - sum of the top-r nontrivial eigenvalues of P*) and lambdas is
    the full descending nontrivial spectrum. Dense; guarded to small n.
    """
    n = g.n_rows
    if n > _DENSE_GUARD:
        raise TooLarge(f"dense eigenvalue check limited to n <= {_DENSE_GUARD}")
    lambdas = nontrivial_eigenvalues(g)
    r = sol.r
    sigma_eigen = n * (r - float(lambdas[:r].sum()))
    sigma_direct = loss(sol.object_scores, g, sol.quantifications)
    return sigma_direct, sigma_eigen, lambdas


def save_solution(sol: HomalsSolution, out_dir) -> None:
    """Write scores CSV and a JSON description of the solution."""
    from pathlib import Path

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scores_path = out_dir / "object_scores.csv"
    with open(scores_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"dim_{s + 1}" for s in range(sol.r)])
        for row in sol.object_scores:
            writer.writerow([repr(float(v)) for v in row])
    doc = {
        "object_scores": scores_path.name,
        "quantifications": {
            a: {str(level): [float(v) for v in sol.quantifications[a][i]]
                for i, level in enumerate(sol.levels[a])}
            for a in sol.attributes
        },
        "attributes": list(sol.attributes),
        "loss_trace": list(sol.loss_trace),
        "converged": sol.converged,
        "eigenvalues": [float(v) for v in sol.eigenvalues],
        "schema_fingerprint": sol.schema_fingerprint,
    }
    with open(out_dir / "solution.json", "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_solution(path) -> HomalsSolution:
    """Read back a solution written by :func:`save_solution`."""
    from pathlib import Path

    path = Path(path)
    if path.is_dir():
        path = path / "solution.json"
    with open(path) as fh:
        doc = json.load(fh)
    scores = np.loadtxt(path.parent / doc["object_scores"],
                        delimiter=",", skiprows=1, ndmin=2)
    attributes = tuple(doc["attributes"])
    levels = {}
    quants = {}
    for a in attributes:
        entries = doc["quantifications"][a]
        levels[a] = tuple(entries)
        quants[a] = np.array([entries[lv] for lv in entries])
    return HomalsSolution(
        object_scores=scores,
        quantifications=quants,
        attributes=attributes,
        levels=levels,
        loss_trace=tuple(doc["loss_trace"]),
        converged=doc["converged"],
        eigenvalues=np.asarray(doc["eigenvalues"]),
        schema_fingerprint=doc.get("schema_fingerprint"),
    )
