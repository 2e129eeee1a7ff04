"""Cluster validation indexes and drill-down profiling.

The adjusted Rand index scores a labeling against a known ground truth;
the Calinski-Harabasz index scores one intrinsically. ``sweep_k`` runs an
algorithm over a k range and picks the index-maximizing k; ``profile``
summarizes a continuous target per cluster for drill-down analysis.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .clustering import run_algorithm
from .dataset import MixedDataset
from .errors import EmptyCluster, KLessThanTwo

OUTLIER_MEAN_THRESHOLD = 2.0  # |mean| in standardized units


@dataclass(frozen=True)
class ValidationReport:
    per_k: tuple       # rows of (k, algorithm, index_name, value)
    best_k: int

    def render(self) -> str:
        header = f"{'K':>4}  {'algorithm':<10}  {'index':<6}  {'value':>12}"
        lines = [header, "-" * len(header)]
        for k, algorithm, index_name, value in self.per_k:
            mark = " *" if k == self.best_k else ""
            lines.append(
                f"{k:>4}  {algorithm:<10}  {index_name:<6}  {value:>12.5f}{mark}")
        lines.append(f"best K = {self.best_k}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        doc = {
            "per_k": [
                {"k": k, "algorithm": a, "index": i, "value": v}
                for k, a, i, v in self.per_k
            ],
            "best_k": self.best_k,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


@dataclass(frozen=True)
class ClusterProfile:
    clusters: tuple    # cluster ids ascending
    means: tuple
    counts: tuple
    sds: tuple
    flagged: tuple     # clusters whose |mean| >= 2 standardized units

    def render(self) -> str:
        header = f"{'Cluster':>8}  {'mean':>10}  {'count':>8}  {'sd':>10}"
        lines = [header, "-" * len(header)]
        for c, m, n, s in zip(self.clusters, self.means, self.counts, self.sds):
            mark = " *" if c in self.flagged else ""
            lines.append(f"{c:>8}  {m:>10.4f}  {n:>8}  {s:>10.4f}{mark}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        doc = {
            "clusters": [
                {"cluster": int(c), "mean": m, "count": int(n), "sd": s,
                 "flagged": c in self.flagged}
                for c, m, n, s in zip(self.clusters, self.means,
                                      self.counts, self.sds)
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _comb2(x):
    return x * (x - 1) / 2.0


def adjusted_rand_index(a, b) -> float:
    """Hubert-Arabie chance-corrected agreement between two labelings."""
    a = np.asarray(a)
    b = np.asarray(b)
    if len(a) != len(b):
        raise ValueError("labelings must have equal length")
    n = len(a)
    if n < 2:
        raise ValueError("need at least two rows")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    ka, kb = ai.max() + 1, bi.max() + 1
    table = np.zeros((ka, kb))
    np.add.at(table, (ai, bi), 1.0)
    sum_ij = _comb2(table).sum()
    sum_a = _comb2(table.sum(axis=1)).sum()
    sum_b = _comb2(table.sum(axis=0)).sum()
    expected = sum_a * sum_b / _comb2(n)
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        # both partitions trivial (all singletons or one cluster)
        return 1.0
    return float((sum_ij - expected) / (max_index - expected))


def calinski_harabasz(e, labels) -> float:
    """Variance-ratio criterion [B/(k-1)] / [W/(n-k)]."""
    x = e.matrix if hasattr(e, "matrix") else np.asarray(e, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    labels = np.asarray(labels)
    n = len(x)
    if len(labels) != n:
        raise ValueError("labels length must match the number of rows")
    ids, inv = np.unique(labels, return_inverse=True)
    k = len(ids)
    if k < 2:
        raise KLessThanTwo("index requires at least two clusters")
    if n <= k:
        raise ValueError("need more rows than clusters")
    counts = np.bincount(inv)
    if counts.min() == 0:
        raise EmptyCluster("every cluster must be non-empty")
    grand = x.mean(axis=0)
    between = 0.0
    within = 0.0
    for c in range(k):
        pts = x[inv == c]
        mu = pts.mean(axis=0)
        between += counts[c] * float((mu - grand) @ (mu - grand))
        within += float(np.sum((pts - mu) ** 2))
    if within == 0.0:
        warnings.warn("zero within-cluster dispersion; index is infinite")
        return float("inf")
    return (between / (k - 1)) / (within / (n - k))


def sweep_k(e, algorithm: str, k_range, index: str, truth=None,
            base_seed: int = 0, **algorithm_kwargs) -> ValidationReport:
    """Run ``algorithm`` for each k, score it, and select the best k.

    The per-run seed is ``base_seed + k`` so runs are independent but
    reproducible. ``truth`` is required iff ``index`` is 'ari'. Ties in
    the index go to the smaller k.
    """
    k_range = list(k_range)
    if not k_range:
        raise ValueError("k_range must be nonempty")
    if index not in ("ari", "chi"):
        raise ValueError(f"unknown index {index!r}")
    if (truth is None) == (index == "ari"):
        raise ValueError("truth labels are required exactly when index='ari'")
    rows = []
    best = None
    for k in k_range:
        result = run_algorithm(algorithm, e, k, seed=base_seed + k,
                               **algorithm_kwargs)
        if index == "ari":
            value = adjusted_rand_index(truth, result.labels)
        else:
            value = calinski_harabasz(e, result.labels)
        rows.append((k, algorithm, index, value))
        if best is None or value > best[1]:
            best = (k, value)
    return ValidationReport(per_k=tuple(rows), best_k=best[0])


def profile(d: MixedDataset, labels, target: str) -> ClusterProfile:
    """Per-cluster mean / count / sample-sd of a continuous target.

    Clusters whose |mean| reaches 2 (in standardized units) are flagged as
    outlier candidates.
    """
    attr = d.attribute(target)
    if attr.is_categorical:
        raise ValueError(f"target {target!r} is not continuous")
    labels = np.asarray(labels)
    if len(labels) != d.n_rows:
        raise ValueError("labels length must match the dataset")
    v = d.continuous_values[target]
    ids = np.unique(labels)
    means, counts, sds, flagged = [], [], [], []
    for c in ids:
        vals = v[labels == c]
        means.append(float(vals.mean()))
        counts.append(int(len(vals)))
        sds.append(float(vals.std(ddof=1)) if len(vals) > 1 else 0.0)
        if abs(means[-1]) >= OUTLIER_MEAN_THRESHOLD:
            flagged.append(int(c))
    return ClusterProfile(
        clusters=tuple(int(c) for c in ids),
        means=tuple(means), counts=tuple(counts), sds=tuple(sds),
        flagged=tuple(flagged))
