"""Clustering of the embedded Euclidean matrix.

Three algorithms behind one result type: mini-batch k-means, a CF-tree
(BIRCH) pass followed by weighted k-means on the leaf entries, and CLARA
(sampled PAM k-medoids). Distances are squared Euclidean for the k-means
family and Euclidean for CLARA/PAM. Tie-breaking everywhere is lowest
index, so identical seeds give bit-identical labelings.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils import check_array

from .errors import (EmptyDataset, KTooLarge, SampleTooSmall,
                     TooFewLeafEntries)


@dataclass(frozen=True)
class ClusteringResult:
    k: int
    labels: np.ndarray
    centers: np.ndarray        # centroids, or medoid rows for CLARA
    objective: float
    seed: int
    algorithm: str = ""
    medoid_indices: np.ndarray = None


def _as_matrix(e) -> np.ndarray:
    m = e.matrix if hasattr(e, "matrix") else np.asarray(e, dtype=float)
    if m.ndim == 1:
        m = m[:, None]
    return m


def assign_nearest(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Nearest-center label per row; ties go to the lowest center index."""
    d2 = cdist(points, centers, metric="sqeuclidean")
    return d2.argmin(axis=1)


def within_cluster_ssq(points, centers, labels) -> float:
    diff = points - centers[labels]
    return float(np.sum(diff * diff))


def _kmeanspp_init(points: np.ndarray, k: int, rng) -> np.ndarray:
    n = len(points)
    centers = np.empty((k, points.shape[1]))
    first = rng.integers(n)
    centers[0] = points[first]
    d2 = cdist(points, centers[:1], metric="sqeuclidean")[:, 0]
    for c in range(1, k):
        total = d2.sum()
        if total > 0:
            probs = d2 / total
            idx = rng.choice(n, p=probs)
        else:
            idx = rng.integers(n)
        centers[c] = points[idx]
        d2 = np.minimum(d2, cdist(points, centers[c:c + 1],
                                  metric="sqeuclidean")[:, 0])
    return centers


def _repair_empty(points, centers, labels, weights=None):
    """Reseed empty centers at the point farthest from its assigned center."""
    k = len(centers)
    for _ in range(k):
        counts = np.bincount(labels, minlength=k)
        empties = np.flatnonzero(counts == 0)
        if not len(empties):
            break
        diff = points - centers[labels]
        d2 = np.sum(diff * diff, axis=1)
        if weights is not None:
            d2 = d2 * weights
        centers[empties[0]] = points[int(np.argmax(d2))]
        labels = assign_nearest(points, centers)
    return centers, labels


def lloyd_kmeans(points, k, seed=0, max_iter=300, weights=None):
    """Full (weighted) Lloyd iteration with k-means++ initialization."""
    rng = np.random.default_rng(seed)
    centers = _kmeanspp_init(points, k, rng)
    labels = assign_nearest(points, centers)
    centers, labels = _repair_empty(points, centers, labels, weights)
    w = np.ones(len(points)) if weights is None else np.asarray(weights, float)
    for _ in range(max_iter):
        for c in range(k):
            mask = labels == c
            centers[c] = np.average(points[mask], axis=0, weights=w[mask])
        new_labels = assign_nearest(points, centers)
        centers, new_labels = _repair_empty(points, centers, new_labels, weights)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return centers, labels


def minibatch_kmeans(e, k: int, batch: int = 1024, iters: int = 100,
                     seed: int = 0, n_init: int = 5) -> ClusteringResult:
    """Mini-batch k-means with per-center 1/count learning rates.

    Each batch is assigned to the nearest cached centers, then every center
    moves to the running mean of all points ever assigned to it, which is
    the aggregate of the per-point gradient steps with rate 1/count. The
    procedure restarts ``n_init`` times from derived seeds and keeps the
    run with the lowest final objective, since a single unlucky
    initialization can merge well-separated groups.
    """
    x = _as_matrix(e)
    n = len(x)
    if n == 0:
        raise EmptyDataset("cannot cluster an empty dataset")
    if k > n:
        raise KTooLarge(f"k={k} exceeds the {n} available rows")
    if k < 1 or batch < 1 or iters < 1 or n_init < 1:
        raise ValueError("k, batch, iters and n_init must be positive")
    best = None
    for sub in np.random.SeedSequence(seed).spawn(n_init):
        result = _minibatch_kmeans_once(x, k, batch, iters,
                                        np.random.default_rng(sub), seed)
        if best is None or result.objective < best.objective:
            best = result
    return best


def _minibatch_kmeans_once(x, k, batch, iters, rng, seed) -> ClusteringResult:
    n = len(x)
    init_size = min(n, max(batch, 10 * k))
    sample = np.sort(rng.choice(n, size=init_size, replace=False))
    centers = _kmeanspp_init(x[sample], k, rng)

    counts = np.zeros(k)
    bsize = min(batch, n)
    for _ in range(iters):
        bidx = rng.choice(n, size=bsize, replace=False)
        pts = x[bidx]
        lab = assign_nearest(pts, centers)
        m = np.bincount(lab, minlength=k).astype(float)
        sums = np.zeros_like(centers)
        np.add.at(sums, lab, pts)
        hit = m > 0
        counts[hit] += m[hit]
        centers[hit] += (sums[hit] - m[hit, None] * centers[hit]) / counts[hit, None]

    labels = assign_nearest(x, centers)
    centers, labels = _repair_empty(x, centers, labels)
    return ClusteringResult(
        k=k, labels=labels, centers=centers,
        objective=within_cluster_ssq(x, centers, labels),
        seed=seed, algorithm="mbk")


class CFEntry:
    """BIRCH clustering feature: point count, linear sum, squared sum."""

    __slots__ = ("n", "ls", "ss", "child")

    def __init__(self, n, ls, ss, child=None):
        self.n = n
        self.ls = ls
        self.ss = ss
        self.child = child

    @classmethod
    def from_point(cls, p):
        return cls(1, p.copy(), float(p @ p))

    @property
    def centroid(self):
        return self.ls / self.n

    @property
    def radius(self):
        r2 = self.ss / self.n - float(self.centroid @ self.centroid)
        return np.sqrt(max(r2, 0.0))

    def add_point(self, p):
        self.n += 1
        self.ls = self.ls + p
        self.ss += float(p @ p)

    def radius_if_added(self, p) -> float:
        n = self.n + 1
        ls = self.ls + p
        ss = self.ss + float(p @ p)
        r2 = ss / n - float(ls @ ls) / (n * n)
        return np.sqrt(max(r2, 0.0))


class CFNode:
    __slots__ = ("is_leaf", "entries")

    def __init__(self, is_leaf, entries=None):
        self.is_leaf = is_leaf
        self.entries = entries if entries is not None else []


class CFTree:
    """Single-pass CF-tree: descend to the closest child, merge into the
    closest leaf entry when the merged radius stays under the threshold,
    split overfull nodes by farthest-pair seeding."""

    def __init__(self, threshold: float, branching: int):
        if threshold <= 0:
            raise ValueError("threshold must be positive")
        if branching < 2:
            raise ValueError("branching factor must be >= 2")
        self.threshold = threshold
        self.branching = branching
        self.root = None

    def insert(self, p) -> None:
        p = np.asarray(p, dtype=float)
        if self.root is None:
            self.root = CFNode(is_leaf=True, entries=[CFEntry.from_point(p)])
            return
        split = self._insert(self.root, p)
        if split is not None:
            self.root = CFNode(is_leaf=False, entries=list(split))

    def _closest(self, entries, p) -> int:
        cents = np.array([e.centroid for e in entries])
        d2 = np.sum((cents - p) ** 2, axis=1)
        return int(np.argmin(d2))

    def _insert(self, node, p):
        if node.is_leaf:
            i = self._closest(node.entries, p)
            if node.entries[i].radius_if_added(p) <= self.threshold:
                node.entries[i].add_point(p)
                return None
            node.entries.append(CFEntry.from_point(p))
        else:
            i = self._closest(node.entries, p)
            child = node.entries[i].child
            split = self._insert(child, p)
            if split is None:
                node.entries[i].add_point(p)
                return None
            e1, e2 = split
            node.entries[i] = e1
            node.entries.insert(i + 1, e2)
        if len(node.entries) > self.branching:
            return self._split(node)
        return None

    def _split(self, node):
        entries = node.entries
        cents = np.array([e.centroid for e in entries])
        d = cdist(cents, cents)
        np.fill_diagonal(d, -1.0)
        i, j = np.unravel_index(int(np.argmax(d)), d.shape)
        g1, g2 = [], []
        for t, e in enumerate(entries):
            if t == i:
                g1.append(e)
            elif t == j:
                g2.append(e)
            elif d[t, i] <= d[t, j]:
                g1.append(e)
            else:
                g2.append(e)
        return tuple(self._summarize(CFNode(node.is_leaf, grp))
                     for grp in (g1, g2))

    @staticmethod
    def _summarize(child: CFNode) -> CFEntry:
        n = sum(e.n for e in child.entries)
        ls = np.sum([e.ls for e in child.entries], axis=0)
        ss = float(sum(e.ss for e in child.entries))
        return CFEntry(n, ls, ss, child=child)

    def leaf_entries(self) -> list:
        out = []

        def walk(node):
            if node.is_leaf:
                out.extend(node.entries)
            else:
                for e in node.entries:
                    walk(e.child)

        if self.root is not None:
            walk(self.root)
        return out

    def validate(self, atol: float = 1e-8) -> None:
        """Assert that every internal entry's CF equals the sum of its
        child's entries, recursively."""

        def walk(node):
            if node.is_leaf:
                return
            for e in node.entries:
                n = sum(c.n for c in e.child.entries)
                ls = np.sum([c.ls for c in e.child.entries], axis=0)
                ss = sum(c.ss for c in e.child.entries)
                assert e.n == n, "CF count mismatch"
                assert np.allclose(e.ls, ls, atol=atol), "CF linear-sum mismatch"
                assert abs(e.ss - ss) <= atol * max(1.0, abs(ss)), \
                    "CF squared-sum mismatch"
                walk(e.child)

        if self.root is not None:
            walk(self.root)


def birch(e, k: int, threshold: float = 0.5,
          branching: int = 50) -> ClusteringResult:
    """CF-tree condensation followed by weighted k-means on leaf entries."""
    x = _as_matrix(e)
    if len(x) == 0:
        raise EmptyDataset("cannot cluster an empty dataset")
    tree = CFTree(threshold, branching)
    for row in x:
        tree.insert(row)
    leaves = tree.leaf_entries()
    if len(leaves) < k:
        raise TooFewLeafEntries(
            f"CF-tree produced {len(leaves)} leaf entries < k={k}; "
            f"lower the threshold")
    cents = np.array([e_.centroid for e_ in leaves])
    weights = np.array([e_.n for e_ in leaves], dtype=float)
    centers, _ = lloyd_kmeans(cents, k, seed=0, weights=weights)
    labels = assign_nearest(x, centers)
    centers, labels = _repair_empty(x, centers, labels)
    return ClusteringResult(
        k=k, labels=labels, centers=centers,
        objective=within_cluster_ssq(x, centers, labels),
        seed=0, algorithm="birch")


def pam_full(points: np.ndarray, k: int, seed: int = 0):
    """PAM k-medoids: greedy BUILD then best-improvement SWAP.

    Deterministic: BUILD and SWAP break ties toward lower indexes, so the
    seed does not influence the result. Returns (medoid_indices ascending,
    labels, total Euclidean dissimilarity).
    """
    points = _as_matrix(points)
    n = len(points)
    if k >= n:
        raise KTooLarge(f"k={k} must be smaller than the {n} points")
    if k < 1:
        raise ValueError("k must be positive")
    d = cdist(points, points)

    # BUILD: start from the 1-medoid optimum, then greedily add the
    # candidate that lowers total dissimilarity the most
    medoids = [int(np.argmin(d.sum(axis=1)))]
    nearest = d[medoids[0]].copy()
    while len(medoids) < k:
        cand = np.setdiff1d(np.arange(n), medoids)
        totals = np.minimum(nearest[None, :], d[cand]).sum(axis=1)
        best = cand[int(np.argmin(totals))]
        medoids.append(int(best))
        nearest = np.minimum(nearest, d[best])

    # SWAP: repeat the best single (medoid, non-medoid) exchange while the
    # total strictly decreases
    medoids = sorted(medoids)
    while True:
        med = np.array(medoids)
        dist_med = d[med]                       # k x n
        order = np.argsort(dist_med, axis=0, kind="stable")
        near_idx = order[0]
        near = dist_med[near_idx, np.arange(n)]
        second = dist_med[order[1], np.arange(n)] if k > 1 \
            else np.full(n, np.inf)
        current = near.sum()
        best_total = current
        best_swap = None
        non_med = np.setdiff1d(np.arange(n), med)
        for mi, m in enumerate(medoids):
            without = np.where(near_idx == mi, second, near)
            for h in non_med:
                total = np.minimum(without, d[h]).sum()
                if total < best_total - 1e-12:
                    best_total = total
                    best_swap = (mi, int(h))
        if best_swap is None:
            break
        mi, h = best_swap
        medoids[mi] = h
        medoids = sorted(medoids)

    med = np.array(medoids)
    labels = np.argmin(d[:, med], axis=1)
    objective = float(d[np.arange(n), med[labels]].sum())
    return med, labels, objective


def clara(e, k: int, samples: int = 5, sample_size: int = None,
          seed: int = 0) -> ClusteringResult:
    """CLARA: PAM on seeded subsamples, keeping the medoid set that
    minimizes total Euclidean dissimilarity over the full dataset."""
    x = _as_matrix(e)
    n = len(x)
    if n == 0:
        raise EmptyDataset("cannot cluster an empty dataset")
    if sample_size is None:
        sample_size = 40 + 2 * k
    sample_size = min(sample_size, n)
    if sample_size <= k:
        raise SampleTooSmall(
            f"sample_size={sample_size} must exceed k={k}")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(samples):
        idx = np.sort(rng.choice(n, size=sample_size, replace=False))
        med_local, _, _ = pam_full(x[idx], k, seed)
        med_global = idx[med_local]
        dist = cdist(x, x[med_global])
        total = float(dist.min(axis=1).sum())
        if best is None or total < best[0]:
            best = (total, med_global, np.argmin(dist, axis=1))
    total, med_global, labels = best
    return ClusteringResult(
        k=k, labels=labels, centers=x[med_global].copy(),
        objective=total, seed=seed, algorithm="clara",
        medoid_indices=med_global)


_ALGORITHMS = {
    "mbk": lambda e, k, seed, **kw: minibatch_kmeans(e, k, seed=seed, **kw),
    "birch": lambda e, k, seed, **kw: birch(e, k, **kw),
    "clara": lambda e, k, seed, **kw: clara(e, k, seed=seed, **kw),
}


def run_algorithm(name: str, e, k: int, seed: int = 0,
                  **kwargs) -> ClusteringResult:
    """Dispatch by algorithm name ('mbk', 'birch' or 'clara')."""
    if name not in _ALGORITHMS:
        raise ValueError(f"unknown algorithm {name!r}; "
                         f"expected one of {sorted(_ALGORITHMS)}")
    return _ALGORITHMS[name](e, k, seed, **kwargs)


class _ClustererBase(BaseEstimator, ClusterMixin):

    def fit(self, X, y=None):
        X = check_array(_as_matrix(X))
        self.result_ = self._run(X)
        self.labels_ = self.result_.labels
        self.cluster_centers_ = self.result_.centers
        return self

    def predict(self, X):
        X = check_array(_as_matrix(X))
        return assign_nearest(X, self.cluster_centers_)


class MiniBatchKMeansClusterer(_ClustererBase):
    """Estimator facade over :func:`minibatch_kmeans`."""

    def __init__(self, k=3, batch=1024, iters=100, seed=0):
        self.k = k
        self.batch = batch
        self.iters = iters
        self.seed = seed

    def _run(self, X):
        return minibatch_kmeans(X, self.k, batch=self.batch,
                                iters=self.iters, seed=self.seed)


class BirchClusterer(_ClustererBase):
    """Estimator facade over :func:`birch`."""

    def __init__(self, k=3, threshold=0.5, branching=50):
        self.k = k
        self.threshold = threshold
        self.branching = branching

    def _run(self, X):
        return birch(X, self.k, threshold=self.threshold,
                     branching=self.branching)


class ClaraClusterer(_ClustererBase):
    """Estimator facade over :func:`clara`."""

    def __init__(self, k=3, samples=5, sample_size=None, seed=0):
        self.k = k
        self.samples = samples
        self.sample_size = sample_size
        self.seed = seed

    def _run(self, X):
        return clara(X, self.k, samples=self.samples,
                     sample_size=self.sample_size, seed=self.seed)
