"""Synthetic mixed dataset with known ground truth.

Three clusters; two continuous attributes drawn from an isotropic unit
Gaussian around per-cluster centers, and two three-level categorical
attributes drawn per cluster from a multinomial with one dominant level.
Defaults put the centers at the vertices of an equilateral triangle with
side 4 and the dominant probability at 0.8, which gives partial overlap
and sub-1.0 recoverability.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import AttributeSchema, MixedDataset

_SIDE = 4.0

DEFAULT_CENTERS = (
    (0.0, 0.0),
    (_SIDE, 0.0),
    (_SIDE / 2.0, _SIDE * np.sqrt(3.0) / 2.0),
)

# dominant level rotates across clusters
DEFAULT_LEVEL_PROBS = tuple(
    tuple(
        tuple(0.8 if lv == c else 0.1 for lv in range(3))
        for _attr in range(2)
    )
    for c in range(3)
)

LEVEL_LABELS = ("L1", "L2", "L3")


@dataclass(frozen=True)
class SynthConfig:
    n: int = 10_000
    n_clusters: int = 3
    centers: tuple = DEFAULT_CENTERS
    level_probs: tuple = DEFAULT_LEVEL_PROBS   # [cluster][attribute][level]
    seed: int = 0

    def validate(self) -> None:
        if self.n < self.n_clusters:
            raise ValueError("need at least one row per cluster")
        centers = np.asarray(self.centers, dtype=float)
        if len(centers) != self.n_clusters:
            raise ValueError("one center per cluster is required")
        for i in range(len(centers)):
            for j in range(i + 1, len(centers)):
                if np.allclose(centers[i], centers[j]):
                    raise ValueError("centers must be pairwise distinct")
        for per_cluster in self.level_probs:
            for probs in per_cluster:
                p = np.asarray(probs, dtype=float)
                if (p < 0).any() or abs(p.sum() - 1.0) > 1e-12:
                    raise ValueError(
                        f"level probabilities {probs} must be nonnegative "
                        f"and sum to 1")


def generate(cfg: SynthConfig = SynthConfig()):
    """Draw the dataset; returns (MixedDataset, ground-truth labels).

    Rows are split evenly across clusters, remainder going to the earlier
    clusters. Per-cluster streams use spawned seeds, so generation is
    deterministic and cluster-parallelizable.
    """
    cfg.validate()
    kc = cfg.n_clusters
    counts = [cfg.n // kc + (1 if c < cfg.n % kc else 0) for c in range(kc)]
    rngs = [np.random.default_rng(s)
            for s in np.random.SeedSequence(cfg.seed).spawn(kc)]
    centers = np.asarray(cfg.centers, dtype=float)

    xs, cats, truth = [], [], []
    n_cat = len(cfg.level_probs[0])
    for c in range(kc):
        rng = rngs[c]
        nc = counts[c]
        xs.append(centers[c] + rng.standard_normal((nc, centers.shape[1])))
        cats.append([
            rng.choice(len(cfg.level_probs[c][a]), size=nc,
                       p=np.asarray(cfg.level_probs[c][a], dtype=float))
            for a in range(n_cat)
        ])
        truth.append(np.full(nc, c))

    continuous = np.vstack(xs)
    schema = [AttributeSchema(f"x{i + 1}", "continuous")
              for i in range(centers.shape[1])]
    schema += [AttributeSchema(f"c{a + 1}", "nominal", LEVEL_LABELS)
               for a in range(n_cat)]
    dataset = MixedDataset(
        schema=tuple(schema),
        categorical_codes={
            f"c{a + 1}": np.concatenate([cats[c][a] for c in range(kc)])
            for a in range(n_cat)
        },
        continuous_values={
            f"x{i + 1}": continuous[:, i] for i in range(centers.shape[1])
        },
    )
    return dataset, np.concatenate(truth)


def inject_outlier_cluster(d: MixedDataset, truth, fraction: float,
                           target: str, shift: float, seed: int = 0):
    """Append a displaced cluster worth ``fraction`` of the rows.

    The injected rows copy a random base row's categorical levels but sit
    at ``shift`` on the target attribute (plus unit noise at a tenth
    scale), giving a compact far-out group for drill-down tests.
    """
    rng = np.random.default_rng(seed)
    n_extra = max(1, int(round(d.n_rows * fraction)))
    outlier_label = int(np.max(truth)) + 1

    codes = {
        name: np.concatenate([
            col,
            np.full(n_extra, int(col[rng.integers(len(col))])),
        ])
        for name, col in d.categorical_codes.items()
    }
    values = {}
    for name, col in d.continuous_values.items():
        if name == target:
            extra = shift + 0.1 * rng.standard_normal(n_extra)
        else:
            extra = col.mean() + 0.1 * rng.standard_normal(n_extra)
        values[name] = np.concatenate([col, extra])
    merged = MixedDataset(schema=d.schema, categorical_codes=codes,
                          continuous_values=values)
    return merged, np.concatenate([truth, np.full(n_extra, outlier_label)])
