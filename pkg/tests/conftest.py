import numpy as np
import pytest

from homcluster.dataset import AttributeSchema, MixedDataset

LEVEL_ALPHABET = "ABCDEFGH"


def categorical_dataset(codes_per_attr: dict, n_levels: dict = None,
                        continuous: dict = None) -> MixedDataset:
    """Build a MixedDataset from raw integer code columns."""
    schema = []
    cat_codes = {}
    for name, codes in codes_per_attr.items():
        codes = np.asarray(codes, dtype=np.int64)
        l = (n_levels or {}).get(name, int(codes.max()) + 1)
        schema.append(AttributeSchema(name, "nominal",
                                      tuple(LEVEL_ALPHABET[:l])))
        cat_codes[name] = codes
    cont = {}
    for name, vals in (continuous or {}).items():
        schema.append(AttributeSchema(name, "continuous"))
        cont[name] = np.asarray(vals, dtype=float)
    return MixedDataset(tuple(schema), cat_codes, cont)


def random_categorical_dataset(rng, n, p_c, max_levels) -> MixedDataset:
    """Random instance where every attribute has >= 2 observed levels."""
    codes = {}
    for j in range(p_c):
        l = rng.integers(2, max_levels + 1)
        while True:
            col = rng.integers(0, l, size=n)
            if len(np.unique(col)) >= 2:
                break
        codes[f"a{j}"] = col
    return categorical_dataset(codes)


# --- independent dense linear-algebra oracles -----------------------------

def dense_one_hot(codes, n_levels) -> np.ndarray:
    codes = np.asarray(codes)
    return (codes[:, None] == np.arange(n_levels)[None, :]).astype(float)


def dense_blocks(d: MixedDataset) -> list:
    return [dense_one_hot(d.categorical_codes[a.name], len(a.levels))
            for a in d.categorical_schema]


def dense_average_projection(blocks) -> np.ndarray:
    n = blocks[0].shape[0]
    p = np.zeros((n, n))
    for g in blocks:
        counts = g.sum(axis=0)
        keep = counts > 0
        g = g[:, keep]
        p += g @ np.diag(1.0 / counts[keep]) @ g.T
    return p / len(blocks)


def centered_spectrum(p_star) -> tuple:
    """(descending eigenvalues, matching eigenvectors) of C P* C."""
    n = p_star.shape[0]
    c = np.eye(n) - np.full((n, n), 1.0 / n)
    m = c @ p_star @ c
    vals, vecs = np.linalg.eigh((m + m.T) / 2)
    order = np.argsort(vals)[::-1]
    return vals[order], vecs[:, order]


def dense_loss(x, blocks, ys) -> float:
    total = 0.0
    for g, y in zip(blocks, ys):
        resid = x - g @ y
        total += np.sum(resid * resid)
    return total / len(blocks)


@pytest.fixture
def rng():
    return np.random.default_rng(20160114)
