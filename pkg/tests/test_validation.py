import itertools
import json

import numpy as np
import pytest

from homcluster.dataset import standardize
from homcluster.embedding import embed
from homcluster.errors import KLessThanTwo
from homcluster.homals import HomalsConfig, fit
from homcluster.indicator import build_indicator
from homcluster.synthgen import SynthConfig, generate
from homcluster.validation import (ClusterProfile, adjusted_rand_index,
                                   calinski_harabasz, profile, sweep_k)

from conftest import categorical_dataset


def ari_pair_oracle(a, b):
    """Brute-force pair concordance: count pairs together/apart directly."""
    n = len(a)
    n11 = n00 = n10 = n01 = 0
    for i, j in itertools.combinations(range(n), 2):
        same_a = a[i] == a[j]
        same_b = b[i] == b[j]
        if same_a and same_b:
            n11 += 1
        elif same_a:
            n10 += 1
        elif same_b:
            n01 += 1
        else:
            n00 += 1
    total = n11 + n10 + n01 + n00
    expected = (n11 + n10) * (n11 + n01) / total
    max_index = 0.5 * ((n11 + n10) + (n11 + n01))
    if max_index == expected:
        return 1.0
    return (n11 - expected) / (max_index - expected)


class TestAdjustedRandIndex:

    def test_identical_partitions(self):
        assert adjusted_rand_index([0, 0, 1, 1], [0, 0, 1, 1]) == 1.0

    def test_crossed_partitions(self):
        value = adjusted_rand_index([0, 0, 1, 1], [0, 1, 0, 1])
        assert abs(value - ari_pair_oracle([0, 0, 1, 1], [0, 1, 0, 1])) < 1e-12
        assert abs(value - (-0.5)) < 1e-12

    def test_relabeling_invariance(self, rng):
        a = rng.integers(0, 3, 12)
        b = rng.integers(0, 3, 12)
        perm = {0: 2, 1: 0, 2: 1}
        b_perm = np.array([perm[x] for x in b])
        assert adjusted_rand_index(a, b) == adjusted_rand_index(a, b_perm)

    def test_matches_pair_oracle_random(self, rng):
        for _ in range(100):
            n = int(rng.integers(2, 13))
            a = rng.integers(0, 4, n)
            b = rng.integers(0, 4, n)
            assert abs(adjusted_rand_index(a, b)
                       - ari_pair_oracle(a, b)) < 1e-12

    def test_self_agreement(self, rng):
        for _ in range(20):
            a = rng.integers(0, 3, 10)
            assert adjusted_rand_index(a, a) == 1.0

    def test_degenerate_partitions(self):
        # both one cluster / both all singletons: convention 1.0
        assert adjusted_rand_index([0, 0, 0], [5, 5, 5]) == 1.0
        assert adjusted_rand_index([0, 1, 2], [2, 1, 0]) == 1.0

    def test_errors(self):
        with pytest.raises(ValueError):
            adjusted_rand_index([0, 1], [0, 1, 2])
        with pytest.raises(ValueError):
            adjusted_rand_index([0], [0])


class TestCalinskiHarabasz:

    def test_hand_computed_value(self):
        x = np.array([[0.0], [1.0], [10.0], [11.0]])
        labels = [0, 0, 1, 1]
        # oracle: B = 2*(0.5-5.5)^2 + 2*(10.5-5.5)^2 = 100; W = 1
        # CHI = (100/1)/(1/2) = 200
        assert abs(calinski_harabasz(x, labels) - 200.0) < 1e-12

    def test_single_cluster_rejected(self):
        with pytest.raises(KLessThanTwo):
            calinski_harabasz(np.zeros((4, 1)), [1, 1, 1, 1])

    def test_zero_within_dispersion(self):
        x = np.array([[0.0], [0.0], [5.0], [5.0]])
        with pytest.warns(UserWarning):
            value = calinski_harabasz(x, [0, 0, 1, 1])
        assert value == float("inf")

    def test_relabeling_invariance(self, rng):
        x = rng.normal(size=(30, 2))
        labels = rng.integers(0, 3, 30)
        shuffled = (labels + 1) % 3
        assert calinski_harabasz(x, labels) == calinski_harabasz(x, shuffled)

    def test_translation_and_scaling_invariance(self, rng):
        for _ in range(10):
            x = rng.normal(size=(25, 3))
            labels = rng.integers(0, 3, 25)
            if len(np.unique(labels)) < 2:
                continue
            base = calinski_harabasz(x, labels)
            shifted = calinski_harabasz(x + np.array([5.0, -2.0, 0.1]), labels)
            scaled = calinski_harabasz(x * -3.7, labels)
            assert abs(base - shifted) < 1e-9 * abs(base)
            assert abs(base - scaled) < 1e-9 * abs(base)


def synthetic_embedded(n=4000, seed=0):
    d, truth = generate(SynthConfig(n=n, seed=seed))
    d = standardize(d)
    sol = fit(build_indicator(d), HomalsConfig(r=1, seed=0))
    return embed(d, sol), truth, d


class TestSweepK:

    def test_recovers_three_clusters(self):
        e, truth, _ = synthetic_embedded()
        report = sweep_k(e, "mbk", range(2, 6), "ari", truth=truth)
        assert report.best_k == 3
        assert len(report.per_k) == 4

    def test_chi_sweep_rows(self):
        e, _, _ = synthetic_embedded(n=1500)
        report = sweep_k(e, "clara", range(2, 7), "chi")
        ks = [row[0] for row in report.per_k]
        assert ks == [2, 3, 4, 5, 6]
        assert all(row[2] == "chi" for row in report.per_k)

    def test_singleton_sweep(self):
        e, truth, _ = synthetic_embedded(n=500)
        report = sweep_k(e, "clara", [2], "ari", truth=truth)
        assert report.best_k == 2
        assert len(report.per_k) == 1

    def test_truth_requirement(self):
        e, truth, _ = synthetic_embedded(n=300)
        with pytest.raises(ValueError):
            sweep_k(e, "mbk", [2, 3], "ari")
        with pytest.raises(ValueError):
            sweep_k(e, "mbk", [2, 3], "chi", truth=truth)

    def test_render_and_json(self):
        e, truth, _ = synthetic_embedded(n=300)
        report = sweep_k(e, "mbk", [2, 3], "ari", truth=truth)
        text = report.render()
        assert "best K" in text
        doc = json.loads(report.to_json())
        assert doc["best_k"] == report.best_k
        assert len(doc["per_k"]) == 2


class TestProfile:

    def test_degenerate_single_cluster(self, rng):
        vals = rng.normal(size=20)
        d = categorical_dataset({"c": rng.integers(0, 2, 20)},
                                continuous={"x": vals})
        prof = profile(d, np.zeros(20, dtype=int), "x")
        assert prof.counts == (20,)
        assert abs(prof.means[0] - vals.mean()) < 1e-12
        assert abs(prof.sds[0] - vals.std(ddof=1)) < 1e-12

    def test_hand_computed(self):
        d = categorical_dataset({"c": [0, 1, 0, 1]},
                                continuous={"x": [1.0, 1.0, 5.0, 5.0]})
        prof = profile(d, [0, 0, 1, 1], "x")
        assert prof.means == (1.0, 5.0)
        assert prof.counts == (2, 2)
        assert prof.sds == (0.0, 0.0)

    def test_outlier_flagging(self, rng):
        base = rng.normal(size=95)
        displaced = 3.0 + 0.1 * rng.normal(size=5)
        vals = np.concatenate([base, displaced])
        vals = (vals - vals.mean()) / vals.std()
        d = categorical_dataset({"c": rng.integers(0, 2, 100)},
                                continuous={"x": vals})
        labels = np.concatenate([np.zeros(95, dtype=int),
                                 np.ones(5, dtype=int)])
        prof = profile(d, labels, "x")
        assert 1 in prof.flagged
        assert 0 not in prof.flagged

    def test_counts_sum_to_n(self, rng):
        d = categorical_dataset({"c": rng.integers(0, 2, 40)},
                                continuous={"x": rng.normal(size=40)})
        labels = rng.integers(0, 4, 40)
        prof = profile(d, labels, "x")
        assert sum(prof.counts) == 40
        total = sum(m * c for m, c in zip(prof.means, prof.counts))
        assert abs(total - d.continuous_values["x"].sum()) < 1e-9

    def test_target_must_be_continuous(self):
        d = categorical_dataset({"c": [0, 1]}, continuous={"x": [1.0, 2.0]})
        with pytest.raises(ValueError):
            profile(d, [0, 1], "c")

    def test_render(self):
        prof = ClusterProfile(clusters=(0, 1), means=(0.1, 2.5),
                              counts=(10, 3), sds=(1.0, 0.5), flagged=(1,))
        text = prof.render()
        assert "2.5000" in text and "*" in text
