"""Unbiased MMD^2 statistic and its label-shuffle test."""
from __future__ import annotations

import numpy as np
import pytest
from scipy import stats

from rankkernel import partial as pr
from rankkernel.estimators import EstimatorConfig, derive_rng, gram_for_rankings
from rankkernel.kernels import KernelSpec
from rankkernel.mmd import MMDReport, mmd2_unbiased, permutation_test, write_report
from rankkernel.sampling import censor_topk, sample_uniform_permutations

MALLOWS = KernelSpec("mallows", bandwidth=1.0)


def full_chains(words):
    return [pr.top_k_ranking(w, len(w)) for w in words]


class TestStatistic:
    def test_identical_samples_give_zero(self):
        words = [(1, 2, 3, 4), (2, 1, 3, 4), (4, 3, 2, 1), (3, 1, 4, 2)]
        rankings = full_chains(words + words)
        estimate = gram_for_rankings(MALLOWS, rankings, EstimatorConfig(estimator="exact"))
        assert mmd2_unbiased(estimate.matrix, (4, 4)) == pytest.approx(0.0, abs=1e-12)

    def test_can_be_negative_under_the_null(self):
        rng = np.random.default_rng(60)
        seen_negative = False
        for _ in range(50):
            words = sample_uniform_permutations(4, 12, rng)
            estimate = gram_for_rankings(
                MALLOWS, full_chains(words), EstimatorConfig(estimator="exact")
            )
            if mmd2_unbiased(estimate.matrix, (6, 6)) < 0:
                seen_negative = True
                break
        assert seen_negative

    def test_matches_hand_formula_unequal_sizes(self):
        rng = np.random.default_rng(61)
        words = sample_uniform_permutations(5, 7, rng)
        estimate = gram_for_rankings(MALLOWS, full_chains(words), EstimatorConfig(estimator="exact"))
        k = estimate.matrix
        m, n = 3, 4
        term_x = sum(k[i, j] for i in range(m) for j in range(m) if i != j) / (m * (m - 1))
        term_y = sum(k[i, j] for i in range(m, 7) for j in range(m, 7) if i != j) / (n * (n - 1))
        cross = sum(k[i, j] for i in range(m) for j in range(m, 7)) / (m * n)
        assert mmd2_unbiased(k, (m, n)) == pytest.approx(term_x + term_y - 2 * cross)

    def test_matches_hand_formula_equal_sizes(self):
        # For m = n the matched cross pairs (x_i, y_i) are excluded.
        rng = np.random.default_rng(64)
        words = sample_uniform_permutations(5, 8, rng)
        estimate = gram_for_rankings(MALLOWS, full_chains(words), EstimatorConfig(estimator="exact"))
        k = estimate.matrix
        m = 4
        total = 0.0
        for i in range(m):
            for j in range(m):
                if i != j:
                    total += k[i, j] + k[m + i, m + j] - k[i, m + j] - k[j, m + i]
        assert mmd2_unbiased(k, (m, m)) == pytest.approx(total / (m * (m - 1)))

    def test_small_samples_rejected(self):
        with pytest.raises(ValueError, match="at least two"):
            mmd2_unbiased(np.eye(3), (1, 2))
        with pytest.raises(ValueError, match="does not match"):
            mmd2_unbiased(np.eye(4), (3, 2))


class TestPermutationTest:
    def test_report_fields_and_pvalue_floor(self):
        rng = np.random.default_rng(62)
        pooled = [censor_topk(w, 2) for w in sample_uniform_permutations(5, 16, rng)]
        report = permutation_test(
            pooled, (8, 8), MALLOWS, EstimatorConfig(estimator="mc", samples=8),
            num_shuffles=99, seed=5,
        )
        assert report.sample_sizes == (8, 8)
        assert report.num_shuffles == 99
        assert 1 / 100 <= report.p_value <= 1.0
        assert len(report.null_statistics) == 99
        assert report.estimator == "mc"

    def test_shuffles_reindex_a_single_gram(self):
        # Recomputing the statistic from an explicitly reordered matrix must
        # agree exactly with the reindexing the test performs internally.
        rng = np.random.default_rng(63)
        pooled = [censor_topk(w, 2) for w in sample_uniform_permutations(5, 10, rng)]
        config = EstimatorConfig(estimator="mc", samples=6)
        report = permutation_test(pooled, (5, 5), MALLOWS, config, num_shuffles=120, seed=7)
        estimate = gram_for_rankings(MALLOWS, pooled, config, master_seed=7)
        shuffle_rng = derive_rng(7, 1)
        for expected in report.null_statistics:
            order = shuffle_rng.permutation(10)
            reordered = estimate.matrix[np.ix_(order, order)]
            assert mmd2_unbiased(reordered, (5, 5)) == pytest.approx(expected, abs=1e-15)

    def test_minimum_shuffles_enforced(self):
        pooled = full_chains([(1, 2, 3)] * 6)
        with pytest.raises(ValueError, match="99"):
            permutation_test(pooled, (3, 3), MALLOWS, EstimatorConfig(), num_shuffles=10, seed=0)

    def test_null_rank_exchangeability(self):
        # Under the null the observed statistic's rank among shuffles is
        # uniform; gate with a Kolmogorov-Smirnov test over repetitions.
        pvals = []
        for trial in range(150):
            rng = derive_rng(200 + trial, 9)
            pooled = [censor_topk(w, 2) for w in sample_uniform_permutations(5, 12, rng)]
            report = permutation_test(
                pooled, (6, 6), MALLOWS, EstimatorConfig(estimator="mc", samples=6),
                num_shuffles=99, seed=300 + trial,
            )
            pvals.append(report.p_value)
        assert stats.kstest(pvals, "uniform").pvalue > 0.01

    def test_json_round_trip(self, tmp_path):
        report = MMDReport(0.5, 0.25, 99, 3, "mc", (4, 4), (0.1, 0.2))
        write_report(report, tmp_path / "r.json")
        import json

        data = json.loads((tmp_path / "r.json").read_text())
        assert data["statistic"] == 0.5
        assert data["sample_sizes"] == [4, 4]
        assert data["null_statistics"] == [0.1, 0.2]
