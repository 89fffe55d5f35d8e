"""Mallows samplers are exact; mixtures and censoring behave."""
from __future__ import annotations

import math
from collections import Counter

import numpy as np
import pytest
from scipy import stats

from rankkernel import partial as pr
from rankkernel.errors import RankKernelError
from rankkernel.sampling import (
    MallowsModel,
    MixtureModel,
    censor_topk,
    mallows_pmf,
    sample_mallows,
    sample_mixture,
    sample_uniform_permutations,
    two_population_mixture,
)


def chi_square_pvalue(draws, support, probs):
    index = {p: i for i, p in enumerate(support)}
    counts = np.bincount([index[d] for d in draws], minlength=len(support))
    return stats.chisquare(counts, f_exp=len(draws) * probs).pvalue


class TestMallowsKendall:
    def test_insertion_sampler_matches_exact_pmf(self):
        rng = np.random.default_rng(40)
        model = MallowsModel((3, 1, 5, 2, 4), 0.7, "kendall")
        support, probs = mallows_pmf(model)
        draws = sample_mallows(model, 40_000, rng)
        assert chi_square_pvalue(draws, support, probs) > 0.01

    def test_insertion_agrees_with_enumeration_sampler(self):
        rng = np.random.default_rng(41)
        model = MallowsModel((2, 4, 1, 5, 3), 1.2, "kendall")
        a = sample_mallows(model, 20_000, rng, method="insertion")
        b = sample_mallows(model, 20_000, rng, method="enumeration")
        support, _ = mallows_pmf(model)
        index = {p: i for i, p in enumerate(support)}
        table = np.zeros((2, len(support)))
        for row, draws in enumerate((a, b)):
            for d in draws:
                table[row, index[d]] += 1
        table = table[:, table.sum(axis=0) > 0]
        assert stats.chi2_contingency(table).pvalue > 0.01

    def test_high_concentration_collapses_to_center(self):
        rng = np.random.default_rng(42)
        model = MallowsModel((4, 2, 5, 1, 3), 50.0, "kendall")
        draws = sample_mallows(model, 1000, rng)
        assert sum(1 for d in draws if d == model.center) >= 990

    def test_zero_like_concentration_near_uniform(self):
        rng = np.random.default_rng(43)
        model = MallowsModel((1, 2, 3, 4, 5), 1e-9, "kendall")
        draws = sample_mallows(model, 40_000, rng)
        support = [tuple(p) for p in __import__("itertools").permutations(range(1, 6))]
        uniform = np.full(len(support), 1.0 / len(support))
        assert chi_square_pvalue(draws, support, uniform) > 0.01

    def test_any_degree_supported(self):
        rng = np.random.default_rng(44)
        model = MallowsModel(tuple(range(1, 31)), 0.5, "kendall")
        draws = sample_mallows(model, 5, rng)
        assert all(sorted(d) == list(range(1, 31)) for d in draws)


class TestMallowsHamming:
    def test_enumeration_sampler_matches_exact_pmf(self):
        rng = np.random.default_rng(45)
        model = MallowsModel((2, 1, 4, 3, 5), 1.0, "hamming")
        support, probs = mallows_pmf(model)
        draws = sample_mallows(model, 40_000, rng)
        assert chi_square_pvalue(draws, support, probs) > 0.01

    def test_large_degree_rejected(self):
        model = MallowsModel(tuple(range(1, 10)), 1.0, "hamming")
        with pytest.raises(RankKernelError, match="degree <= 8"):
            sample_mallows(model, 1, np.random.default_rng(0))

    def test_insertion_rejected_for_hamming(self):
        model = MallowsModel((1, 2, 3), 1.0, "hamming")
        with pytest.raises(RankKernelError, match="Kendall"):
            sample_mallows(model, 1, np.random.default_rng(0), method="insertion")


class TestMixtures:
    def test_weights_validated(self):
        m = MallowsModel((1, 2, 3), 1.0)
        with pytest.raises(ValueError, match="sum to 1"):
            MixtureModel(((0.5, m), (0.4, m)))
        with pytest.raises(ValueError, match="positive"):
            MixtureModel(((1.5, m), (-0.5, m)))

    def test_single_component_equals_mallows(self):
        model = MallowsModel((3, 1, 2), 0.9)
        mix = MixtureModel(((1.0, model),))
        support, probs = mallows_pmf(model)
        draws = sample_mixture(mix, 20_000, np.random.default_rng(46))
        assert chi_square_pvalue(draws, support, probs) > 0.01

    def test_even_split_between_distant_centers(self):
        rng = np.random.default_rng(47)
        n = 6
        mix = MixtureModel(
            (
                (0.5, MallowsModel(tuple(range(1, n + 1)), 50.0, "kendall")),
                (0.5, MallowsModel(tuple(range(n, 0, -1)), 50.0, "kendall")),
            )
        )
        draws = sample_mixture(mix, 10_000, rng)
        at_identity = sum(1 for d in draws if d == tuple(range(1, n + 1)))
        at_reverse = sum(1 for d in draws if d == tuple(range(n, 0, -1)))
        assert at_identity + at_reverse >= 9950
        # Binomial(10^4, 1/2): +-4 sigma is 200.
        assert abs(at_identity - 5000) < 200

    def test_structured_population_shape(self):
        mix = two_population_mixture(6, 1.0)
        assert mix.degree == 6
        kinds = {(m.distance, m.center) for _, m in mix.components}
        assert kinds == {
            ("kendall", (1, 2, 3, 4, 5, 6)),
            ("hamming", (6, 5, 4, 3, 2, 1)),
        }


class TestCensoring:
    def test_full_chain(self):
        r = censor_topk((3, 1, 2), 3)
        assert pr.cardinality(r) == 1
        assert pr.enumerate_consistent(r) == [(3, 1, 2)]

    def test_consistency_and_cardinality(self):
        rng = np.random.default_rng(48)
        for _ in range(100):
            n = int(rng.integers(2, 8))
            word = tuple(int(x) for x in rng.permutation(n) + 1)
            k = int(rng.integers(1, n + 1))
            r = censor_topk(word, k)
            assert r.is_top_k
            assert pr.is_consistent(word, r)
            assert pr.cardinality(r) == math.factorial(n - k)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            censor_topk((1, 2, 3), 0)
        with pytest.raises(ValueError):
            censor_topk((1, 2, 3), 4)


def test_uniform_permutations_cover_group():
    rng = np.random.default_rng(49)
    draws = sample_uniform_permutations(4, 20_000, rng)
    counts = Counter(draws)
    assert len(counts) == 24
    observed = np.array(list(counts.values()))
    assert stats.chisquare(observed).pvalue > 0.01
