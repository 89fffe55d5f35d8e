"""Enumeration-backed invariant suite behind the `selfcheck` CLI command.

Every check runs at small degree where the consistent sets can be
enumerated, so each property is verified against ground truth rather than
against another estimate. Checks return silently or raise AssertionError.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

from . import partial as pr
from . import perm
from .estimators import (
    EstimatorConfig,
    draw_batches,
    estimate_gram,
    gram_for_rankings,
    herding_second_sample,
    marginal_kernel_exact,
)
from .kernels import KernelSpec, min_eigenvalue
from .sampling import MallowsModel, mallows_pmf, sample_mallows


def check_group_axioms(rng: np.random.Generator) -> None:
    for _ in range(200):
        n = int(rng.integers(2, 9))
        a = perm.random_permutation(n, rng)
        b = perm.random_permutation(n, rng)
        assert perm.compose(perm.identity(n), a) == a
        assert perm.compose(a, perm.inverse(a)) == perm.identity(n)
        assert perm.inverse(perm.inverse(b)) == b


def check_distance_oracles(rng: np.random.Generator) -> None:
    for _ in range(300):
        n = int(rng.integers(2, 8))
        a = perm.random_permutation(n, rng)
        b = perm.random_permutation(n, rng)
        pos_a, pos_b = perm.inverse(a), perm.inverse(b)
        pairs = [
            (x, y) for x in range(1, n + 1) for y in range(x + 1, n + 1)
        ]
        discordant = sum(
            1
            for x, y in pairs
            if (pos_a[x - 1] - pos_a[y - 1]) * (pos_b[x - 1] - pos_b[y - 1]) < 0
        )
        assert perm.kendall_distance(a, b) == discordant
        assert perm.hamming_distance(a, b) == sum(u != v for u, v in zip(a, b))


def check_enumeration_matches_cardinality(rng: np.random.Generator) -> None:
    for _ in range(40):
        n = int(rng.integers(3, 7))
        items = list(rng.permutation(n) + 1)
        cut = int(rng.integers(0, n))
        blocks: list[tuple[int, ...]] = []
        idx = 0
        while idx < cut:
            width = int(rng.integers(1, min(3, cut - idx) + 1))
            blocks.append(tuple(int(x) for x in items[idx : idx + width]))
            idx += width
        ranking = pr.PartialRanking(n, tuple(blocks))
        completions = pr.enumerate_consistent(ranking)
        assert len(completions) == pr.cardinality(ranking)
        assert len(set(completions)) == len(completions)
        assert all(pr.is_consistent(c, ranking) for c in completions)


def check_antithetic_identities(rng: np.random.Generator) -> None:
    for n in (4, 5, 6):
        for k in (0, 1, 2):
            prefix = tuple(int(x) for x in rng.permutation(n)[:k] + 1)
            ranking = pr.top_k_ranking(prefix, n)
            rset = pr.enumerate_consistent(ranking)
            span = math.comb(n - k, 2)
            for sigma in rset:
                anti = pr.antithetic(sigma, ranking)
                assert pr.antithetic(anti, ranking) == sigma
                assert perm.kendall_distance(sigma, anti) == span
            for sigma in rset[:: max(1, len(rset) // 12)]:
                anti = pr.antithetic(sigma, ranking)
                for tau in rset[:: max(1, len(rset) // 12)]:
                    total = perm.kendall_distance(sigma, tau) + perm.kendall_distance(anti, tau)
                    assert total == span


def check_projection_minimality(rng: np.random.Generator) -> None:
    for n in (4, 5):
        for k in (1, 2):
            prefix = tuple(int(x) for x in rng.permutation(n)[:k] + 1)
            ranking = pr.top_k_ranking(prefix, n)
            rset = pr.enumerate_consistent(ranking)
            for tau in itertools.permutations(range(1, n + 1)):
                tau = tuple(tau)
                proj = pr.project(tau, ranking)
                dists = [perm.kendall_distance(s, tau) for s in rset]
                best = min(dists)
                assert perm.kendall_distance(proj, tau) == best
                assert dists.count(best) == 1


def check_exact_kernel_psd() -> None:
    spec = KernelSpec("mallows", bandwidth=1.0)
    rankings = [
        pr.top_k_ranking((1, 2), 5),
        pr.top_k_ranking((2, 3), 5),
        pr.top_k_ranking((4,), 5),
        pr.PartialRanking(5, ((3,), (1, 5))),
    ]
    estimate = gram_for_rankings(spec, rankings, EstimatorConfig(estimator="exact"))
    assert min_eigenvalue(estimate.matrix) >= -1e-9


def check_estimated_gram_psd(rng: np.random.Generator) -> None:
    spec = KernelSpec("mallows", bandwidth=0.8)
    rankings = [pr.top_k_ranking(tuple(int(x) for x in rng.permutation(6)[:2] + 1), 6) for _ in range(6)]
    for seed in range(5):
        for estimator in ("mc", "antithetic"):
            estimate = gram_for_rankings(
                spec, rankings, EstimatorConfig(estimator=estimator, samples=8), master_seed=seed
            )
            assert min_eigenvalue(estimate.matrix) >= -1e-9


def check_estimator_unbiased() -> None:
    spec = KernelSpec("mallows", bandwidth=1.0)
    first = pr.top_k_ranking((1, 2), 5)
    second = pr.top_k_ranking((2, 3), 5)
    exact = marginal_kernel_exact(spec, first, second)
    values = []
    for seed in range(400):
        batches = draw_batches([first, second], 16, "iid", seed)
        values.append(estimate_gram(spec, batches).matrix[0, 1])
    err = abs(np.mean(values) - exact)
    se = np.std(values, ddof=1) / math.sqrt(len(values))
    assert err < 4 * se, f"estimator bias {err:.2e} exceeds 4 x SE {se:.2e}"


def check_herding_matches_antithetic() -> None:
    spec = KernelSpec("mallows", bandwidth=1.0)
    for k in (0, 1, 2):
        ranking = pr.top_k_ranking(tuple(range(1, k + 1)), 5)
        rset = pr.enumerate_consistent(ranking)
        for sigma in rset[:: max(1, len(rset) // 10)]:
            assert herding_second_sample(spec, sigma, ranking) == pr.antithetic(sigma, ranking)


def check_mallows_sampler_exact(rng: np.random.Generator) -> None:
    from scipy import stats

    model = MallowsModel((2, 4, 1, 3), 0.8, "kendall")
    support, probs = mallows_pmf(model)
    draws = sample_mallows(model, 8000, rng)
    index = {p: i for i, p in enumerate(support)}
    counts = np.bincount([index[d] for d in draws], minlength=len(support))
    p = stats.chisquare(counts, f_exp=len(draws) * probs).pvalue
    assert p > 0.005, f"Mallows sampler chi-square p = {p:.4g}"


CHECKS = [
    ("group axioms", check_group_axioms),
    ("distance oracles", check_distance_oracles),
    ("enumeration vs cardinality", check_enumeration_matches_cardinality),
    ("antithetic identities", check_antithetic_identities),
    ("projection minimality", check_projection_minimality),
    ("exact marginal Gram PSD", check_exact_kernel_psd),
    ("estimated Gram PSD", check_estimated_gram_psd),
    ("estimator unbiasedness", check_estimator_unbiased),
    ("herding second sample", check_herding_matches_antithetic),
    ("Mallows sampler exactness", check_mallows_sampler_exact),
]


def run_selfcheck(seed: int = 0, verbose: bool = True) -> int:
    """Run the suite; returns the number of failed checks."""
    failures = 0
    for name, fn in CHECKS:
        rng = np.random.default_rng(seed)
        try:
            if fn.__code__.co_argcount:
                fn(rng)
            else:
                fn()
        except AssertionError as exc:
            failures += 1
            print(f"FAIL {name}: {exc}")
        except Exception as exc:  # surfacing bugs loudly is the point
            failures += 1
            print(f"ERROR {name}: {type(exc).__name__}: {exc}")
        else:
            if verbose:
                print(f"ok   {name}")
    return failures
