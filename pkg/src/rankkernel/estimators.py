"""Marginal kernels between partial rankings and their Monte Carlo estimators.

The marginal kernel between two partial rankings R, R' is the expectation
of a permutation kernel under independent conditionals,

    K(R, R') = sum_{s in R} sum_{t in R'} K(s, t) p(s|R) p(t|R'),

with the uniform conditionals giving the convolution kernel
K(R, R') = (1/|R||R'|) sum sum K(s, t). The estimators replace each
consistent set by a weighted sample:

    Khat(R_i, R_j) = (1/(M_i M_j)) sum_l sum_m w_l w_m K(s_l, t_m),

which is the Gram matrix of empirical mean embeddings and therefore always
positive semidefinite, whatever the sample sizes. Off-diagonal entries are
unbiased for K(R_i, R_j); the diagonal estimate has expectation
((M-1)/M) E K(s, s') + (1/M) E K(s, s).

Antithetic batches pair every uniform draw with its maximal-distance
completion, which preserves the marginals (so unbiasedness survives) and
reduces the estimator variance for the mallows family whenever the two
rankings rank different item sets.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import EnumerationLimitError, TieError
from .kernels import KernelSpec, kernel_matrix, require_psd
from .partial import (
    PartialRanking,
    antithetic,
    cardinality,
    enumerate_consistent,
    is_consistent,
    sample_antithetic_pair,
    sample_uniform,
    to_string,
)
from .perm import Perm

DEFAULT_ENUMERATION_LIMIT = 2_000_000

PAIRINGS = ("iid", "antithetic")
ESTIMATORS = ("exact", "mc", "antithetic")


def derive_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Independent stream for (master seed, key); reproducible and order-free."""
    if master_seed < 0:
        raise ValueError("master seed must be a non-negative integer")
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=tuple(key)))


@dataclass(frozen=True)
class SampleBatch:
    """Weighted consistent completions drawn for one partial ranking."""

    ranking: PartialRanking
    draws: tuple[Perm, ...]
    weights: tuple[float, ...]
    pairing: str
    seed: int | None = None

    def __post_init__(self):
        if self.pairing not in PAIRINGS:
            raise ValueError(f"pairing must be one of {PAIRINGS}")
        if len(self.draws) != len(self.weights):
            raise ValueError("one weight per draw required")
        if not self.draws:
            raise ValueError("batch must contain at least one draw")
        if any(w <= 0 for w in self.weights):
            raise ValueError("weights must be positive")
        for d in self.draws:
            if not is_consistent(d, self.ranking):
                raise ValueError(f"draw {d} inconsistent with {to_string(self.ranking)!r}")
        if self.pairing == "antithetic":
            if len(self.draws) % 2:
                raise ValueError("antithetic batches need an even number of draws")
            for t in range(0, len(self.draws), 2):
                if self.draws[t + 1] != antithetic(self.draws[t], self.ranking):
                    raise ValueError(f"draws {t}, {t + 1} are not an antithetic pair")

    @property
    def size(self) -> int:
        return len(self.draws)


@dataclass(frozen=True)
class GramEstimate:
    """Estimated kernel matrix over a list of partial rankings, with provenance."""

    matrix: np.ndarray
    estimator: str
    samples_per_ranking: tuple[int, ...]
    seed: int | None
    spec: KernelSpec

    def __post_init__(self):
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"estimator must be one of {ESTIMATORS}")

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class InducedDistances:
    """Squared distances K(R,R) + K(R',R') - 2 K(R,R') with a clamp count."""

    matrix: np.ndarray
    clamped_entries: int


class EnumeratedProposal:
    """Categorical proposal over an explicitly enumerated consistent set.

    Intended for experiments and tests at small degree; pmf lookups are by
    exact permutation identity.
    """

    def __init__(self, ranking: PartialRanking, probs: Sequence[float], limit: int = 100_000):
        support = enumerate_consistent(ranking, limit)
        probs = np.asarray(probs, dtype=np.float64)
        if probs.shape != (len(support),):
            raise ValueError("one probability per consistent completion required")
        if np.any(probs <= 0):
            raise ValueError("proposal must give positive mass to the whole set")
        self.support = support
        self.probs = probs / probs.sum()
        self._index = {p: i for i, p in enumerate(support)}

    def sample(self, rng: np.random.Generator) -> Perm:
        return self.support[int(rng.choice(len(self.support), p=self.probs))]

    def prob(self, perm: Perm) -> float:
        return float(self.probs[self._index[perm]])


def draw_batch(
    ranking: PartialRanking,
    samples: int,
    pairing: str = "iid",
    proposal: EnumeratedProposal | None = None,
    rng: np.random.Generator | None = None,
    seed: int | None = None,
) -> SampleBatch:
    """Draw a sample batch for one ranking.

    iid pairing draws `samples` exact uniform completions with unit
    weights; a proposal replaces the uniform draws with proposal draws and
    importance weights p/q. Antithetic pairing draws samples/2 coupled
    pairs (top-k rankings only, even sample count, no proposal).
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if rng is None:
        rng = derive_rng(seed if seed is not None else 0)
    if pairing == "antithetic":
        if proposal is not None:
            raise ValueError("antithetic pairing does not support importance proposals")
        if samples % 2:
            raise ValueError("antithetic pairing needs an even sample count")
        draws: list[Perm] = []
        for _ in range(samples // 2):
            first, second = sample_antithetic_pair(ranking, rng)
            draws.extend((first, second))
        weights = (1.0,) * samples
    elif pairing == "iid":
        if proposal is None:
            draws = [sample_uniform(ranking, rng) for _ in range(samples)]
            weights = (1.0,) * samples
        else:
            uniform_p = 1.0 / cardinality(ranking)
            draws = [proposal.sample(rng) for _ in range(samples)]
            weights = tuple(uniform_p / proposal.prob(d) for d in draws)
    else:
        raise ValueError(f"pairing must be one of {PAIRINGS}")
    return SampleBatch(ranking, tuple(draws), weights, pairing, seed)


def draw_batches(
    rankings: Sequence[PartialRanking],
    samples: int,
    pairing: str,
    master_seed: int,
    proposal: EnumeratedProposal | None = None,
) -> list[SampleBatch]:
    """One batch per ranking, each on its own stream derived from the seed."""
    return [
        draw_batch(r, samples, pairing, proposal, derive_rng(master_seed, 0, i), master_seed)
        for i, r in enumerate(rankings)
    ]


def estimate_gram(
    spec: KernelSpec,
    batches: Sequence[SampleBatch],
    exact_diagonal: bool = False,
    limit: int = DEFAULT_ENUMERATION_LIMIT,
    seed: int | None = None,
    threads: int = 1,
    psd_tol: float = 1e-9,
) -> GramEstimate:
    """Estimated Gram matrix over the batches' rankings.

    Entry (i, j) is the weighted double average of kernel values between
    the two batches, diagonal included, which keeps the matrix a Gram
    matrix of empirical embeddings (positive semidefinite). With
    exact_diagonal=True the diagonal is replaced by the enumerated value
    of K(R_i, R_i), removing the diagonal bias at the cost of the PSD
    guarantee being inherited from the exact kernel instead.
    """
    if not batches:
        raise ValueError("need at least one batch")
    degrees = {b.ranking.degree for b in batches}
    if len(degrees) != 1:
        raise ValueError(f"all rankings must share a degree, got {sorted(degrees)}")

    all_draws: list[Perm] = []
    slices: list[slice] = []
    for b in batches:
        slices.append(slice(len(all_draws), len(all_draws) + b.size))
        all_draws.extend(b.draws)
    big = kernel_matrix(spec, all_draws, threads=threads)

    count = len(batches)
    weights = np.zeros((count, len(all_draws)))
    for i, b in enumerate(batches):
        weights[i, slices[i]] = np.asarray(b.weights) / b.size
    matrix = weights @ big @ weights.T
    matrix = (matrix + matrix.T) / 2.0
    require_psd(matrix, psd_tol)

    if exact_diagonal:
        # The debiased diagonal is smaller than the plug-in one in
        # expectation, so the PSD guarantee no longer applies; the check
        # above ran on the raw estimate.
        for i, b in enumerate(batches):
            matrix[i, i] = marginal_kernel_exact(spec, b.ranking, b.ranking, limit)
    if seed is None:
        seeds = {b.seed for b in batches}
        seed = seeds.pop() if len(seeds) == 1 else None
    pairing = {b.pairing for b in batches}
    estimator = "antithetic" if pairing == {"antithetic"} else "mc"
    return GramEstimate(
        matrix=matrix,
        estimator=estimator,
        samples_per_ranking=tuple(b.size for b in batches),
        seed=seed,
        spec=spec,
    )


def marginal_kernel_exact(
    spec: KernelSpec,
    first: PartialRanking,
    second: PartialRanking,
    limit: int = DEFAULT_ENUMERATION_LIMIT,
) -> float:
    """Exact marginal kernel by full enumeration of both consistent sets."""
    size = cardinality(first) * cardinality(second)
    if size > limit:
        raise EnumerationLimitError(
            size,
            limit,
            f"|{to_string(first)!r}| = {cardinality(first)}, "
            f"|{to_string(second)!r}| = {cardinality(second)}",
        )
    left = enumerate_consistent(first, limit)
    right = enumerate_consistent(second, limit)
    return float(kernel_matrix(spec, left, right).mean())


def exact_gram(
    spec: KernelSpec,
    rankings: Sequence[PartialRanking],
    limit: int = DEFAULT_ENUMERATION_LIMIT,
    psd_tol: float = 1e-9,
) -> GramEstimate:
    """Gram matrix of exact marginal kernel values."""
    if not rankings:
        raise ValueError("need at least one ranking")
    count = len(rankings)
    sizes = [cardinality(r) for r in rankings]
    worst = max(s1 * s2 for s1 in sizes for s2 in sizes)
    if worst > limit:
        big_r = rankings[int(np.argmax(sizes))]
        raise EnumerationLimitError(
            worst, limit, f"largest consistent set: |{to_string(big_r)!r}| = {max(sizes)}"
        )
    completions = [enumerate_consistent(r, limit) for r in rankings]
    matrix = np.empty((count, count))
    for i in range(count):
        for j in range(i, count):
            value = float(kernel_matrix(spec, completions[i], completions[j]).mean())
            matrix[i, j] = matrix[j, i] = value
    require_psd(matrix, psd_tol)
    return GramEstimate(
        matrix=matrix,
        estimator="exact",
        samples_per_ranking=tuple(cardinality(r) for r in rankings),
        seed=None,
        spec=spec,
    )


def estimator_variance_exact(
    spec: KernelSpec,
    first: PartialRanking,
    second: PartialRanking,
    samples_first: int,
    samples_second: int,
    limit: int = DEFAULT_ENUMERATION_LIMIT,
) -> float:
    """Exact variance of the iid off-diagonal estimate Khat(R, R').

    With row means a(s) = E_t K(s, t), column means b(t) = E_s K(s, t) and
    mu = E K over independent uniforms, the estimator that reuses one
    sample set per ranking has variance

        Var(a)/M + Var(b)/M' + (Var(K) - Var(a) - Var(b)) / (M M').

    Both averaging directions contribute a term; dropping the column-mean
    term is only exact when M = 1 or b is constant.
    """
    if samples_first < 1 or samples_second < 1:
        raise ValueError("sample counts must be >= 1")
    if first == second:
        raise ValueError("variance formula applies to off-diagonal pairs only")
    size = cardinality(first) * cardinality(second)
    if size > limit:
        raise EnumerationLimitError(size, limit)
    left = enumerate_consistent(first, limit)
    right = enumerate_consistent(second, limit)
    kmat = kernel_matrix(spec, left, right)
    mu = kmat.mean()
    var_row = float(np.mean(kmat.mean(axis=1) ** 2) - mu**2)
    var_col = float(np.mean(kmat.mean(axis=0) ** 2) - mu**2)
    var_all = float(np.mean(kmat**2) - mu**2)
    m1, m2 = samples_first, samples_second
    return max(0.0, var_row / m1 + var_col / m2 + (var_all - var_row - var_col) / (m1 * m2))


def induced_sq_distance_matrix(estimate: GramEstimate) -> InducedDistances:
    """Squared-distance matrix induced by an estimated Gram matrix.

    Entries below zero (possible through sampling noise on the diagonal)
    are clamped to zero and counted; the diagonal is exactly zero.
    """
    k = estimate.matrix
    diag = np.diag(k)
    d2 = diag[:, None] + diag[None, :] - 2.0 * k
    np.fill_diagonal(d2, 0.0)
    clamped = int(np.count_nonzero(d2 < 0))
    return InducedDistances(np.maximum(d2, 0.0), clamped)


@lru_cache(maxsize=8)
def _herding_tables(spec: KernelSpec, ranking: PartialRanking, limit: int):
    support = tuple(enumerate_consistent(ranking, limit))
    kmat = kernel_matrix(spec, list(support))
    embed = kmat.mean(axis=0)  # inner products with the uniform mean embedding
    index = {p: i for i, p in enumerate(support)}
    return support, kmat, embed, index


def herding_second_sample(
    spec: KernelSpec,
    first: Perm,
    ranking: PartialRanking,
    limit: int = 100_000,
) -> Perm:
    """Greedy second sample of kernel herding for the uniform law on a ranking.

    Scans the consistent set for the minimiser of the two-point herding
    objective || mu - (phi(s1) + phi(s2)) / 2 ||^2. Only exponential
    kernels of the Kendall distance are supported; for top-k rankings the
    minimiser is unique and equals the antithetic completion of `first`.
    Ties in the objective raise TieError.
    """
    kendall_based = spec.family == "mallows" or (
        spec.family == "exp_semimetric" and spec.base_distance == "kendall"
    )
    if not kendall_based:
        raise ValueError("herding objective implemented for exponential Kendall kernels only")
    support, kmat, embed, index = _herding_tables(spec, ranking, limit)
    try:
        i = index[tuple(first)]
    except KeyError:
        raise ValueError(f"first sample {first} is not consistent with {to_string(ranking)!r}")
    # Constant terms in sigma_2 dropped: minimise -<mu, phi(s2)> + (2 K(s1, s2) + K(s2, s2)) / 4.
    objective = -embed + (2.0 * kmat[i] + np.diag(kmat)) / 4.0
    order = np.argsort(objective, kind="stable")
    best, runner = order[0], order[1] if len(order) > 1 else order[0]
    if len(order) > 1 and objective[runner] - objective[best] < 1e-12:
        raise TieError(
            f"herding objective tied between {support[best]} and {support[runner]}"
        )
    return support[int(best)]


# ---------------------------------------------------------------------------
# Batch pipeline and serialisation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EstimatorConfig:
    """How to turn a list of rankings into a Gram estimate."""

    estimator: str = "mc"
    samples: int = 20
    exact_limit: int = DEFAULT_ENUMERATION_LIMIT
    exact_diagonal: bool = False

    def __post_init__(self):
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"estimator must be one of {ESTIMATORS}")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")


def gram_for_rankings(
    spec: KernelSpec,
    rankings: Sequence[PartialRanking],
    config: EstimatorConfig,
    master_seed: int | None = None,
    threads: int = 1,
) -> GramEstimate:
    """Dispatch on the configured estimator.

    The two stochastic estimators are compared at equal budget: `samples`
    is the number of stored permutations per ranking in both cases, the
    antithetic path drawing samples/2 coupled pairs.
    """
    if config.estimator == "exact":
        return exact_gram(spec, rankings, config.exact_limit)
    if master_seed is None:
        raise ValueError("stochastic estimators require a master seed")
    pairing = "iid" if config.estimator == "mc" else "antithetic"
    batches = draw_batches(rankings, config.samples, pairing, master_seed)
    return estimate_gram(
        spec,
        batches,
        exact_diagonal=config.exact_diagonal,
        limit=config.exact_limit,
        seed=master_seed,
        threads=threads,
    )


def write_gram_csv(estimate: GramEstimate, path: str | Path) -> None:
    """Full-precision CSV of the matrix (17 significant digits)."""
    np.savetxt(path, estimate.matrix, delimiter=",", fmt="%.17g")


def gram_sidecar(estimate: GramEstimate) -> dict:
    return {
        "estimator": estimate.estimator,
        "samples_per_ranking": list(estimate.samples_per_ranking),
        "seed": estimate.seed,
        "kernel": estimate.spec.to_dict(),
        "size": estimate.size,
    }


def write_gram_sidecar(estimate: GramEstimate, path: str | Path) -> None:
    Path(path).write_text(json.dumps(gram_sidecar(estimate), indent=2, sort_keys=True) + "\n")
