"""Synthetic ranking populations: uniform, Mallows, and mixtures.

The Mallows distribution over degree-n permutations has density
p(sigma) proportional to exp(-theta * d(sigma, center)) for a location
parameter `center` and concentration theta (the inverse lengthscale).
With the Kendall distance the repeated-insertion construction samples
exactly for any n; other distances fall back to exact categorical
sampling over the enumerated group, which is only feasible for small n.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import RankKernelError
from .partial import PartialRanking, top_k_ranking
from .perm import Perm, check_permutation, distance

ENUMERATION_DEGREE_LIMIT = 8


@dataclass(frozen=True)
class MallowsModel:
    center: tuple[int, ...]
    lengthscale: float = 1.0
    distance: str = "kendall"

    def __post_init__(self):
        object.__setattr__(self, "center", check_permutation(self.center))
        if self.lengthscale <= 0:
            raise ValueError("lengthscale must be positive")
        if self.distance not in ("kendall", "hamming"):
            raise ValueError(f"unsupported Mallows distance {self.distance!r}")

    @property
    def degree(self) -> int:
        return len(self.center)


@dataclass(frozen=True)
class MixtureModel:
    components: tuple[tuple[float, MallowsModel], ...]

    def __post_init__(self):
        if not self.components:
            raise ValueError("mixture needs at least one component")
        weights = [w for w, _ in self.components]
        if any(w <= 0 for w in weights):
            raise ValueError("mixture weights must be positive")
        if abs(sum(weights) - 1.0) > 1e-12:
            raise ValueError(f"mixture weights must sum to 1, got {sum(weights)}")
        degrees = {m.degree for _, m in self.components}
        if len(degrees) != 1:
            raise ValueError("mixture components must share a degree")

    @property
    def degree(self) -> int:
        return self.components[0][1].degree


def _sample_kendall_insertion(model: MallowsModel, rng: np.random.Generator) -> Perm:
    # Insert the center's items best-first; placing the i-th item j slots
    # above the bottom adds j discordant pairs, weighted exp(-theta * j).
    theta = model.lengthscale
    word: list[int] = []
    for i, item in enumerate(model.center, start=1):
        weights = np.exp(-theta * np.arange(i, dtype=np.float64))
        weights /= weights.sum()
        above_bottom = int(rng.choice(i, p=weights))
        word.insert(i - above_bottom - 1, item)
    return tuple(word)


@lru_cache(maxsize=16)
def mallows_pmf(model: MallowsModel) -> tuple[tuple[Perm, ...], np.ndarray]:
    """Exact support and probabilities by enumerating the full group.

    Cached per model; treat the returned arrays as read-only.
    """
    n = model.degree
    if n > ENUMERATION_DEGREE_LIMIT:
        raise RankKernelError(
            f"exact Mallows enumeration needs degree <= {ENUMERATION_DEGREE_LIMIT}, got {n}"
        )
    support = tuple(tuple(p) for p in itertools.permutations(range(1, n + 1)))
    logw = np.array(
        [-model.lengthscale * distance(model.distance, p, model.center) for p in support]
    )
    probs = np.exp(logw - logw.max())
    probs /= probs.sum()
    return support, probs


def sample_mallows(
    model: MallowsModel,
    count: int,
    rng: np.random.Generator,
    method: str = "auto",
) -> list[Perm]:
    """Draw exact samples from the Mallows model.

    method "insertion" (Kendall only) works for any degree; method
    "enumeration" samples the exact categorical distribution over the
    whole group and is limited to degree 8. "auto" picks insertion for
    Kendall and enumeration otherwise.
    """
    if method == "auto":
        method = "insertion" if model.distance == "kendall" else "enumeration"
    if method == "insertion":
        if model.distance != "kendall":
            raise RankKernelError("insertion sampling is exact for the Kendall distance only")
        return [_sample_kendall_insertion(model, rng) for _ in range(count)]
    if method == "enumeration":
        support, probs = mallows_pmf(model)
        idx = rng.choice(len(support), size=count, p=probs)
        return [support[i] for i in idx]
    raise ValueError(f"unknown sampling method {method!r}")


def sample_uniform_permutations(n: int, count: int, rng: np.random.Generator) -> list[Perm]:
    return [tuple(int(x) + 1 for x in rng.permutation(n)) for _ in range(count)]


def sample_mixture(model: MixtureModel, count: int, rng: np.random.Generator) -> list[Perm]:
    """Component chosen by weight, then one Mallows draw from it."""
    weights = np.array([w for w, _ in model.components])
    choices = rng.choice(len(model.components), size=count, p=weights)
    return [sample_mallows(model.components[c][1], 1, rng)[0] for c in choices]


def censor_topk(perm: Perm, k: int) -> PartialRanking:
    """Keep the k best-ranked items of a full ranking, forget the rest.

    The input permutation is always consistent with the output, and the
    output's consistent set has exactly (n - k)! elements.
    """
    perm = check_permutation(perm)
    n = len(perm)
    if not 1 <= k <= n:
        raise ValueError(f"k must be in 1..{n}, got {k}")
    return top_k_ranking(perm[:k], n)


def two_population_mixture(n: int, lengthscale: float = 1.0) -> MixtureModel:
    """Equal-weight mixture of a Kendall model centred at the identity and a
    Hamming model centred at the reversal; a standard structured population
    for two-sample experiments against the uniform distribution."""
    ident = tuple(range(1, n + 1))
    rev = tuple(range(n, 0, -1))
    return MixtureModel(
        (
            (0.5, MallowsModel(ident, lengthscale, "kendall")),
            (0.5, MallowsModel(rev, lengthscale, "hamming")),
        )
    )
