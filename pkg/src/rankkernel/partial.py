"""Partial rankings as ordered blocks and as sets of consistent full rankings.

A partial ranking over n items is an ordered sequence of disjoint non-empty
blocks B_1 > B_2 > ... > B_l: every item in B_i is preferred to every item
in B_j for i < j, and items not mentioned in any block are unconstrained.
A full ranking (permutation) is consistent with the partial ranking when
it places every cross-block pair in the stated order.

A top-k ranking is the exhaustive special case of k singleton blocks
followed by the block of all remaining items; its consistent permutations
are exactly those that fix the k ranked items at the first k positions.

Text syntax: blocks separated by ">", items inside a block separated by
",", e.g. "3>1,2>4" reads 3 > {1, 2} > 4. A trailing "|rest" token appends
the block of all unmentioned items, making the ranking exhaustive.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EnumerationLimitError, UnsupportedRankingError
from .perm import Perm, check_permutation, inverse


@dataclass(frozen=True)
class PartialRanking:
    """Ordered disjoint item blocks over {1, ..., degree}.

    Blocks are normalised to sorted tuples; the order *between* blocks is
    meaningful, the order inside a block is not.
    """

    degree: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("degree must be >= 1")
        norm = []
        seen: set[int] = set()
        for block in self.blocks:
            items = tuple(sorted(int(x) for x in block))
            if not items:
                raise ValueError("blocks must be non-empty")
            for x in items:
                if not 1 <= x <= self.degree:
                    raise ValueError(f"item {x} outside 1..{self.degree}")
                if x in seen:
                    raise ValueError(f"item {x} appears in more than one block")
                seen.add(x)
            norm.append(items)
        object.__setattr__(self, "blocks", tuple(norm))

    @property
    def ranked_items(self) -> frozenset[int]:
        return frozenset(x for block in self.blocks for x in block)

    @property
    def num_ranked(self) -> int:
        return sum(len(b) for b in self.blocks)

    @property
    def is_exhaustive(self) -> bool:
        return self.num_ranked == self.degree

    @property
    def is_top_k(self) -> bool:
        """True for k singleton blocks followed by the block of the rest.

        The empty ranking (no constraints) counts as top-0, as does the
        single block of all items.
        """
        if not self.blocks:
            return True
        return self.is_exhaustive and all(len(b) == 1 for b in self.blocks[:-1])

    def top_k_items(self) -> tuple[int, ...]:
        """The ordered ranked prefix of a top-k ranking (its fixed positions)."""
        self._require_top_k()
        if not self.blocks:
            return ()
        return tuple(b[0] for b in self.blocks[:-1])

    def _require_top_k(self) -> None:
        if not self.is_top_k:
            raise UnsupportedRankingError(
                f"operation requires a top-k ranking, got {to_string(self)!r} "
                f"(exhaustive={self.is_exhaustive})"
            )

    def __str__(self) -> str:
        return to_string(self)


def top_k_ranking(items: tuple[int, ...] | list[int], degree: int) -> PartialRanking:
    """Build the top-k ranking items[0] > items[1] > ... > rest."""
    items = tuple(int(x) for x in items)
    rest = tuple(sorted(set(range(1, degree + 1)) - set(items)))
    blocks: tuple[tuple[int, ...], ...] = tuple((x,) for x in items)
    if rest:
        blocks = blocks + (rest,)
    return PartialRanking(degree, blocks)


def from_string(text: str, degree: int) -> PartialRanking:
    """Parse the "3>1,2>4" block syntax; "|rest" appends the complement."""
    text = text.strip()
    exhaustive = False
    if "|" in text:
        body, _, marker = text.partition("|")
        if marker.strip() != "rest":
            raise ValueError(f"unknown marker {marker!r}, expected 'rest'")
        text = body.strip()
        exhaustive = True
    blocks: list[tuple[int, ...]] = []
    if text:
        for part in text.split(">"):
            try:
                items = tuple(int(tok) for tok in part.split(","))
            except ValueError:
                raise ValueError(f"non-integer item in block {part!r}")
            blocks.append(items)
    ranking = PartialRanking(degree, tuple(blocks))
    if exhaustive and not ranking.is_exhaustive:
        rest = tuple(sorted(set(range(1, degree + 1)) - ranking.ranked_items))
        ranking = PartialRanking(degree, ranking.blocks + (rest,))
    return ranking


def to_string(ranking: PartialRanking) -> str:
    """Inverse of from_string, emitting all blocks explicitly."""
    return ">".join(",".join(str(x) for x in block) for block in ranking.blocks)


def is_consistent(perm: Perm, ranking: PartialRanking) -> bool:
    """True when perm places every cross-block pair in the stated order."""
    if len(perm) != ranking.degree:
        raise ValueError(f"degree mismatch: {len(perm)} vs {ranking.degree}")
    pos = inverse(perm)
    prev_max = 0
    for block in ranking.blocks:
        positions = [pos[x - 1] for x in block]
        if min(positions) <= prev_max:
            return False
        prev_max = max(positions)
    return True


def cardinality(ranking: PartialRanking) -> int:
    """Exact number of consistent full rankings.

    Equals n! * prod_i |B_i|! / m! where m is the number of ranked items:
    of the n! orderings, a fraction prod|B_i|!/m! put the ranked items in
    an admissible relative order, and unranked items are free.
    """
    n = ranking.degree
    m = ranking.num_ranked
    count = math.factorial(n) // math.factorial(m)
    for block in ranking.blocks:
        count *= math.factorial(len(block))
    return count


def enumerate_consistent(ranking: PartialRanking, limit: int = 1_000_000) -> list[Perm]:
    """All consistent full rankings, each once, in lexicographic tuple order.

    Refuses with EnumerationLimitError when the consistent set is larger
    than limit.
    """
    size = cardinality(ranking)
    if size > limit:
        raise EnumerationLimitError(size, limit, f"ranking {to_string(ranking)!r}")
    n = ranking.degree
    block_of = [-1] * (n + 1)  # block index per item, -1 for unranked
    for bi, block in enumerate(ranking.blocks):
        for x in block:
            block_of[x] = bi
    remaining = [len(b) for b in ranking.blocks]
    out: list[Perm] = []
    word: list[int] = []
    used = [False] * (n + 1)

    def viable(x: int) -> bool:
        bi = block_of[x]
        if bi < 0:
            return True
        # Every earlier block must already be exhausted.
        return all(remaining[j] == 0 for j in range(bi))

    def extend() -> None:
        if len(word) == n:
            out.append(tuple(word))
            return
        for x in range(1, n + 1):
            if used[x] or not viable(x):
                continue
            used[x] = True
            bi = block_of[x]
            if bi >= 0:
                remaining[bi] -= 1
            word.append(x)
            extend()
            word.pop()
            if bi >= 0:
                remaining[bi] += 1
            used[x] = False

    extend()
    return out


def sample_uniform(ranking: PartialRanking, rng: np.random.Generator) -> Perm:
    """Draw an exactly uniform consistent full ranking.

    Construction: shuffle each block internally, concatenate the blocks into
    the ranked sequence, pick a uniform set of positions for the ranked
    items (keeping their relative order), and scatter the shuffled unranked
    items over the remaining positions. Every consistent ranking arises
    from exactly one such triple of choices.
    """
    n = ranking.degree
    ranked_seq: list[int] = []
    for block in ranking.blocks:
        block = list(block)
        if len(block) > 1:
            rng.shuffle(block)
        ranked_seq.extend(block)
    unranked = sorted(set(range(1, n + 1)) - set(ranked_seq))
    if len(unranked) > 1:
        rng.shuffle(unranked)
    m = len(ranked_seq)
    word = [0] * n
    if m == n:
        word = ranked_seq
    else:
        ranked_positions = set(rng.choice(n, size=m, replace=False).tolist())
        ri = ui = 0
        for pos in range(n):
            if pos in ranked_positions:
                word[pos] = ranked_seq[ri]
                ri += 1
            else:
                word[pos] = unranked[ui]
                ui += 1
    return tuple(word)


def antithetic(perm: Perm, ranking: PartialRanking) -> Perm:
    """The consistent ranking at maximal Kendall distance from perm.

    Defined for top-k rankings only: the ranked prefix is fixed and the
    remaining n-k positions are reversed, giving Kendall distance
    C(n-k, 2) from perm. The map is an involution and a bijection of the
    consistent set, so it preserves the uniform distribution. For
    non-exhaustive rankings a maximal-distance completion would not have
    a uniform marginal, so those inputs are rejected.
    """
    ranking._require_top_k()
    perm = check_permutation(perm)
    if not is_consistent(perm, ranking):
        raise ValueError(f"permutation {perm} is not consistent with {to_string(ranking)!r}")
    k = len(ranking.top_k_items())
    return perm[:k] + perm[k:][::-1]


def sample_antithetic_pair(
    ranking: PartialRanking, rng: np.random.Generator
) -> tuple[Perm, Perm]:
    """Draw sigma uniformly on the consistent set and pair it with its antithesis.

    Both outputs are consistent; each is marginally uniform.
    """
    first = sample_uniform(ranking, rng)
    return first, antithetic(first, ranking)


def project(perm: Perm, ranking: PartialRanking) -> Perm:
    """Kendall-closest consistent ranking to an arbitrary permutation.

    For a top-k ranking the minimiser is unique: fix the ranked prefix and
    order the remaining items exactly as perm orders them. perm itself is
    returned whenever it is already consistent.
    """
    ranking._require_top_k()
    perm = check_permutation(perm)
    if len(perm) != ranking.degree:
        raise ValueError(f"degree mismatch: {len(perm)} vs {ranking.degree}")
    prefix = ranking.top_k_items()
    fixed = set(prefix)
    tail = tuple(x for x in perm if x not in fixed)
    return tuple(prefix) + tail


def compose_rankings(ranking: PartialRanking, other: PartialRanking) -> PartialRanking:
    """Refine a top-k ranking by another's ranked items.

    The result ranks the first ranking's prefix, then the second's ranked
    items not already used (in their stated order), then the rest. It is
    the support of project(tau, ranking) when tau is drawn uniformly from
    the second ranking's consistent set.
    """
    if ranking.degree != other.degree:
        raise ValueError("degree mismatch")
    prefix = ranking.top_k_items()
    extra = tuple(x for x in other.top_k_items() if x not in set(prefix))
    return top_k_ranking(prefix + extra, ranking.degree)
