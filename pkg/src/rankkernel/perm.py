"""Permutations of {1, ..., n} stored as position -> item tuples.

A ranking a_1 > a_2 > ... > a_n of n items is stored as the tuple
(a_1, ..., a_n): entry j (0-based) holds the item placed at rank j + 1.
Item ids are 1-based. All functions treat permutations as immutable
tuples and are safe to call concurrently.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

Perm = tuple[int, ...]


def is_permutation(word: Sequence[int]) -> bool:
    """Check that word is a permutation of 1..n where n = len(word).

    >>> [is_permutation(w) for w in [(), (1,), (2, 3, 1), (1, 1, 2), (0, 1)]]
    [True, True, True, False, False]
    """
    n = len(word)
    if n == 0:
        return True
    seen = [False] * n
    for x in word:
        if not 1 <= x <= n or seen[x - 1]:
            return False
        seen[x - 1] = True
    return True


def check_permutation(word: Sequence[int]) -> Perm:
    """Validate and normalise to a tuple, raising ValueError if invalid."""
    word = tuple(int(x) for x in word)
    if not is_permutation(word):
        raise ValueError(f"not a permutation of 1..{len(word)}: {word}")
    return word


def identity(n: int) -> Perm:
    """The identity permutation of degree n.

    >>> identity(3)
    (1, 2, 3)
    """
    if n < 1:
        raise ValueError("degree must be >= 1")
    return tuple(range(1, n + 1))


def reversal(n: int) -> Perm:
    """The order-reversing permutation (n, ..., 1)."""
    if n < 1:
        raise ValueError("degree must be >= 1")
    return tuple(range(n, 0, -1))


def random_permutation(n: int, rng: np.random.Generator) -> Perm:
    """A uniform random element of the degree-n symmetric group."""
    return tuple(int(x) + 1 for x in rng.permutation(n))


def _check_same_degree(a: Sequence[int], b: Sequence[int]) -> None:
    if len(a) != len(b):
        raise ValueError(f"degree mismatch: {len(a)} vs {len(b)}")


def compose(a: Perm, b: Perm) -> Perm:
    """Group composition: (a o b)(i) = a(b(i)), i.e. b is applied first.

    >>> compose((2, 3, 1), (3, 1, 2))
    (1, 2, 3)
    """
    _check_same_degree(a, b)
    return tuple(a[j - 1] for j in b)


def inverse(p: Perm) -> Perm:
    """The group inverse: inverse(p)[x - 1] is the position of item x.

    >>> inverse((2, 3, 1))
    (3, 1, 2)
    """
    inv = [0] * len(p)
    for pos, item in enumerate(p, start=1):
        inv[item - 1] = pos
    return tuple(inv)


def _merge_count(seq: list[int]) -> tuple[list[int], int]:
    # Merge sort that counts inversions along the way.
    if len(seq) <= 1:
        return seq, 0
    mid = len(seq) // 2
    left, a = _merge_count(seq[:mid])
    right, b = _merge_count(seq[mid:])
    merged: list[int] = []
    count = a + b
    i = j = 0
    while i < len(left) and j < len(right):
        if left[i] <= right[j]:
            merged.append(left[i])
            i += 1
        else:
            merged.append(right[j])
            count += len(left) - i
            j += 1
    merged += left[i:]
    merged += right[j:]
    return merged, count


def kendall_distance(a: Perm, b: Perm) -> int:
    """Number of item pairs that the two rankings order differently.

    Computed in O(n log n) by counting inversions of inverse(b) o a. The
    maximum value is n(n-1)/2, attained by a ranking and its reversal.
    Relabelling the items (composing a fixed permutation on the left)
    leaves the distance unchanged.
    """
    _check_same_degree(a, b)
    relative = compose(inverse(b), a)
    _, count = _merge_count(list(relative))
    return count


def hamming_distance(a: Perm, b: Perm) -> int:
    """Number of positions whose items differ; never equal to 1."""
    _check_same_degree(a, b)
    return sum(1 for x, y in zip(a, b) if x != y)


def cayley_distance(a: Perm, b: Perm) -> int:
    """Minimum number of transpositions taking one permutation to the other.

    Equals n minus the number of cycles of a o inverse(b); computed by
    cycle decomposition in O(n).
    """
    _check_same_degree(a, b)
    word = compose(a, inverse(b))
    n = len(word)
    seen = [False] * n
    cycles = 0
    for i in range(n):
        if seen[i]:
            continue
        cycles += 1
        j = i
        while not seen[j]:
            seen[j] = True
            j = word[j] - 1
    return n - cycles


def spearman_footrule(a: Perm, b: Perm) -> int:
    """l1 distance between the two tuples viewed as integer vectors."""
    _check_same_degree(a, b)
    return sum(abs(x - y) for x, y in zip(a, b))


def spearman_rank_corr(a: Perm, b: Perm) -> int:
    """Squared l2 distance between the tuples; always an integer."""
    _check_same_degree(a, b)
    return sum((x - y) ** 2 for x, y in zip(a, b))


def lp_distance(a: Perm, b: Perm, p: float) -> float:
    """lp distance between the tuples for real p >= 1 (IEEE double arithmetic)."""
    _check_same_degree(a, b)
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    return float(sum(abs(x - y) ** p for x, y in zip(a, b)) ** (1.0 / p))


def linf_distance(a: Perm, b: Perm) -> int:
    """l-infinity distance between the tuples."""
    _check_same_degree(a, b)
    return max(abs(x - y) for x, y in zip(a, b))


def hamming_feature(p: Perm) -> np.ndarray:
    """Permutation-matrix feature: entry [l, i] is 1 iff p(i+1) = l+1.

    Each row and column sums to one, and
    hamming_distance(a, b) = Trace[(F_a - F_b)(F_a - F_b)^T] / 2.
    """
    n = len(p)
    mat = np.zeros((n, n), dtype=np.int64)
    for pos, item in enumerate(p):
        mat[item - 1, pos] = 1
    return mat


def kendall_feature(p: Perm) -> np.ndarray:
    """Unit-norm pair-orientation feature of length n(n-1)/2.

    Entry for the item pair (x, y), x < y, is +1/sqrt(C) when x is ranked
    below y and -1/sqrt(C) otherwise, with C = n(n-1)/2. The inner product
    of two features is (n_c - n_d) / C, the normalised pair-agreement
    kernel between the two rankings.
    """
    n = len(p)
    if n < 2:
        raise ValueError("degree must be >= 2 for the pair feature")
    pos = inverse(p)
    entries = []
    for x in range(1, n + 1):
        for y in range(x + 1, n + 1):
            entries.append(1.0 if pos[x - 1] > pos[y - 1] else -1.0)
    vec = np.array(entries)
    return vec / np.sqrt(len(entries))


DISTANCES = {
    "kendall": kendall_distance,
    "hamming": hamming_distance,
    "cayley": cayley_distance,
    "spearman_footrule": spearman_footrule,
    "spearman_rank_corr": spearman_rank_corr,
    "linf": linf_distance,
}

# Distances of negative type: their zero-sum quadratic forms are nonpositive,
# so they embed in a Hilbert space and induce valid kernels.
NEGATIVE_TYPE_DISTANCES = ("kendall", "hamming", "spearman_rank_corr")


def distance(name: str, a: Perm, b: Perm) -> float:
    """Evaluate a named distance from DISTANCES."""
    try:
        fn = DISTANCES[name]
    except KeyError:
        raise ValueError(f"unknown distance {name!r}; choose from {sorted(DISTANCES)}")
    return fn(a, b)
