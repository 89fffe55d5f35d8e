"""Average-linkage agglomerative clustering and dendrogram purity.

average_linkage merges the closest pair of clusters under the group-average
(UPGMA) distance until one cluster remains, with a deterministic
smallest-index tie-break. Leaves are numbered 0..N-1; the cluster created
by merge t is numbered N + t, matching the usual linkage convention.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateInputError


@dataclass(frozen=True)
class Dendrogram:
    """Merge list of an agglomerative clustering over n_leaves leaves."""

    n_leaves: int
    merges: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        if self.n_leaves < 1:
            raise ValueError("need at least one leaf")
        if len(self.merges) != self.n_leaves - 1:
            raise ValueError(f"expected {self.n_leaves - 1} merges, got {len(self.merges)}")

    def to_scipy_linkage(self) -> np.ndarray:
        """Linkage array (left, right, height, size) for plotting."""
        sizes = {i: 1 for i in range(self.n_leaves)}
        rows = []
        for t, (left, right, height) in enumerate(self.merges):
            size = sizes[left] + sizes[right]
            sizes[self.n_leaves + t] = size
            rows.append([float(left), float(right), float(height), float(size)])
        return np.array(rows)

    def to_dict(self) -> dict:
        return {
            "n_leaves": self.n_leaves,
            "merges": [[left, right, height] for left, right, height in self.merges],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Dendrogram":
        return cls(
            n_leaves=int(data["n_leaves"]),
            merges=tuple((int(a), int(b), float(h)) for a, b, h in data["merges"]),
        )


def write_dendrogram(tree: Dendrogram, path: str | Path) -> None:
    Path(path).write_text(json.dumps(tree.to_dict()) + "\n")


def read_dendrogram(path: str | Path) -> Dendrogram:
    return Dendrogram.from_dict(json.loads(Path(path).read_text()))


def _check_distance_matrix(dist: np.ndarray) -> np.ndarray:
    dist = np.asarray(dist, dtype=np.float64)
    if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
        raise ValueError("distance matrix must be square")
    if not np.allclose(dist, dist.T, atol=1e-12):
        raise ValueError("distance matrix must be symmetric")
    if np.any(np.abs(np.diag(dist)) > 1e-12):
        raise ValueError("distance matrix must have a zero diagonal")
    if np.any(dist < 0):
        raise ValueError("distance matrix must be nonnegative")
    return dist


def average_linkage(dist: np.ndarray) -> Dendrogram:
    """UPGMA clustering of a symmetric nonnegative zero-diagonal matrix.

    The distance between clusters is the arithmetic mean of the pairwise
    entries across them, updated with the Lance-Williams size weights.
    Among equal-distance pairs the one with the smallest indices (row
    first) merges first, so the output is deterministic.
    """
    dist = _check_distance_matrix(dist)
    n = dist.shape[0]
    if n == 1:
        return Dendrogram(1, ())
    work = dist.copy()
    np.fill_diagonal(work, np.inf)
    active_ids = list(range(n))  # cluster id per live row of `work`
    sizes = [1] * n
    merges: list[tuple[int, int, float]] = []
    for step in range(n - 1):
        flat = int(np.argmin(work))  # row-major: smallest (i, j) among ties
        i, j = divmod(flat, work.shape[0])
        if i > j:
            i, j = j, i
        height = float(work[i, j])
        merged_size = sizes[i] + sizes[j]
        # Group-average update against every other live cluster.
        new_row = (sizes[i] * work[i] + sizes[j] * work[j]) / merged_size
        work[i, :] = new_row
        work[:, i] = new_row
        work[i, i] = np.inf
        left, right = sorted((active_ids[i], active_ids[j]))
        merges.append((left, right, height))
        active_ids[i] = n + step
        sizes[i] = merged_size
        # Drop row/column j.
        keep = np.arange(work.shape[0]) != j
        work = work[np.ix_(keep, keep)]
        del active_ids[j], sizes[j]
    return Dendrogram(n, tuple(merges))


def _members_per_merge(tree: Dendrogram) -> list[tuple[list[int], list[int]]]:
    members: dict[int, list[int]] = {i: [i] for i in range(tree.n_leaves)}
    out = []
    for t, (left, right, _) in enumerate(tree.merges):
        out.append((members[left], members[right]))
        members[tree.n_leaves + t] = members[left] + members[right]
    return out


def dendrogram_purity(tree: Dendrogram, labels: list, average: str = "per_class") -> float:
    """Expected same-label fraction in the subtree joining a same-label pair.

    For every unordered pair of leaves with the same label, the relevant
    subtree is the one rooted at their lowest common ancestor; its purity
    is the fraction of its leaves sharing that label. With
    average="per_class" the expectation is taken per label class and the
    class values are averaged; average="global" draws the pair uniformly
    over all same-label pairs instead. Classes with fewer than two leaves
    carry no pairs; if no class has two, the purity is undefined.
    """
    if average not in ("per_class", "global"):
        raise ValueError("average must be 'per_class' or 'global'")
    if len(labels) != tree.n_leaves:
        raise ValueError("one label per leaf required")
    classes = sorted(set(labels), key=str)
    counts = {c: labels.count(c) for c in classes}
    eligible = [c for c in classes if counts[c] >= 2]
    if not eligible:
        raise DegenerateInputError("purity needs a label class with at least two leaves")

    # Every same-label pair split across a merge has that merge as its LCA.
    pair_sum = {c: 0.0 for c in eligible}
    for left_members, right_members in _members_per_merge(tree):
        size = len(left_members) + len(right_members)
        for c in eligible:
            in_left = sum(1 for i in left_members if labels[i] == c)
            in_right = sum(1 for i in right_members if labels[i] == c)
            cross = in_left * in_right
            if cross:
                pair_sum[c] += cross * (in_left + in_right) / size
    per_class = {c: pair_sum[c] / (counts[c] * (counts[c] - 1) / 2) for c in eligible}
    if average == "per_class":
        return float(np.mean([per_class[c] for c in eligible]))
    total_pairs = sum(counts[c] * (counts[c] - 1) / 2 for c in eligible)
    return float(sum(pair_sum[c] for c in eligible) / total_pairs)


def sampled_dendrogram_purity(
    tree: Dendrogram,
    labels: list,
    num_pairs: int,
    rng: np.random.Generator,
    average: str = "per_class",
) -> float:
    """Monte Carlo estimate of dendrogram_purity by drawing same-label pairs.

    Works directly on the merge list (find the first merge joining the
    pair, then measure that cluster), so it is an independent check of the
    exact computation.
    """
    classes = sorted(set(labels), key=str)
    counts = {c: labels.count(c) for c in classes}
    eligible = [c for c in classes if counts[c] >= 2]
    if not eligible:
        raise DegenerateInputError("purity needs a label class with at least two leaves")
    members = {c: [i for i, lab in enumerate(labels) if lab == c] for c in eligible}

    # Upward membership path of every leaf, plus size / per-label counts of
    # every cluster; the LCA of a pair is the first shared path element.
    parent: dict[int, int] = {}
    size = {i: 1 for i in range(tree.n_leaves)}
    label_count: dict[int, dict] = {i: {labels[i]: 1} for i in range(tree.n_leaves)}
    for t, (left, right, _) in enumerate(tree.merges):
        node = tree.n_leaves + t
        parent[left] = parent[right] = node
        size[node] = size[left] + size[right]
        merged = dict(label_count[left])
        for lab, cnt in label_count[right].items():
            merged[lab] = merged.get(lab, 0) + cnt
        label_count[node] = merged

    def path(x: int) -> list[int]:
        out = [x]
        while x in parent:
            x = parent[x]
            out.append(x)
        return out

    def pair_purity(u: int, v: int, label) -> float:
        on_u_path = set(path(u))
        lca = next(node for node in path(v) if node in on_u_path)
        return label_count[lca].get(label, 0) / size[lca]

    totals = {c: 0.0 for c in eligible}
    draws = {c: 0 for c in eligible}
    for _ in range(num_pairs):
        if average == "per_class":
            c = eligible[int(rng.integers(len(eligible)))]
        else:
            weights = np.array([counts[c] * (counts[c] - 1) / 2 for c in eligible], dtype=float)
            c = eligible[int(rng.choice(len(eligible), p=weights / weights.sum()))]
        u, v = rng.choice(len(members[c]), size=2, replace=False)
        totals[c] += pair_purity(members[c][int(u)], members[c][int(v)], c)
        draws[c] += 1
    if average == "per_class":
        used = [c for c in eligible if draws[c]]
        return float(np.mean([totals[c] / draws[c] for c in used]))
    return float(sum(totals.values()) / num_pairs)


def cut_tree(tree: Dendrogram, k: int) -> list[int]:
    """Cluster assignment after undoing the last k-1 merges.

    Returns one integer per leaf; clusters are numbered 0..k-1 in order of
    their smallest leaf index.
    """
    if not 1 <= k <= tree.n_leaves:
        raise ValueError(f"k must be in 1..{tree.n_leaves}, got {k}")
    parent = list(range(tree.n_leaves + len(tree.merges)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for t, (left, right, _) in enumerate(tree.merges[: tree.n_leaves - k]):
        new = tree.n_leaves + t
        parent[find(left)] = new
        parent[find(right)] = new
    roots: dict[int, int] = {}
    out = []
    for leaf in range(tree.n_leaves):
        root = find(leaf)
        if root not in roots:
            roots[root] = len(roots)
        out.append(roots[root])
    return out
