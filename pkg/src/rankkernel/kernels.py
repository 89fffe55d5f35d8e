"""Positive-definite kernels between permutations.

Families (all symmetric, scaled by an overall factor, default 1):

- kendall:           k(a, b) = (n_c - n_d) / C(n,2), the normalised
                     pair-agreement coefficient; values in [-1, 1].
- mallows:           k(a, b) = exp(-nu * n_d(a, b)).
- polynomial:        k(a, b) = (1 + kendall(a, b)) ** m.
- hamming:           k(a, b) = n - hamming_distance(a, b), the trace of the
                     product of the two permutation-matrix features.
- exp_semimetric:    k(a, b) = exp(-nu * d(a, b)) for a chosen base distance.
- distance_induced:  k(a, b) = (d(a, c) + d(b, c) - d(a, b)) / 2 for a
                     negative-type base distance d and centre permutation c.

Matrix entry points are vectorised over lists of permutations; pointwise
evaluation goes through the scalar distance functions.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateInputError, PsdViolationError
from .perm import (
    NEGATIVE_TYPE_DISTANCES,
    Perm,
    distance,
    identity,
    kendall_distance,
)

FAMILIES = ("kendall", "mallows", "polynomial", "hamming", "exp_semimetric", "distance_induced")

BASE_DISTANCES = ("kendall", "hamming", "cayley", "spearman_footrule", "spearman_rank_corr", "linf")


@dataclass(frozen=True)
class KernelSpec:
    """A kernel family plus its hyperparameters.

    bandwidth is the decay rate nu of the mallows / exp_semimetric
    families; degree_m the polynomial degree; base_distance the distance
    under exp_semimetric / distance_induced; center the reference
    permutation of distance_induced (identity when omitted).
    """

    family: str
    bandwidth: float | None = None
    degree_m: int | None = None
    base_distance: str | None = None
    center: tuple[int, ...] | None = None
    scale: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}; choose from {FAMILIES}")
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        if self.family in ("mallows", "exp_semimetric"):
            if self.bandwidth is None or self.bandwidth <= 0:
                raise ValueError(f"{self.family} kernel requires bandwidth > 0")
        if self.family == "polynomial":
            if self.degree_m is None or self.degree_m < 1:
                raise ValueError("polynomial kernel requires degree_m >= 1")
        if self.family == "exp_semimetric":
            base = self.base_distance or "kendall"
            if base not in BASE_DISTANCES:
                raise ValueError(f"unknown base distance {base!r}")
            object.__setattr__(self, "base_distance", base)
        if self.family == "distance_induced":
            base = self.base_distance or "kendall"
            if base not in NEGATIVE_TYPE_DISTANCES:
                raise ValueError(
                    f"distance_induced requires a negative-type base distance "
                    f"{NEGATIVE_TYPE_DISTANCES}, got {base!r}"
                )
            object.__setattr__(self, "base_distance", base)
            if self.center is not None:
                object.__setattr__(self, "center", tuple(int(x) for x in self.center))

    def resolved_center(self, degree: int) -> Perm:
        return self.center if self.center is not None else identity(degree)

    def to_dict(self) -> dict:
        out: dict = {"family": self.family}
        if self.bandwidth is not None:
            out["bandwidth"] = self.bandwidth
        if self.degree_m is not None:
            out["degree_m"] = self.degree_m
        if self.base_distance is not None:
            out["base_distance"] = self.base_distance
        if self.center is not None:
            out["center"] = list(self.center)
        if self.scale != 1.0:
            out["scale"] = self.scale
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "KernelSpec":
        known = {"family", "bandwidth", "degree_m", "base_distance", "center", "scale"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown kernel spec fields {sorted(unknown)}")
        kwargs = dict(data)
        if "center" in kwargs and kwargs["center"] is not None:
            kwargs["center"] = tuple(kwargs["center"])
        return cls(**kwargs)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "KernelSpec":
        return cls.from_dict(json.loads(text))


def _check_degrees(a: Perm, b: Perm) -> None:
    if len(a) != len(b):
        raise ValueError(f"degree mismatch: {len(a)} vs {len(b)}")


def eval_kernel(spec: KernelSpec, a: Perm, b: Perm) -> float:
    """Pointwise kernel value k(a, b)."""
    _check_degrees(a, b)
    n = len(a)
    if spec.family == "kendall":
        pairs = n * (n - 1) // 2
        value = 1.0 - 2.0 * kendall_distance(a, b) / pairs
    elif spec.family == "mallows":
        value = float(np.exp(-spec.bandwidth * kendall_distance(a, b)))
    elif spec.family == "polynomial":
        pairs = n * (n - 1) // 2
        value = (2.0 - 2.0 * kendall_distance(a, b) / pairs) ** spec.degree_m
    elif spec.family == "hamming":
        value = float(n - distance("hamming", a, b))
    elif spec.family == "exp_semimetric":
        value = float(np.exp(-spec.bandwidth * distance(spec.base_distance, a, b)))
    elif spec.family == "distance_induced":
        c = spec.resolved_center(n)
        d = spec.base_distance
        value = 0.5 * (distance(d, a, c) + distance(d, b, c) - distance(d, a, b))
    else:  # pragma: no cover - guarded by KernelSpec
        raise ValueError(spec.family)
    return spec.scale * value


def induced_sq_distance(spec: KernelSpec, a: Perm, b: Perm) -> float:
    """Squared semimetric induced by the kernel: k(a,a) + k(b,b) - 2 k(a,b).

    Rounding noise is clamped at zero from below (tolerance 1e-12).
    """
    value = eval_kernel(spec, a, a) + eval_kernel(spec, b, b) - 2.0 * eval_kernel(spec, a, b)
    if value < 0:
        if value < -1e-12 * max(1.0, spec.scale):
            raise PsdViolationError(value, 1e-12, (2, 2))
        value = 0.0
    return value


# ---------------------------------------------------------------------------
# Vectorised matrices
# ---------------------------------------------------------------------------


def _as_matrix(perms: Sequence[Perm]) -> np.ndarray:
    arr = np.asarray(perms, dtype=np.int64)
    if arr.ndim != 2:
        raise ValueError("expected a non-empty sequence of equal-degree permutations")
    return arr


def _rank_array(mat: np.ndarray) -> np.ndarray:
    # rank_array[t, x-1] = position of item x in row t
    m, n = mat.shape
    ranks = np.empty((m, n), dtype=np.int64)
    rows = np.arange(m)[:, None]
    ranks[rows, mat - 1] = np.arange(1, n + 1)[None, :]
    return ranks


def pair_sign_matrix(mat: np.ndarray) -> np.ndarray:
    """Rows of +-1 pair orientations; S @ S.T relates linearly to Kendall distances."""
    ranks = _rank_array(mat)
    n = mat.shape[1]
    ix, iy = np.triu_indices(n, k=1)
    return np.sign(ranks[:, ix] - ranks[:, iy]).astype(np.float64)


def _kendall_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = a.shape[1]
    pairs = n * (n - 1) // 2
    agree = pair_sign_matrix(a) @ pair_sign_matrix(b).T
    return (pairs - agree) / 2.0


def _hamming_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = a.shape[1]
    out = np.zeros((a.shape[0], b.shape[0]))
    for i in range(n):
        out += a[:, i][:, None] != b[None, :, i]
    return out


def _value_vector_matrix(name: str, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if name == "spearman_rank_corr":
        aa = np.sum(a.astype(np.float64) ** 2, axis=1)
        bb = np.sum(b.astype(np.float64) ** 2, axis=1)
        return aa[:, None] + bb[None, :] - 2.0 * (a.astype(np.float64) @ b.T.astype(np.float64))
    out = np.empty((a.shape[0], b.shape[0]))
    chunk = max(1, 2_000_000 // max(1, b.shape[0] * a.shape[1]))
    for start in range(0, a.shape[0], chunk):
        diff = np.abs(a[start : start + chunk, None, :] - b[None, :, :]).astype(np.float64)
        if name == "spearman_footrule":
            out[start : start + chunk] = diff.sum(axis=2)
        elif name == "linf":
            out[start : start + chunk] = diff.max(axis=2)
        else:  # pragma: no cover
            raise ValueError(name)
    return out


def distance_matrix(
    name: str, perms_a: Sequence[Perm], perms_b: Sequence[Perm] | None = None
) -> np.ndarray:
    """Pairwise distances between two lists of permutations."""
    a = _as_matrix(perms_a)
    b = a if perms_b is None else _as_matrix(perms_b)
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"degree mismatch: {a.shape[1]} vs {b.shape[1]}")
    if name == "kendall":
        return _kendall_matrix(a, b)
    if name == "hamming":
        return _hamming_matrix(a, b)
    if name == "cayley":
        ranks_b = _rank_array(b)
        out = np.empty((a.shape[0], b.shape[0]))
        for i, row in enumerate(a):
            for j in range(b.shape[0]):
                word = ranks_b[j, row - 1]  # (b_j^-1 o a_i), same cycle count as a_i o b_j^-1
                out[i, j] = _cycle_defect(word)
        return out
    if name in ("spearman_footrule", "spearman_rank_corr", "linf"):
        return _value_vector_matrix(name, a, b)
    raise ValueError(f"unknown distance {name!r}")


def _cycle_defect(word: np.ndarray) -> int:
    # n minus the number of cycles of the 1-based word
    n = word.shape[0]
    seen = np.zeros(n, dtype=bool)
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


def kernel_matrix(
    spec: KernelSpec,
    perms_a: Sequence[Perm],
    perms_b: Sequence[Perm] | None = None,
    threads: int = 1,
) -> np.ndarray:
    """Pairwise kernel values; rows index perms_a, columns perms_b.

    With threads > 1, rows are computed in disjoint blocks on a thread
    pool; the output is identical for any thread count.
    """
    a = _as_matrix(perms_a)
    symmetric = perms_b is None
    b = a if symmetric else _as_matrix(perms_b)
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"degree mismatch: {a.shape[1]} vs {b.shape[1]}")
    if threads > 1 and a.shape[0] >= 2 * threads:
        blocks = np.array_split(np.arange(a.shape[0]), threads)
        out = np.empty((a.shape[0], b.shape[0]))
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(_kernel_block, spec, a[idx], b) for idx in blocks if idx.size
            ]
            for fut, idx in zip(futures, [ix for ix in blocks if ix.size]):
                out[idx[0] : idx[-1] + 1] = fut.result()
        return out
    return _kernel_block(spec, a, b)


def _kernel_block(spec: KernelSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = a.shape[1]
    if spec.family == "kendall":
        pairs = n * (n - 1) // 2
        out = 1.0 - 2.0 * _kendall_matrix(a, b) / pairs
    elif spec.family == "mallows":
        out = np.exp(-spec.bandwidth * _kendall_matrix(a, b))
    elif spec.family == "polynomial":
        pairs = n * (n - 1) // 2
        out = (2.0 - 2.0 * _kendall_matrix(a, b) / pairs) ** spec.degree_m
    elif spec.family == "hamming":
        out = n - _hamming_matrix(a, b)
    elif spec.family == "exp_semimetric":
        perms_a = [tuple(int(x) for x in row) for row in a]
        perms_b = [tuple(int(x) for x in row) for row in b]
        out = np.exp(-spec.bandwidth * distance_matrix(spec.base_distance, perms_a, perms_b))
    elif spec.family == "distance_induced":
        perms_a = [tuple(int(x) for x in row) for row in a]
        perms_b = [tuple(int(x) for x in row) for row in b]
        c = spec.resolved_center(n)
        da = distance_matrix(spec.base_distance, perms_a, [c])[:, 0]
        db = distance_matrix(spec.base_distance, perms_b, [c])[:, 0]
        out = 0.5 * (da[:, None] + db[None, :] - distance_matrix(spec.base_distance, perms_a, perms_b))
    else:  # pragma: no cover
        raise ValueError(spec.family)
    return spec.scale * out


def gram(spec: KernelSpec, perms: Sequence[Perm], threads: int = 1) -> np.ndarray:
    """Symmetric Gram matrix of pointwise kernel values."""
    if len(perms) == 0:
        raise ValueError("need at least one permutation")
    out = kernel_matrix(spec, perms, None, threads=threads)
    return (out + out.T) / 2.0


def min_eigenvalue(matrix: np.ndarray) -> float:
    sym = (matrix + matrix.T) / 2.0
    return float(np.linalg.eigvalsh(sym)[0])


def require_psd(matrix: np.ndarray, tol: float = 1e-9) -> float:
    """Raise PsdViolationError when the minimum eigenvalue is below -tol."""
    low = min_eigenvalue(matrix)
    if low < -tol:
        raise PsdViolationError(low, tol, matrix.shape)
    return low


def median_bandwidth(perms: Sequence[Perm], distance_name: str = "kendall") -> float:
    """1 / lower-median of all pairwise distances; a bandwidth heuristic.

    Raises DegenerateInputError when the median distance is zero (in
    particular when all permutations coincide).
    """
    if len(perms) < 2:
        raise ValueError("need at least two permutations")
    dmat = distance_matrix(distance_name, perms)
    iu = np.triu_indices(len(perms), k=1)
    values = np.sort(dmat[iu])
    med = values[(len(values) - 1) // 2]  # lower median
    if med <= 0:
        raise DegenerateInputError(
            "median pairwise distance is zero; cannot derive a bandwidth"
        )
    return 1.0 / float(med)
