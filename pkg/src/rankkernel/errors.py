"""Exception types shared across the package."""


class RankKernelError(Exception):
    """Base class for errors raised by this package."""


class UnsupportedRankingError(RankKernelError, ValueError):
    """An operation only defined for top-k rankings was given something else."""


class EnumerationLimitError(RankKernelError):
    """An exact computation would enumerate more permutations than allowed."""

    def __init__(self, required: int, limit: int, detail: str = ""):
        self.required = required
        self.limit = limit
        msg = f"enumeration of {required} permutations exceeds limit {limit}"
        if detail:
            msg = f"{msg} ({detail})"
        super().__init__(msg)


class DegenerateInputError(RankKernelError, ValueError):
    """Input carries no usable signal (e.g. all pairwise distances zero)."""


class PsdViolationError(RankKernelError):
    """A matrix that must be positive semidefinite is not, beyond tolerance."""

    def __init__(self, min_eigenvalue: float, tol: float, shape: tuple):
        self.min_eigenvalue = min_eigenvalue
        self.tol = tol
        super().__init__(
            f"matrix of shape {shape} has minimum eigenvalue {min_eigenvalue:.3e}, "
            f"below tolerance -{tol:.1e}; this indicates an implementation error, "
            "not sampling noise"
        )


class TieError(RankKernelError):
    """An argmin/argmax that must be unique was tied."""
