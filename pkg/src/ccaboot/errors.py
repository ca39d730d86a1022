"""Exception types raised across the package."""

from __future__ import annotations


class InvalidInputError(ValueError):
    """Input violates a documented precondition."""


class RankDeficiencyError(InvalidInputError):
    """A data or direction matrix is numerically rank deficient."""

    def __init__(self, block: str, rank: int, ncols: int, message: str | None = None):
        self.block = block
        self.rank = rank
        self.ncols = ncols
        super().__init__(
            message or f"{block} is rank deficient: numerical rank {rank} < {ncols} columns"
        )


class SingularCovarianceError(InvalidInputError):
    """A covariance matrix that must be positive definite is not."""


class DegenerateError(InvalidInputError):
    """Zero-variance variable or zero-norm direction."""


class ContractViolation(RuntimeError):
    """An operation was called outside its contract."""
