"""Exception types shared across the package.

Argument mistakes (bad shapes, out-of-range scalars) raise plain
``ValueError``.  The classes here mark conditions with a dedicated exit
code on the command line: model validity, factorization failure, solver
non-convergence and configuration-file problems.
"""
from __future__ import annotations


class CovlocError(Exception):
    """Base class for package-specific errors."""


class ModelValidityError(CovlocError):
    """A covariance model violates a structural requirement.

    Raised for asymmetric input, nonpositive diagonals, eigenvalues below
    the positive-semidefinite floor, or a builder applied to an
    unsupported geometry (for example a periodic nonstationary model).
    """


class FactorizationError(ModelValidityError):
    """Cholesky factorization failed even after diagonal jitter.

    Attributes
    ----------
    pivot : int or None
        One-based index of the first non-positive pivot reported by the
        factorization routine, when available.
    """

    def __init__(self, message: str, *, pivot: int | None = None):
        super().__init__(message)
        self.pivot = pivot


class NonConvergenceError(CovlocError):
    """An iterative solver exhausted its budget before reaching tolerance.

    Attributes
    ----------
    residual_trace : tuple of float
        Relative residual after each completed iteration, for diagnosis.
    """

    def __init__(self, message: str, *, residual_trace: tuple = ()):
        super().__init__(message)
        self.residual_trace = tuple(residual_trace)


class ConfigError(CovlocError):
    """A configuration file contains unknown keys or malformed values."""
