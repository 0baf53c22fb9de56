"""Ensemble generation and the sample covariance.

Samples are drawn as ``x = L z`` with ``L`` a Cholesky factor of the
model covariance and ``z`` standard normal, so the ensemble has exact
mean zero in distribution and no empirical centering is ever applied.
The generator is counter-based (Philox): column ``i`` of an ensemble is
produced by a generator keyed with ``(seed, stream)`` whose counter
block is offset by ``i``.  Regeneration with the same key is therefore
bit-identical regardless of platform threading, and distinct streams
never overlap.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg.blas import dsyrk
from scipy.linalg.lapack import dpotrf

from covloc.covmodels import JITTER_SCALE, CovarianceModel, ModelLabel
from covloc.errors import FactorizationError

# Reconstruction guarantee for factorize outputs, relative Frobenius.
FACTOR_TOL = 1e-10

_UINT64_SPAN = 2**64


@dataclass(frozen=True)
class FactorizedModel:
    """Lower-triangular factor ``L`` with ``L L^T`` equal to the model.

    Instances produced by :func:`factorize` satisfy the reconstruction
    bound ``|L L^T - C|_F <= FACTOR_TOL * |C|_F`` and carry a strictly
    positive factor diagonal.  The dataclass itself stays permissive so
    degenerate factors (for instance all zeros) can be constructed
    directly when that is what an experiment needs.
    """

    lower: np.ndarray
    model_label: ModelLabel = ModelLabel.CUSTOM


@dataclass(frozen=True)
class EnsembleData:
    """Ensemble matrix of shape ``(d, n)``, one member per column."""

    data: np.ndarray
    model_label: ModelLabel
    seed: int
    stream: int

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=float)
        if arr.ndim != 2:
            raise ValueError(f"data must be 2-d, got shape {arr.shape}")
        if arr.shape[1] < 1:
            raise ValueError("ensemble needs at least one member")
        if not np.isfinite(arr).all():
            raise ValueError("ensemble has non-finite entries")
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return self.data.shape[1]


def _check_key(name: str, value: int) -> int:
    if not isinstance(value, (int, np.integer)) or not 0 <= value < _UINT64_SPAN:
        raise ValueError(f"{name} must be an integer in [0, 2**64), got {value!r}")
    return int(value)


def factorize(model: CovarianceModel) -> FactorizedModel:
    """Cholesky-factorize a covariance model.

    Singular but semidefinite models (a low-rank prior, a derivative
    block) fail the plain factorization; one diagonal jitter of
    ``JITTER_SCALE * trace / dim`` is then applied before giving up.
    Failure after jitter raises :class:`FactorizationError` carrying the
    one-based pivot index reported by the routine.
    """
    mat = model.matrix
    dim = mat.shape[0]
    chol, info = dpotrf(mat, lower=1)
    if info != 0:
        # A matrix can pass the eigenvalue floor with lambda_min down to
        # -1e-10 * lambda_max, far below the base jitter when the
        # spectrum is spread out; escalate the jitter a bounded number
        # of times.  The reconstruction check below still caps the
        # total distortion.
        base = JITTER_SCALE * np.trace(mat) / dim
        for boost in (1.0, 1e2, 1e4):
            delta = boost * base
            chol, info = dpotrf(mat + delta * np.eye(dim), lower=1)
            if info == 0:
                break
        if info != 0:
            raise FactorizationError(
                f"covariance is numerically indefinite at pivot {info} "
                f"even after jitter {delta:.3e}",
                pivot=int(info),
            )
    lower = np.tril(chol)
    recon = dsyrk(alpha=1.0, a=lower)
    recon = np.triu(recon) + np.triu(recon, 1).T
    norm = np.linalg.norm(mat)
    err = np.linalg.norm(recon - mat)
    if norm > 0 and err > FACTOR_TOL * norm:
        raise FactorizationError(
            f"factor reconstruction error {err / norm:.3e} exceeds {FACTOR_TOL:.1e}"
        )
    return FactorizedModel(lower=lower, model_label=model.label)


def draw_ensemble(
    model: FactorizedModel, n: int, *, seed: int, stream: int = 0
) -> EnsembleData:
    """Draw ``n`` members from the factorized model.

    Column ``i`` uses a Philox generator with key ``(seed, stream)`` and
    counter block ``i``, so any column can be regenerated independently
    and ensembles with the same key are bit-identical.

    Parameters
    ----------
    model : FactorizedModel
        Factor ``L`` defining the sampling distribution.
    n : int
        Number of members, at least 1.
    seed, stream : int
        Unsigned 64-bit key words.  Distinct ``(seed, stream)`` pairs
        yield independent ensembles.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    seed = _check_key("seed", seed)
    stream = _check_key("stream", stream)
    lower = model.lower
    d = lower.shape[0]
    z = np.empty((d, n))
    for i in range(n):
        # Counter word 3 is the high word of the 256-bit counter, so
        # column blocks are 2**192 draws apart and never overlap.
        bitgen = np.random.Philox(counter=[0, 0, 0, i], key=[seed, stream])
        z[:, i] = np.random.Generator(bitgen).standard_normal(d)
    return EnsembleData(
        data=lower @ z, model_label=model.model_label, seed=seed, stream=stream
    )


def sample_covariance(ensemble: EnsembleData) -> np.ndarray:
    """Sample covariance ``X X^T / n`` without mean subtraction.

    The mean is known to be zero by construction, so no centering is
    applied and the normalization is ``1 / n``.  The Gram product is
    computed on one triangle and mirrored, which makes the result
    exactly symmetric.  For ``n < d`` the matrix is singular but its
    diagonal is almost surely positive.
    """
    x = ensemble.data
    n = x.shape[1]
    upper = dsyrk(alpha=1.0 / n, a=x)
    return np.triu(upper) + np.triu(upper, 1).T
