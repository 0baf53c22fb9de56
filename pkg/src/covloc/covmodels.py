"""Benchmark covariance models on one-dimensional grids.

Every model lives on a regular grid of ``d`` points with spacing
``mesh``, either periodic (circular distance) or bounded.  Builders
return a :class:`CovarianceModel`, a validated container holding the
dense matrix together with the geometry and construction parameters.

The stationary families use correlation kernels of the grid distance
``r``: Laplacian ``exp(-r / l)`` and Gaussian ``exp(-(r / l)**2)``.
On top of those, the module builds a two-scale mixture, a smoothly
nonstationary model with per-point length scales, and a coupled
pressure-wind model whose second block is a spatial derivative of the
first.  A closed-form tridiagonal precision matrix for the bounded
Laplacian model is included as an analytic reference for
screening-effect experiments.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from covloc.errors import ModelValidityError

# Relative floor for the smallest eigenvalue: matrices with
# lambda_min >= -EPS_PSD * lambda_max pass validation.
EPS_PSD = 1e-10

# Borderline matrices get one chance with delta = JITTER_SCALE * trace / dim
# added to the diagonal before being rejected.
JITTER_SCALE = 1e-12


class KernelFamily(enum.Enum):
    """Correlation kernel family for stationary models."""

    LAPLACIAN = "laplacian"
    GAUSSIAN = "gaussian"


class ModelLabel(enum.Enum):
    """Identifies the construction of a covariance model."""

    SINGLE_SCALE_LAPLACIAN = "single-scale-laplacian"
    SINGLE_SCALE_GAUSSIAN = "single-scale-gaussian"
    MULTISCALE = "multiscale"
    NONSTATIONARY = "nonstationary"
    PRESSURE_WIND = "pressure-wind"
    CUSTOM = "custom"


@dataclass(frozen=True)
class GridGeometry:
    """Regular one-dimensional grid.

    Parameters
    ----------
    d : int
        Number of grid points, at least 2.
    periodic : bool
        Whether distances wrap around the domain.
    mesh : float
        Spacing between adjacent points, positive.
    """

    d: int
    periodic: bool = True
    mesh: float = 1.0

    def __post_init__(self):
        if not isinstance(self.d, (int, np.integer)) or self.d < 2:
            raise ValueError(f"d must be an integer >= 2, got {self.d!r}")
        if not np.isfinite(self.mesh) or self.mesh <= 0:
            raise ValueError(f"mesh must be a positive finite float, got {self.mesh!r}")


@dataclass(frozen=True)
class KernelSpec:
    """Stationary correlation kernel with a single length scale."""

    family: KernelFamily
    length_scale: float

    def __post_init__(self):
        if not isinstance(self.family, KernelFamily):
            raise ValueError(f"family must be a KernelFamily, got {self.family!r}")
        if not np.isfinite(self.length_scale) or self.length_scale <= 0:
            raise ValueError(
                f"length_scale must be positive and finite, got {self.length_scale!r}"
            )


@dataclass(frozen=True)
class CovarianceModel:
    """Validated dense covariance matrix with its construction record.

    Construction symmetrizes the matrix exactly, requires a strictly
    positive diagonal and checks the eigenvalue floor
    ``lambda_min >= -EPS_PSD * lambda_max``.  A borderline matrix gets a
    single diagonal jitter of ``JITTER_SCALE * trace / dim`` before
    being rejected.  The stored array is read-only; instances can be
    shared freely across threads.
    """

    label: ModelLabel
    matrix: np.ndarray
    geometry: GridGeometry
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"matrix must be square, got shape {mat.shape}")
        dim = mat.shape[0]
        if dim not in (self.geometry.d, 2 * self.geometry.d):
            raise ModelValidityError(
                f"matrix dimension {dim} matches neither the grid size "
                f"{self.geometry.d} nor a two-field stack of it"
            )
        if not np.isfinite(mat).all():
            raise ModelValidityError("matrix has non-finite entries")
        asym = np.abs(mat - mat.T).max()
        scale = np.abs(mat).max()
        if asym > 0:
            if scale > 0 and asym > 1e-8 * scale:
                raise ModelValidityError(
                    f"matrix is not symmetric: max |A - A.T| = {asym:.3e}"
                )
            mat = 0.5 * (mat + mat.T)
        if (np.diag(mat) <= 0).any():
            k = int(np.argmin(np.diag(mat)))
            raise ModelValidityError(
                f"diagonal must be strictly positive, entry {k} is {mat[k, k]!r}"
            )
        evals = np.linalg.eigvalsh(mat)
        floor = -EPS_PSD * max(evals[-1], 0.0)
        if evals[0] < floor:
            delta = JITTER_SCALE * np.trace(mat) / dim
            jittered = mat + delta * np.eye(dim)
            evals = np.linalg.eigvalsh(jittered)
            if evals[0] < -EPS_PSD * max(evals[-1], 0.0):
                raise ModelValidityError(
                    f"matrix is not positive semidefinite within tolerance: "
                    f"lambda_min = {evals[0]:.3e}, lambda_max = {evals[-1]:.3e}"
                )
            mat = jittered
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "params", dict(self.params))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def grid_distance(i: int, j: int, geometry: GridGeometry) -> float:
    """Distance between grid points ``i`` and ``j``.

    Periodic grids use the circular distance
    ``min(|i - j|, d - |i - j|) * mesh``; bounded grids use
    ``|i - j| * mesh``.
    """
    d = geometry.d
    if not (0 <= i < d and 0 <= j < d):
        raise ValueError(f"indices must lie in [0, {d}), got ({i}, {j})")
    gap = abs(i - j)
    if geometry.periodic:
        gap = min(gap, d - gap)
    return gap * geometry.mesh


def distance_matrix(geometry: GridGeometry) -> np.ndarray:
    """All pairwise grid distances as a ``(d, d)`` array."""
    idx = np.arange(geometry.d)
    gap = np.abs(idx[:, None] - idx[None, :])
    if geometry.periodic:
        gap = np.minimum(gap, geometry.d - gap)
    return gap * geometry.mesh


def kernel_matrix(kernel: KernelSpec, geometry: GridGeometry) -> np.ndarray:
    """Correlation matrix of the kernel on the grid, unit diagonal."""
    r = distance_matrix(geometry) / kernel.length_scale
    if kernel.family is KernelFamily.LAPLACIAN:
        return np.exp(-r)
    return np.exp(-(r * r))


def build_single_scale(kernel: KernelSpec, geometry: GridGeometry) -> CovarianceModel:
    """Stationary single-scale model from one correlation kernel."""
    label = (
        ModelLabel.SINGLE_SCALE_LAPLACIAN
        if kernel.family is KernelFamily.LAPLACIAN
        else ModelLabel.SINGLE_SCALE_GAUSSIAN
    )
    params = {"family": kernel.family.value, "length_scale": kernel.length_scale}
    return CovarianceModel(label, kernel_matrix(kernel, geometry), geometry, params)


def build_multiscale(
    l1: float,
    l2: float,
    geometry: GridGeometry,
    family: KernelFamily = KernelFamily.GAUSSIAN,
) -> CovarianceModel:
    """Equal-weight mixture of two kernel scales.

    The matrix is ``(K(l1) + K(l2)) / 2``, a convex combination of two
    correlation matrices, so it keeps a unit diagonal and stays positive
    semidefinite.
    """
    k1 = kernel_matrix(KernelSpec(family, l1), geometry)
    k2 = kernel_matrix(KernelSpec(family, l2), geometry)
    params = {"family": family.value, "l1": float(l1), "l2": float(l2)}
    return CovarianceModel(ModelLabel.MULTISCALE, 0.5 * (k1 + k2), geometry, params)


def build_nonstationary(
    l_start: float, l_end: float, geometry: GridGeometry
) -> CovarianceModel:
    """Smoothly varying length scales on a bounded grid.

    Grid point ``i`` carries ``l_i`` interpolated linearly from
    ``l_start`` to ``l_end`` inclusive, in index units.  Entries are

        C_ij = (4 l_i l_j)^(1/4) / (l_i + l_j)^(1/2)
               * exp(-2 (i - j)^2 / (l_i + l_j))

    which is a valid correlation matrix for any positive scales.  The
    construction assumes a bounded domain; periodic geometries are
    rejected.
    """
    if geometry.periodic:
        raise ModelValidityError("nonstationary model requires a non-periodic grid")
    if l_start <= 0 or l_end <= 0:
        raise ValueError("length scales must be positive")
    ell = np.linspace(l_start, l_end, geometry.d)
    lsum = ell[:, None] + ell[None, :]
    pref = (4.0 * ell[:, None] * ell[None, :]) ** 0.25 / np.sqrt(lsum)
    idx = np.arange(geometry.d)
    gap2 = (idx[:, None] - idx[None, :]) ** 2
    mat = pref * np.exp(-2.0 * gap2 / lsum)
    params = {"l_start": float(l_start), "l_end": float(l_end)}
    return CovarianceModel(ModelLabel.NONSTATIONARY, mat, geometry, params)


def build_derivative_operator(geometry: GridGeometry) -> np.ndarray:
    """Centered first-derivative stencil on a periodic grid.

    Returns the ``(d, d)`` matrix with ``+1 / (2 mesh)`` at
    ``(i, i+1 mod d)`` and ``-1 / (2 mesh)`` at ``(i, i-1 mod d)``.
    Row sums vanish and the operator is exactly antisymmetric.
    """
    if not geometry.periodic:
        raise ModelValidityError("derivative operator requires a periodic grid")
    d = geometry.d
    c = 1.0 / (2.0 * geometry.mesh)
    op = np.zeros((d, d))
    idx = np.arange(d)
    op[idx, (idx + 1) % d] = c
    op[idx, (idx - 1) % d] = -c
    return op


def build_pressure_wind(length_scale: float, geometry: GridGeometry) -> CovarianceModel:
    """Two-field model coupling a scalar field with its derivative.

    With ``C`` the Gaussian kernel matrix and ``D`` the centered
    derivative operator, the joint covariance of the stacked fields is

        [[ C,        C D^T   ],
         [ D C,      D C D^T ]]

    of dimension ``2 d``.  The off-diagonal blocks are exact transposes
    of each other by construction, so the assembled matrix is exactly
    symmetric.
    """
    base = kernel_matrix(KernelSpec(KernelFamily.GAUSSIAN, length_scale), geometry)
    deriv = build_derivative_operator(geometry)
    cross = base @ deriv.T
    wind = deriv @ base @ deriv.T
    wind = 0.5 * (wind + wind.T)
    mat = np.block([[base, cross], [cross.T, wind]])
    params = {"family": KernelFamily.GAUSSIAN.value, "length_scale": float(length_scale)}
    return CovarianceModel(ModelLabel.PRESSURE_WIND, mat, geometry, params)


def laplacian_grid_precision(length_scale: float, geometry: GridGeometry) -> np.ndarray:
    """Exact tridiagonal inverse of the bounded Laplacian model.

    On a non-periodic grid the Laplacian covariance
    ``exp(-|i - j| * mesh / l)`` is a first-order autoregression with
    correlation ``rho = exp(-mesh / l)``, so its inverse is tridiagonal:
    with prefactor ``1 / (1 - rho^2)``, the diagonal is 1 at both ends
    and ``1 + rho^2`` inside, and the off-diagonals are ``-rho``.
    Entries at distance two or more are exactly zero, the screening
    property of nearest-neighbor conditioning.
    """
    if geometry.periodic:
        raise ModelValidityError("tridiagonal precision requires a non-periodic grid")
    if not np.isfinite(length_scale) or length_scale <= 0:
        raise ValueError("length_scale must be positive and finite")
    d = geometry.d
    rho = np.exp(-geometry.mesh / length_scale)
    pref = 1.0 / (1.0 - rho * rho)
    prec = np.zeros((d, d))
    np.fill_diagonal(prec, pref * (1.0 + rho * rho))
    prec[0, 0] = pref
    prec[d - 1, d - 1] = pref
    idx = np.arange(d - 1)
    prec[idx, idx + 1] = -rho * pref
    prec[idx + 1, idx] = -rho * pref
    return prec


def custom_model(
    matrix: np.ndarray,
    geometry: GridGeometry | None = None,
    params: dict | None = None,
) -> CovarianceModel:
    """Wrap an externally supplied matrix as a validated model."""
    mat = np.asarray(matrix, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ModelValidityError(f"matrix must be square, got shape {mat.shape}")
    if geometry is None:
        geometry = GridGeometry(d=mat.shape[0], periodic=False)
    return CovarianceModel(ModelLabel.CUSTOM, mat, geometry, params or {})
