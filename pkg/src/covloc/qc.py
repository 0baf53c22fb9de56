"""Quadratically penalized precision estimation.

The estimator maximizes, over symmetric positive definite precision
matrices ``Omega``, the penalized Gaussian log-likelihood

    l(Omega) = (n/2) log det Omega - (n/2) tr(S Omega)
               - (1/4) tr(Omega (Theta o Omega))

where ``Theta = strength * theta_ref`` is a symmetric entrywise
penalty, nonnegative with a zero diagonal, and ``o`` is the entrywise
product.  The penalty term equals ``(1/4) sum_ij Theta_ij Omega_ij^2``,
so the objective is strictly concave wherever the likelihood part is
and every stationary point is the unique maximizer.

Setting the gradient to zero and writing ``C = Omega^{-1}`` gives the
implicit characterization

    C = S + (1/n) (C^{-1} o Theta)

solved here by a damped fixed-point iteration on ``C``.  The update
direction ``F(C) - C`` turns out to equal ``(2/n) C G C`` with ``G``
the objective gradient, a preconditioned ascent direction, so a
backtracking step on the objective is globally convergent.  Very close
to the solution the objective gain drops below rounding noise; the
line search then accepts on residual contraction instead.  A Newton
iteration on the precision is available as an alternative algorithm
and as an accuracy cross-check.

Large penalties reproduce Schur-product localization: as the entries of
``Theta`` grow, the estimator approaches ``S o L`` with the taper
``L_ij = 1 / (1 + Theta_ij / (n S_ii S_jj))``, with error falling like
the inverse square of the penalty scale.  :func:`theta_for_target_localization`
inverts that map to prescribe a taper exactly in the limit.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.linalg.lapack import dpotrf, dpotri

from covloc.errors import ModelValidityError, NonConvergenceError
from covloc.estimators import LocalizationLayout, LocalizationMatrix

# Residuals below this fraction of their scale put the line search in
# the endgame, where objective differences are rounding noise and steps
# are accepted on residual contraction.
_ENDGAME = 1e-6

# Consecutive damped steps without a 10 percent residual improvement
# before the solver switches to Newton polishing.  The damped map can
# be locally expansive around the solution when the penalty dominates
# (its derivative there has eigenvalues above one), in which case no
# step size makes plain fixed-point iteration contract.
_STALL_LIMIT = 10

# Hard ceiling on damped steps; slow-but-steady instances move to the
# quadratically convergent polish instead of draining the budget.
_DAMPED_BUDGET = 100

_MAX_BACKTRACK = 60


class QcAlgorithm(enum.Enum):
    FIXED_POINT = "fixed-point"
    NEWTON_ON_PRECISION = "newton-on-precision"


@dataclass(frozen=True)
class PenaltyMatrix:
    """Entrywise penalty ``strength * theta_ref``.

    ``theta_ref`` must be exactly symmetric and nonnegative with a zero
    diagonal: variances are never penalized.
    """

    theta_ref: np.ndarray
    strength: float = 1.0

    def __post_init__(self):
        ref = np.asarray(self.theta_ref, dtype=float)
        if ref.ndim != 2 or ref.shape[0] != ref.shape[1]:
            raise ValueError(f"theta_ref must be square, got shape {ref.shape}")
        if not np.array_equal(ref, ref.T):
            raise ValueError("theta_ref must be exactly symmetric")
        if (ref < 0).any():
            raise ValueError("theta_ref entries must be nonnegative")
        if (np.diag(ref) != 0).any():
            raise ValueError("theta_ref diagonal must be exactly zero")
        if not np.isfinite(self.strength) or self.strength < 0:
            raise ValueError(f"strength must be finite and >= 0, got {self.strength!r}")
        object.__setattr__(self, "theta_ref", ref)

    @property
    def theta(self) -> np.ndarray:
        return self.strength * self.theta_ref

    @classmethod
    def uniform(cls, dim: int, strength: float = 1.0) -> "PenaltyMatrix":
        """Equal penalty on every off-diagonal entry."""
        ref = np.ones((dim, dim)) - np.eye(dim)
        return cls(theta_ref=ref, strength=strength)


@dataclass(frozen=True)
class QcSolveOptions:
    """Solver controls.

    ``tol`` bounds the fixed-point residual relative to ``|S|_F``.
    ``damping`` is the initial step fraction; the line search adapts it
    both ways.
    """

    tol: float = 1e-10
    max_iter: int = 500
    damping: float = 0.5
    algorithm: QcAlgorithm = QcAlgorithm.FIXED_POINT

    def __post_init__(self):
        if not 0 < self.tol < 1:
            raise ValueError(f"tol must lie in (0, 1), got {self.tol!r}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not 0 < self.damping <= 1:
            raise ValueError(f"damping must lie in (0, 1], got {self.damping!r}")


@dataclass(frozen=True)
class QcReport:
    """Solution record for one penalized-precision solve."""

    estimate: np.ndarray
    iterations: int
    final_residual: float
    final_gradient_norm: float
    objective: float
    residual_trace: tuple = ()
    objective_trace: tuple = ()
    algorithm: QcAlgorithm = QcAlgorithm.FIXED_POINT


def _try_cholesky(mat: np.ndarray):
    """Lower factor of a symmetric matrix, or None if not SPD."""
    chol, info = dpotrf(mat, lower=1)
    if info != 0:
        return None
    return chol


def _inv_from_cholesky(chol: np.ndarray) -> np.ndarray:
    inv, info = dpotri(chol, lower=1)
    if info != 0:
        raise np.linalg.LinAlgError(f"inversion failed at pivot {info}")
    return np.tril(inv) + np.tril(inv, -1).T


def _check_inputs(sample_cov, penalty, n):
    s = np.asarray(sample_cov, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError(f"sample covariance must be square, got shape {s.shape}")
    if not np.array_equal(s, s.T):
        s = 0.5 * (s + s.T)
    if not isinstance(penalty, PenaltyMatrix):
        raise ValueError("penalty must be a PenaltyMatrix")
    if penalty.theta_ref.shape != s.shape:
        raise ValueError(
            f"penalty shape {penalty.theta_ref.shape} does not match sample {s.shape}"
        )
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    return s


def qc_log_posterior(
    omega: np.ndarray, sample_cov: np.ndarray, penalty: PenaltyMatrix, n: int
) -> float:
    """Penalized log-likelihood at the precision matrix ``omega``."""
    s = _check_inputs(sample_cov, penalty, n)
    om = np.asarray(omega, dtype=float)
    if om.shape != s.shape:
        raise ValueError(f"omega shape {om.shape} does not match sample {s.shape}")
    chol = _try_cholesky(om)
    if chol is None:
        raise ValueError("omega must be symmetric positive definite")
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    theta = penalty.theta
    return float(
        0.5 * n * logdet
        - 0.5 * n * np.sum(s * om)
        - 0.25 * np.sum(theta * om * om)
    )


def qc_gradient(
    omega: np.ndarray, sample_cov: np.ndarray, penalty: PenaltyMatrix, n: int
) -> np.ndarray:
    """Gradient of the objective with respect to the precision.

    Equals ``(n/2) (omega^{-1} - S) - (1/2) Theta o omega``; the
    returned matrix is exactly symmetric.
    """
    s = _check_inputs(sample_cov, penalty, n)
    om = np.asarray(omega, dtype=float)
    if om.shape != s.shape:
        raise ValueError(f"omega shape {om.shape} does not match sample {s.shape}")
    chol = _try_cholesky(om)
    if chol is None:
        raise ValueError("omega must be symmetric positive definite")
    inv = _inv_from_cholesky(chol)
    grad = 0.5 * n * (inv - s) - 0.5 * penalty.theta * om
    return 0.5 * (grad + grad.T)


def _objective(chol, inv, s, theta, n) -> float:
    # Objective expressed through the covariance iterate: with C the
    # current matrix and Omega = C^{-1}, log det Omega = -log det C.
    logdet_c = 2.0 * np.sum(np.log(np.diag(chol)))
    return float(
        -0.5 * n * logdet_c
        - 0.5 * n * np.sum(s * inv)
        - 0.25 * np.sum(theta * inv * inv)
    )


def _trivial_report(s, theta, n, algorithm) -> QcReport:
    # Penalty identically zero: the maximizer is the sample covariance
    # itself, possibly singular when n < d.
    chol = _try_cholesky(s)
    if chol is not None:
        inv = _inv_from_cholesky(chol)
        objective = _objective(chol, inv, s, theta, n)
    else:
        objective = float("nan")
    return QcReport(
        estimate=s.copy(),
        iterations=1,
        final_residual=0.0,
        final_gradient_norm=0.0,
        objective=objective,
        residual_trace=(0.0,),
        objective_trace=(objective,),
        algorithm=algorithm,
    )


def qc_map_estimate(
    sample_cov: np.ndarray,
    penalty: PenaltyMatrix,
    n: int,
    options: QcSolveOptions | None = None,
    *,
    initial: np.ndarray | None = None,
) -> QcReport:
    """Solve for the penalized-precision covariance estimate.

    Parameters
    ----------
    sample_cov : ndarray
        Sample covariance ``S`` with strictly positive diagonal.
    penalty : PenaltyMatrix
        Entrywise penalty on the precision.
    n : int
        Number of samples behind ``S``.
    options : QcSolveOptions, optional
        Tolerance, budget, damping and algorithm choice.
    initial : ndarray, optional
        Symmetric positive definite starting covariance; defaults to
        ``diag(S)``.

    Returns
    -------
    QcReport
        Estimate with iteration diagnostics.  The fixed-point residual
        ``|C - S - (1/n) C^{-1} o Theta|_F / |S|_F`` is at most
        ``options.tol`` on success, which by the gradient identity also
        bounds the gradient norm by ``(n/2) tol |S|_F``.

    Raises
    ------
    ModelValidityError
        If the diagonal of ``S`` is not strictly positive.
    NonConvergenceError
        If the iteration budget or the line search is exhausted; the
        exception carries the residual trace.
    """
    opts = options or QcSolveOptions()
    s = _check_inputs(sample_cov, penalty, n)
    if (np.diag(s) <= 0).any():
        raise ModelValidityError("sample covariance diagonal must be strictly positive")
    theta = penalty.theta
    if not theta.any():
        return _trivial_report(s, theta, n, opts.algorithm)
    if opts.algorithm is QcAlgorithm.NEWTON_ON_PRECISION:
        return _newton_on_precision(s, theta, n, opts, initial)
    return _fixed_point(s, theta, n, opts, initial)


def _initial_state(s, initial):
    if initial is None:
        cov = np.diag(np.diag(s)).copy()
    else:
        cov = np.array(initial, dtype=float)
        if cov.shape != s.shape:
            raise ValueError(f"initial shape {cov.shape} does not match {s.shape}")
        cov = 0.5 * (cov + cov.T)
    chol = _try_cholesky(cov)
    if chol is None:
        raise ValueError("initial covariance must be symmetric positive definite")
    return cov, chol


def _newton_polish_step(cov, omega, obj, s, theta, n):
    """One Newton step on the precision; returns the new state or None."""
    grad = 0.5 * n * (cov - s) - 0.5 * theta * omega
    delta = _solve_newton_step(grad, cov, theta, n)
    slope = float(np.sum(grad * delta))
    if slope <= 0:
        delta = grad.copy()
        slope = float(np.sum(grad * grad))
    step = 1.0
    for _ in range(_MAX_BACKTRACK):
        raw = omega + step * delta
        cand = 0.5 * (raw + raw.T)
        chol_c = _try_cholesky(cand)
        if chol_c is None:
            step *= 0.5
            continue
        obj_c = _objective_at_omega(chol_c, cand, s, theta, n)
        if obj_c >= obj or step * slope < 1e-13 * max(abs(obj), 1.0):
            return cand, _inv_from_cholesky(chol_c), obj_c
        step *= 0.5
    return None


def _fixed_point(s, theta, n, opts, initial) -> QcReport:
    norm_s = np.linalg.norm(s)
    cov, chol = _initial_state(s, initial)
    inv = _inv_from_cholesky(chol)
    obj = _objective(chol, inv, s, theta, n)
    target = s + (theta * inv) / n
    resid_mat = target - cov
    resid = np.linalg.norm(resid_mat) / norm_s
    residual_trace = [resid]
    objective_trace = [obj]
    gamma = opts.damping
    iterations = 0
    best_resid = resid
    stall = 0
    polishing = False
    while resid > opts.tol:
        if iterations >= opts.max_iter:
            raise NonConvergenceError(
                f"no convergence in {opts.max_iter} iterations, "
                f"residual {resid:.3e}",
                residual_trace=residual_trace,
            )
        if polishing:
            state = _newton_polish_step(cov, inv, obj, s, theta, n)
            if state is None:
                raise NonConvergenceError(
                    f"polish line search exhausted at residual {resid:.3e}",
                    residual_trace=residual_trace,
                )
            inv, cov, obj = state
            resid_mat = s + (theta * inv) / n - cov
            resid = np.linalg.norm(resid_mat) / norm_s
            iterations += 1
            residual_trace.append(resid)
            objective_trace.append(obj)
            continue
        accepted = False
        first_try = True
        for _ in range(_MAX_BACKTRACK):
            cand = cov + gamma * resid_mat
            chol_c = _try_cholesky(cand)
            if chol_c is None:
                gamma *= 0.5
                first_try = False
                continue
            inv_c = _inv_from_cholesky(chol_c)
            obj_c = _objective(chol_c, inv_c, s, theta, n)
            target_c = s + (theta * inv_c) / n
            resid_mat_c = target_c - cand
            resid_c = np.linalg.norm(resid_mat_c) / norm_s
            # The step is an ascent direction, so requiring an objective
            # gain is safe globally.  Within rounding distance of the
            # optimum that gain is noise; accept on residual contraction.
            if obj_c >= obj or (resid <= _ENDGAME and resid_c <= 0.9 * resid):
                cov, chol, inv = cand, chol_c, inv_c
                obj, resid_mat, resid = obj_c, resid_mat_c, resid_c
                accepted = True
                break
            gamma *= 0.5
            first_try = False
        if not accepted:
            # Damped steps cannot make progress here; hand over to the
            # Newton polish instead of giving up.
            polishing = True
            continue
        if first_try:
            gamma = min(1.0, 1.5 * gamma)
        iterations += 1
        residual_trace.append(resid)
        objective_trace.append(obj)
        if resid <= 0.9 * best_resid:
            best_resid = resid
            stall = 0
        else:
            stall += 1
        if stall >= _STALL_LIMIT or iterations >= _DAMPED_BUDGET:
            polishing = True
    grad = 0.5 * n * (cov - s) - 0.5 * theta * inv
    return QcReport(
        estimate=cov,
        iterations=iterations,
        final_residual=resid,
        final_gradient_norm=float(np.linalg.norm(grad)),
        objective=obj,
        residual_trace=tuple(residual_trace),
        objective_trace=tuple(objective_trace),
        algorithm=QcAlgorithm.FIXED_POINT,
    )


def _hessian_apply(delta, cov, theta, n) -> np.ndarray:
    # Negative Hessian of the objective as an operator on symmetric
    # matrices: (n/2) C Delta C + (1/2) Theta o Delta, positive definite
    # for SPD C, which is what makes conjugate gradients applicable.
    return 0.5 * n * (cov @ delta @ cov) + 0.5 * theta * delta


def _solve_newton_step(grad, cov, theta, n) -> np.ndarray:
    # Matrix-free conjugate gradients for H delta = grad.
    delta = np.zeros_like(grad)
    resid = grad.copy()
    direction = resid.copy()
    rs = float(np.sum(resid * resid))
    tol2 = max(rs * 1e-8, 1e-300)
    for _ in range(200):
        h_dir = _hessian_apply(direction, cov, theta, n)
        denom = float(np.sum(direction * h_dir))
        if denom <= 0:
            break
        step = rs / denom
        delta += step * direction
        resid -= step * h_dir
        rs_new = float(np.sum(resid * resid))
        if rs_new <= tol2:
            break
        direction = resid + (rs_new / rs) * direction
        rs = rs_new
    return 0.5 * (delta + delta.T)


def _objective_at_omega(chol_om, omega, s, theta, n) -> float:
    logdet = 2.0 * np.sum(np.log(np.diag(chol_om)))
    return float(
        0.5 * n * logdet
        - 0.5 * n * np.sum(s * omega)
        - 0.25 * np.sum(theta * omega * omega)
    )


def _newton_on_precision(s, theta, n, opts, initial) -> QcReport:
    norm_s = np.linalg.norm(s)
    _, chol0 = _initial_state(s, initial)
    omega = _inv_from_cholesky(chol0)
    chol_om = _try_cholesky(omega)
    if chol_om is None:
        raise ValueError("initial covariance must be symmetric positive definite")
    cov = _inv_from_cholesky(chol_om)
    obj = _objective_at_omega(chol_om, omega, s, theta, n)
    residual_trace = []
    objective_trace = []
    iterations = 0
    while True:
        resid = np.linalg.norm(cov - s - (theta * omega) / n) / norm_s
        residual_trace.append(resid)
        objective_trace.append(obj)
        if resid <= opts.tol:
            break
        if iterations >= opts.max_iter:
            raise NonConvergenceError(
                f"no convergence in {opts.max_iter} Newton iterations, "
                f"residual {resid:.3e}",
                residual_trace=residual_trace,
            )
        state = _newton_polish_step(cov, omega, obj, s, theta, n)
        if state is None:
            raise NonConvergenceError(
                f"Newton line search exhausted at residual {resid:.3e}",
                residual_trace=residual_trace,
            )
        omega, cov, obj = state
        iterations += 1
    grad = 0.5 * n * (cov - s) - 0.5 * theta * omega
    return QcReport(
        estimate=cov,
        iterations=iterations,
        final_residual=resid,
        final_gradient_norm=float(np.linalg.norm(grad)),
        objective=obj,
        residual_trace=tuple(residual_trace),
        objective_trace=tuple(objective_trace),
        algorithm=QcAlgorithm.NEWTON_ON_PRECISION,
    )


def asymptotic_schur_localization(
    sample_cov: np.ndarray, penalty: PenaltyMatrix, n: int
) -> LocalizationMatrix:
    """Taper reached by the estimator as the penalty scale grows.

    ``L_ij = 1 / (1 + Theta_ij / (n S_ii S_jj))`` with an exactly unit
    diagonal, since the penalty diagonal is zero.
    """
    s = _check_inputs(sample_cov, penalty, n)
    diag = np.diag(s)
    if (diag <= 0).any():
        raise ModelValidityError("sample covariance diagonal must be strictly positive")
    denom = n * np.outer(diag, diag)
    taper = 1.0 / (1.0 + penalty.theta / denom)
    return LocalizationMatrix(
        matrix=taper, kernel=None, layout=LocalizationLayout.SCALAR
    )


def theta_for_target_localization(
    sample_cov: np.ndarray, target, n: int
) -> PenaltyMatrix:
    """Penalty whose asymptotic taper is ``target``.

    Inverts the asymptotic map entrywise:
    ``Theta_ij = n S_ii S_jj (1 / L_ij - 1)``.  A zero taper entry
    would demand an infinite penalty and is rejected.
    """
    if isinstance(target, LocalizationMatrix):
        taper = target.matrix
    else:
        taper = LocalizationMatrix(matrix=np.asarray(target, dtype=float)).matrix
    s = np.asarray(sample_cov, dtype=float)
    if s.shape != taper.shape:
        raise ValueError(f"shape mismatch: sample {s.shape} vs taper {taper.shape}")
    diag = np.diag(s)
    if (diag <= 0).any():
        raise ModelValidityError("sample covariance diagonal must be strictly positive")
    if (taper == 0).any():
        raise ValueError("target taper has zero entries, unreachable by finite penalty")
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    ref = n * np.outer(diag, diag) * (1.0 / taper - 1.0)
    return PenaltyMatrix(theta_ref=ref, strength=1.0)
