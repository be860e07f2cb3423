"""Newton solver and epsilon-continuation for the stationary problem.

The stationary equation

    -u'' + zeta u - |u|^2 u + i eps (-u + f) = 0

is solved on the even subspace (cosine modes), which fixes the translational
symmetry exactly; the rotational near-kernel is regularized by eps != 0, at
the price of Jacobian conditioning growing like 1/sqrt(eps).  The map is only
R-linearizable (it involves vbar), so Newton runs on stacked real/imaginary
cosine coefficients.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .errors import ContinuationFailure, NoConvergence, SingularJacobian
from .grid import ComplexField, evenness_defect, norm, reflect
from .linops import scalar_real_even_matrix
from .soliton import Params, leading_ansatz, nls_soliton, solve_background

#: default Newton residual tolerance (max norm of the stationary residual)
RESIDUAL_TOL = 1e-10
MAX_ITERS = 25
#: conditioning limit of the even-subspace Newton system
COND_LIMIT = 1e14


@dataclass(frozen=True)
class BranchPoint:
    """One converged stationary solution and its decomposition diagnostics.

    correction_norm is the H2 size of u - u_inf - phi_{theta_fit}, the part
    of the wave not explained by a rotated soliton on a constant background;
    it scales like O(eps) along a branch.
    """

    epsilon: float
    params: Params
    field: ComplexField
    u_inf: complex
    theta_fit: float
    correction_norm: float
    residual_norm: float
    newton_iters: int


@dataclass(frozen=True)
class Branch:
    """Ordered family of branch points sharing grid and (zeta, f)."""

    points: tuple
    params: Params

    def epsilons(self) -> np.ndarray:
        return np.array([p.epsilon for p in self.points])


def stationary_residual(field: ComplexField, params: Params) -> ComplexField:
    """-u'' + zeta u - |u|^2 u + i eps (-u + f), evaluated spectrally."""
    k = field.grid.wavenumbers
    u = field.values
    upp = np.fft.ifft(-(k**2) * np.fft.fft(u))
    res = -upp + params.zeta * u - (np.abs(u) ** 2) * u + 1j * params.epsilon * (-u + params.f)
    return ComplexField(field.grid, res)


def _fit_theta(field: ComplexField, u_inf: complex, params: Params) -> float:
    """Angle of the localized part against the unrotated soliton."""
    phi0 = nls_soliton(params, field.grid, 0.0)
    overlap = np.sum((field.values - u_inf) * np.conj(phi0.values)) * field.grid.dx
    return cmath.phase(overlap) % (2.0 * math.pi)


def fit_theta(point: BranchPoint) -> float:
    """Rotation angle recovered from a converged branch point."""
    return _fit_theta(point.field, point.u_inf, point.params)


def newton_correct(
    seed: ComplexField,
    params: Params,
    tol: float = RESIDUAL_TOL,
    max_iters: int = MAX_ITERS,
) -> BranchPoint:
    """Newton iteration on the even subspace from a given seed.

    Raises SingularJacobian when the linear system conditioning exceeds
    COND_LIMIT (always the case at eps = 0, where the gauge kernel i*phi is
    present) and NoConvergence after max_iters.
    """
    grid = seed.grid
    # symmetrize the seed once; iterates stay even by construction
    u = ComplexField(grid, 0.5 * (seed.values + reflect(seed).values))
    for iteration in range(1, max_iters + 1):
        A, E = scalar_real_even_matrix(u, params.zeta, params.epsilon)
        G = stationary_residual(u, params).values
        rhs = -np.concatenate([E.T @ G.real, E.T @ G.imag])
        lu, piv, info = lapack.dgetrf(A)
        if info != 0:
            raise SingularJacobian(f"LU factorization failed (info={info})")
        anorm = np.max(np.sum(np.abs(A), axis=0))
        rcond, _ = lapack.dgecon(lu, anorm)
        if rcond == 0.0 or 1.0 / rcond > COND_LIMIT:
            raise SingularJacobian(
                f"Newton system condition {1.0 / max(rcond, 1e-300):.2e} exceeds "
                f"{COND_LIMIT:.0e} at eps={params.epsilon:.4g}"
            )
        delta, info = lapack.dgetrs(lu, piv, rhs)
        if info != 0:
            raise SingularJacobian(f"LU solve failed (info={info})")
        m = E.shape[1]
        u = ComplexField(grid, u.values + E @ delta[:m] + 1j * (E @ delta[m:]))
        res_norm = float(np.max(np.abs(stationary_residual(u, params).values)))
        if res_norm < tol:
            u_inf = solve_background(params)
            theta = _fit_theta(u, u_inf, params)
            correction = u - u_inf - nls_soliton(params, grid, theta)
            return BranchPoint(
                epsilon=params.epsilon,
                params=params,
                field=u,
                u_inf=u_inf,
                theta_fit=theta,
                correction_norm=norm(correction, "H2"),
                residual_norm=res_norm,
                newton_iters=iteration,
            )
    raise NoConvergence(
        f"no convergence after {max_iters} iterations at eps={params.epsilon:.4g} "
        f"(residual {res_norm:.2e})"
    )


def continue_branch(
    params: Params,
    theta_start: float,
    eps_start: float,
    eps_end: float,
    step: float,
    grid=None,
    tol: float = RESIDUAL_TOL,
    max_halvings: int = 6,
) -> Branch:
    """March the branch from eps_start to eps_end, seeding each solve with the
    previous solution (the first with the leading-order ansatz).

    The step is halved up to max_halvings times on Newton failure; a
    ContinuationFailure carrying the partial branch is raised if the budget
    is exhausted.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    if eps_start == 0.0 or eps_start * eps_end < 0 or abs(eps_end) < abs(eps_start):
        raise ValueError("need 0 < |eps_start| <= |eps_end| with matching signs")
    if grid is None:
        raise ValueError("continue_branch needs an explicit grid")
    direction = 1.0 if eps_end >= eps_start else -1.0

    points = []
    seed = leading_ansatz(params.with_epsilon(eps_start), grid, theta_start)
    eps = eps_start
    cur_step = step
    halvings = 0
    while True:
        try:
            point = newton_correct(seed, params.with_epsilon(eps), tol=tol)
        except (NoConvergence, SingularJacobian) as exc:
            if not points or halvings >= max_halvings:
                raise ContinuationFailure(
                    f"continuation failed at eps={eps:.6g}: {exc}",
                    partial_branch=Branch(points=tuple(points), params=params),
                    failed_epsilon=eps,
                ) from exc
            halvings += 1
            cur_step *= 0.5
            eps = points[-1].epsilon + direction * cur_step
            continue
        points.append(point)
        seed = point.field
        if abs(eps - eps_end) < 1e-14 or (eps - eps_end) * direction >= 0:
            break
        cur_step = min(2.0 * cur_step, step)
        eps_next = eps + direction * cur_step
        if (eps_next - eps_end) * direction > 0:
            eps_next = eps_end
        eps = eps_next
    return Branch(points=tuple(points), params=params)


def tail_flatness(point: BranchPoint) -> float:
    """|u(boundary) - u_inf|; exponentially small for a well-resolved wave."""
    return float(abs(point.field.values[0] - point.u_inf))


def branch_point_summary(point: BranchPoint) -> dict:
    """JSON-ready scalar summary of a branch point."""
    return {
        "epsilon": point.epsilon,
        "theta_fit": point.theta_fit,
        "u_inf": [point.u_inf.real, point.u_inf.imag],
        "residual_norm": point.residual_norm,
        "correction_norm": point.correction_norm,
        "newton_iters": point.newton_iters,
        "evenness_defect": evenness_defect(point.field),
        "tail_flatness": tail_flatness(point),
    }
