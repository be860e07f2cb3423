"""Resolvent norms on the closed right half-plane and the high-frequency
two-block Schur solve.

Exponential decay of the linearized semigroup is equivalent (in Hilbert
space) to a uniform resolvent bound on Re(lambda) >= 0 after deflating the
translational kernel.  The scan here samples that bound directly.  At large
|Im(lambda)| the doubled system is solved by eliminating the positively
shifted block and inverting the Schur complement

    A_schur = A_minus - B^* (A_plus + lambda_i)^{-1} B

plus an explicitly checked contraction term; the admissible frequency rho is
computed from the contraction condition rather than assumed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from .errors import FrequencyTooLow, NearSingular
from .linops import KERNEL_TOL, OperatorPair, SpectralProjection, negative_laplacian_matrix

#: contraction threshold of the Neumann-series perturbation term
CONTRACTION_LIMIT = 0.5
#: conditioning limit for resolvent factorizations
COND_LIMIT = 1e14


@dataclass(frozen=True)
class ResolventScan:
    """Sampled operator norms of (J L - eps - lambda)^{-1} (I - P0)."""

    lambda_samples: tuple
    norms: tuple
    sup_norm: float
    scan_spec: dict
    regions: tuple
    excluded: tuple


@dataclass(frozen=True)
class BlockSystem:
    """Two-block spectral problem data: self-adjoint diagonal blocks A_pm,
    bounded coupling B, and a common semi-bound gamma with A_pm >= -gamma."""

    A_plus: np.ndarray
    A_minus: np.ndarray
    B: np.ndarray
    bound_gamma: float


def build_block_system(point) -> BlockSystem:
    """Instantiate the two-block form about a branch point:
    A_pm = -dxx + zeta - 2|u|^2, B = -u^2."""
    grid = point.field.grid
    K = negative_laplacian_matrix(grid)
    u = point.field.values
    A = K + np.diag(point.params.zeta - 2.0 * np.abs(u) ** 2)
    B = np.diag(-(u**2))
    gamma = max(0.0, float(2.0 * np.max(np.abs(u)) ** 2 - point.params.zeta))
    return BlockSystem(A_plus=A, A_minus=A.copy(), B=B, bound_gamma=gamma)


def full_matrix(system: BlockSystem) -> np.ndarray:
    """Dense matrix of the doubled generator J H with H = [[A+, B], [B*, A-]]."""
    top = np.hstack([-1j * system.A_plus, -1j * system.B])
    bot = np.hstack([1j * system.B.conj().T, 1j * system.A_minus])
    return np.vstack([top, bot])


def _lu_with_cond(A: np.ndarray):
    lu, piv, info = lapack.zgetrf(A)
    if info != 0:
        raise NearSingular(f"LU factorization failed (info={info})")
    anorm = np.max(np.sum(np.abs(A), axis=0))
    rcond, _ = lapack.zgecon(lu, anorm)
    if rcond == 0.0 or 1.0 / rcond > COND_LIMIT:
        raise NearSingular(
            f"factorization condition {1.0 / max(rcond, 1e-300):.2e} exceeds "
            f"{COND_LIMIT:.0e}"
        )
    return lu, piv


def _lu_solve(lu_piv, b: np.ndarray) -> np.ndarray:
    lu, piv = lu_piv
    x, info = lapack.zgetrs(lu, piv, np.ascontiguousarray(b))
    if info != 0:
        raise NearSingular(f"LU solve failed (info={info})")
    return x


def deflation_matrix(proj: SpectralProjection, orthogonal: bool = False) -> np.ndarray:
    """I - P0.  With orthogonal=True, P0 is replaced by the orthogonal
    projection onto the kernel vector (sensitivity study only; the spectral
    projection is the one that commutes with the generator)."""
    r = proj.kernel_vector
    n2 = r.shape[0]
    if orthogonal:
        return np.eye(n2, dtype=complex) - np.outer(r, r.conj()) / (r.conj() @ r)
    return np.eye(n2, dtype=complex) - proj.P0


def resolvent_norm(
    ops: OperatorPair,
    proj: SpectralProjection,
    lam: complex,
    eigenvalues: Optional[np.ndarray] = None,
    orthogonal_deflation: bool = False,
) -> float:
    """Operator 2-norm of (J L - eps - lambda)^{-1} (I - P0).

    Dense LU applied to the columns of the deflation, then the largest
    singular value of the explicit solution matrix.  Raises NearSingular when
    lambda sits within 1e-8 of the computed non-kernel spectrum or the
    factorization conditioning exceeds COND_LIMIT.  Note the spectral P0 is
    an oblique projection whose norm grows like 1/(2 eps) (the kernel pair
    merges into a Jordan block as eps -> 0), so deflated norms carry that
    factor.
    """
    if eigenvalues is None:
        eigenvalues = ops.shifted_eigenvalues()
    nonkernel = eigenvalues[np.abs(eigenvalues) >= KERNEL_TOL]
    gap = float(np.min(np.abs(nonkernel - lam)))
    if gap <= 1e-8:
        raise NearSingular(f"lambda={lam} within {gap:.2e} of the spectrum")
    if orthogonal_deflation and abs(lam) <= 1e-8:
        raise NearSingular(
            "orthogonal deflation does not remove the kernel singularity at 0"
        )
    M = ops.lin_matrix()
    A = M - lam * np.eye(M.shape[0])
    lu_piv = _lu_with_cond(A)
    X = _lu_solve(lu_piv, deflation_matrix(proj, orthogonal_deflation))
    return float(sla.svdvals(X)[0])


def scan_halfplane(
    ops: OperatorPair,
    proj: SpectralProjection,
    re_values: Sequence[float],
    im_values: Sequence[float],
    gamma1: float = 2.0,
    gamma2: Optional[float] = None,
) -> ResolventScan:
    """Sample the deflated resolvent norm over {re_values} x {im_values}.

    Near-singular samples are recorded as exclusions, not failures.  Each
    sample is annotated by region: large-real, high-frequency, or the compact
    remainder (gamma1/gamma2 are annotation thresholds only).
    """
    if gamma2 is None:
        zeta = ops.about.params.zeta if ops.about is not None else 1.0
        gamma2 = 2.0 * zeta
    eigenvalues = ops.shifted_eigenvalues()
    samples, norms, regions, excluded = [], [], [], []
    for re in re_values:
        for im in im_values:
            lam = complex(re, im)
            if re >= gamma1:
                region = "large_real"
            elif abs(im) >= gamma2:
                region = "high_frequency"
            else:
                region = "compact"
            try:
                nrm = resolvent_norm(ops, proj, lam, eigenvalues=eigenvalues)
            except NearSingular as exc:
                excluded.append((lam, str(exc)))
                continue
            samples.append(lam)
            norms.append(nrm)
            regions.append(region)
    if not norms:
        raise NearSingular("every requested sample was excluded")
    return ResolventScan(
        lambda_samples=tuple(samples),
        norms=tuple(norms),
        sup_norm=float(np.max(norms)),
        scan_spec={
            "re_values": list(map(float, re_values)),
            "im_values": list(map(float, im_values)),
            "gamma1": gamma1,
            "gamma2": gamma2,
        },
        regions=tuple(regions),
        excluded=tuple(excluded),
    )


def _schur_core(A_first, B_first, A_second, B_second, s, lam_r, psi_f, psi_s):
    """Eliminate the positively shifted block and invert the Schur complement.

    Solves
        (A_first  + s - i lam_r) phi_f + B_first  phi_s = psi_f
        (A_second - s + i lam_r) phi_s + B_second phi_f = psi_s
    for s = |Im lambda| > 0, following the elimination order of the
    high-frequency construction; raises FrequencyTooLow when the contraction
    term reaches CONTRACTION_LIMIT.
    """
    n = A_first.shape[0]
    shift_f = _lu_with_cond(A_first + (s - 1j * lam_r) * np.eye(n))
    real_f = _lu_with_cond(A_first + s * np.eye(n))

    Y = _lu_solve(real_f, B_first)
    A_schur = A_second - B_second @ Y
    schur = _lu_with_cond(A_schur + (-s + 1j * lam_r) * np.eye(n))

    pert = (1j * lam_r) * _lu_solve(schur, B_second @ _lu_solve(shift_f, Y))
    pert_norm = float(sla.svdvals(pert)[0])
    if pert_norm >= CONTRACTION_LIMIT:
        raise FrequencyTooLow(
            f"contraction term norm {pert_norm:.3f} >= {CONTRACTION_LIMIT} at "
            f"|Im lambda| = {s:.3g}, Re lambda = {lam_r:.3g}"
        )
    rhs2 = psi_s - B_second @ _lu_solve(shift_f, psi_f)
    g = _lu_solve(schur, rhs2)
    phi_s = np.linalg.solve(np.eye(n) - pert, g)
    phi_f = _lu_solve(shift_f, psi_f - B_first @ phi_s)
    return phi_f, phi_s, pert_norm


def schur_high_frequency_solve(
    system: BlockSystem, lam: complex, rhs: tuple
) -> tuple[np.ndarray, np.ndarray]:
    """Solve (J H - lambda) (phi1, phi2) = (psi1, psi2) by Schur elimination.

    Requires Re(lambda) != 0 and |Im(lambda)| large enough for the
    contraction bound; agrees with a direct dense solve of the doubled
    system.
    """
    lam_r, lam_i = lam.real, lam.imag
    if lam_r == 0.0:
        raise ValueError("Re(lambda) must be nonzero for the high-frequency solve")
    if lam_i == 0.0:
        raise FrequencyTooLow("Im(lambda) must be nonzero; rho > 0")
    psi1, psi2 = np.asarray(rhs[0], complex), np.asarray(rhs[1], complex)
    # absorb the J factors: equations become (A+ + li - i lr) phi1 + B phi2 = i psi1
    # and (A- - li + i lr) phi2 + B* phi1 = -i psi2
    psi1t, psi2t = 1j * psi1, -1j * psi2
    if lam_i > 0:
        phi1, phi2, _ = _schur_core(
            system.A_plus, system.B, system.A_minus, system.B.conj().T,
            lam_i, lam_r, psi1t, psi2t,
        )
    else:
        phi2, phi1, _ = _schur_core(
            system.A_minus, system.B.conj().T, system.A_plus, system.B,
            -lam_i, -lam_r, psi2t, psi1t,
        )
    return phi1, phi2


def contraction_norm(system: BlockSystem, lam: complex) -> float:
    """Norm of the Neumann perturbation term at lambda (no solve performed)."""
    lam_r, lam_i = lam.real, lam.imag
    n = system.A_plus.shape[0]
    if lam_i > 0:
        A_f, B_f, A_s, B_s, s, lr = (
            system.A_plus, system.B, system.A_minus, system.B.conj().T, lam_i, lam_r,
        )
    else:
        A_f, B_f, A_s, B_s, s, lr = (
            system.A_minus, system.B.conj().T, system.A_plus, system.B, -lam_i, -lam_r,
        )
    shift_f = _lu_with_cond(A_f + (s - 1j * lr) * np.eye(n))
    real_f = _lu_with_cond(A_f + s * np.eye(n))
    Y = _lu_solve(real_f, B_f)
    schur = _lu_with_cond(A_s - B_s @ Y + (-s + 1j * lr) * np.eye(n))
    pert = (1j * lr) * _lu_solve(schur, B_s @ _lu_solve(shift_f, Y))
    return float(sla.svdvals(pert)[0])


_CERTIFY_FACTORS = (1.25, 1.5, 2.0, 4.0)


def compute_rho(
    system: BlockSystem, lambda_r: float, tol: float = 1e-2, max_im: float = 1e6
) -> float:
    """Smallest admissible |Im lambda| at the given Re lambda.

    Admissible means: above the semibound floor 2*gamma (where the shifted
    diagonal block is safely positive) and the contraction term stays below
    CONTRACTION_LIMIT there and at a sweep of larger frequencies (the
    contraction is not monotone: the Schur complement resolvent peaks
    whenever Im lambda crosses its spectrum).  For weak coupling the floor
    itself is admissible; for strong coupling the boundary is bisected.
    """
    if lambda_r == 0.0:
        raise ValueError("lambda_r must be nonzero")
    floor = 2.0 * system.bound_gamma + 1e-3

    def ok(lam_i: float) -> bool:
        return contraction_norm(system, complex(lambda_r, lam_i)) < CONTRACTION_LIMIT

    def certified(lam_i: float) -> bool:
        return ok(lam_i) and all(ok(lam_i * m) for m in _CERTIFY_FACTORS)

    hi = max(floor, 0.5)
    while not certified(hi):
        hi *= 2.0
        if hi > max_im:
            raise FrequencyTooLow(
                f"no admissible frequency below {max_im} at Re lambda = {lambda_r}"
            )
    if hi == max(floor, 0.5) or certified(floor):
        return max(floor, 0.5) if hi == max(floor, 0.5) else floor
    lo = floor
    while hi - lo > tol:
        mid = 0.5 * (hi + lo)
        if certified(mid):
            hi = mid
        else:
            lo = mid
    return hi


def high_frequency_scaling_check(
    system: BlockSystem, re_values: Sequence[float], im_value: float
) -> list[dict]:
    """Table of (lambda_r, resolvent norm, norm * lambda_r) at fixed Im lambda.

    The product column exposes the 1/|Re lambda| scaling of the
    high-frequency bound; this reports and does not assert.
    """
    M = full_matrix(system)
    n2 = M.shape[0]
    rows = []
    for re in re_values:
        if re == 0.0:
            raise ValueError(
                "Re(lambda) = 0 excluded: no uniform high-frequency bound there"
            )
        lam = complex(re, im_value)
        smin = float(sla.svdvals(M - lam * np.eye(n2))[-1])
        nrm = 1.0 / smin
        rows.append(
            {"lambda_r": float(re), "norm": nrm, "norm_times_lambda_r": nrm * abs(re)}
        )
    return rows
