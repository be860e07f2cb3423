"""Dense discretizations of the linearized operators.

Linearizing the stationary equation about a wave u couples v with its
conjugate, so the natural objects are 2n x 2n matrices acting on the doubled
vector (v, vbar):

    J = diag(-i, i),   L = [[-dxx + zeta - 2|u|^2,   -u^2        ],
                            [-conj(u)^2,             -dxx + zeta - 2|u|^2]]

L is Hermitian by construction.  The similarity transform T2*T1 (split into
real/imaginary parts, then rotate by the soliton angle) turns J*L into a real
Hamiltonian problem with the canonical symplectic J-tilde, block-diagonal at
epsilon = 0 into the classical NLS pair L_plus, L_minus.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import TYPE_CHECKING, Optional

import numpy as np
import scipy.linalg as sla

from .errors import ComplexResidue, EigensolveFailure, KernelDimensionMismatch
from .grid import ComplexField, Grid, even_basis, first_derivative
from .soliton import Params, nls_soliton

if TYPE_CHECKING:
    from .continuation import BranchPoint

#: eigenvalues of modulus below this are treated as the translational kernel
KERNEL_TOL = 1e-6


def negative_laplacian_matrix(grid: Grid) -> np.ndarray:
    """Dense real symmetric matrix of -d^2/dx^2 (spectral accuracy)."""
    n = grid.n_points
    k2 = grid.wavenumbers**2
    K = np.fft.ifft(k2[:, None] * np.fft.fft(np.eye(n), axis=0), axis=0).real
    return 0.5 * (K + K.T)


@dataclass
class OperatorPair:
    """Discretized (J, L) about a wave, with the shifted matrix J L - eps."""

    L_matrix: np.ndarray
    J_matrix: np.ndarray
    epsilon: float
    grid: Grid
    about: Optional["BranchPoint"] = None
    _eig_cache: tuple | None = dc_field(default=None, repr=False)
    _lin_cache: np.ndarray | None = dc_field(default=None, repr=False)

    def lin_matrix(self) -> np.ndarray:
        """Matrix of the evolution generator J L - eps (cached; J is diagonal)."""
        if self._lin_cache is None:
            n2 = self.L_matrix.shape[0]
            j_diag = np.diag(self.J_matrix)
            self._lin_cache = j_diag[:, None] * self.L_matrix - self.epsilon * np.eye(n2)
        return self._lin_cache

    def eig(self):
        """Cached dense eigensolve of J L - eps: (values, left vecs, right vecs)."""
        if self._eig_cache is None:
            try:
                w, vl, vr = sla.eig(self.lin_matrix(), left=True, right=True)
            except sla.LinAlgError as exc:  # pragma: no cover
                raise EigensolveFailure(str(exc)) from exc
            self._eig_cache = (w, vl, vr)
        return self._eig_cache

    def shifted_eigenvalues(self) -> np.ndarray:
        return self.eig()[0]


@dataclass(frozen=True)
class RealOperatorPair:
    """Real form (J-tilde, L-tilde) after the similarity transform at theta0."""

    J_tilde: np.ndarray
    L_tilde: np.ndarray
    theta0: float


@dataclass(frozen=True)
class SpectralProjection:
    """Rank-one projection onto the translational kernel of J L - eps."""

    P0: np.ndarray
    kernel_vector: np.ndarray


def assemble_at_field(u: ComplexField, params: Params, epsilon: float) -> OperatorPair:
    """Build (J, L) for an arbitrary field; Hermiticity enforced by construction."""
    grid = u.grid
    n = grid.n_points
    K = negative_laplacian_matrix(grid)
    uu = u.values
    diag_common = params.zeta - 2.0 * np.abs(uu) ** 2
    A = K + np.diag(diag_common)
    B = np.diag(-(uu**2))
    L = np.block([[A, B], [B.conj(), A]]).astype(complex)
    J = np.diag(np.concatenate([-1j * np.ones(n), 1j * np.ones(n)]))
    return OperatorPair(L_matrix=L, J_matrix=J, epsilon=epsilon, grid=grid)


def assemble(point: "BranchPoint") -> OperatorPair:
    """Operators linearized about a converged branch point."""
    ops = assemble_at_field(point.field, point.params, point.epsilon)
    ops.about = point
    return ops


def _transform_blocks(theta0: float):
    """2x2 blocks of T = T2 T1 and its inverse (acting blockwise on (v, vbar))."""
    T1 = 0.5 * np.array([[1.0, 1.0], [-1j, 1j]])
    T2 = np.array(
        [
            [np.cos(theta0), np.sin(theta0)],
            [-np.sin(theta0), np.cos(theta0)],
        ]
    )
    T = T2 @ T1
    return T, np.linalg.inv(T)


def _block_conjugate(M: np.ndarray, T: np.ndarray, Tinv: np.ndarray) -> np.ndarray:
    """(T kron I) M (Tinv kron I) using n x n block arithmetic."""
    n = M.shape[0] // 2
    blocks = [[M[:n, :n], M[:n, n:]], [M[n:, :n], M[n:, n:]]]
    left = [
        [T[0, 0] * blocks[0][0] + T[0, 1] * blocks[1][0],
         T[0, 0] * blocks[0][1] + T[0, 1] * blocks[1][1]],
        [T[1, 0] * blocks[0][0] + T[1, 1] * blocks[1][0],
         T[1, 0] * blocks[0][1] + T[1, 1] * blocks[1][1]],
    ]
    out = np.empty_like(M)
    out[:n, :n] = left[0][0] * Tinv[0, 0] + left[0][1] * Tinv[1, 0]
    out[:n, n:] = left[0][0] * Tinv[0, 1] + left[0][1] * Tinv[1, 1]
    out[n:, :n] = left[1][0] * Tinv[0, 0] + left[1][1] * Tinv[1, 0]
    out[n:, n:] = left[1][0] * Tinv[0, 1] + left[1][1] * Tinv[1, 1]
    return out


def to_real_form(ops: OperatorPair, theta0: float) -> RealOperatorPair:
    """Similarity-transform (J, L) to the real Hamiltonian form.

    Raises ComplexResidue if the transformed matrices fail to be real to
    1e-8 (they are exactly real in exact arithmetic for any wave).
    """
    T, Tinv = _transform_blocks(theta0)
    n = ops.grid.n_points
    J_t = _block_conjugate(ops.J_matrix, T, Tinv)
    L_t = _block_conjugate(ops.L_matrix, T, Tinv)
    for name, M in (("J", J_t), ("L", L_t)):
        defect = float(np.max(np.abs(M.imag)))
        if defect > 1e-8:
            raise ComplexResidue(
                f"transformed {name} has imaginary residue {defect:.2e}"
            )
    eye = np.eye(n)
    J_canonical = np.block([[0.0 * eye, eye], [-eye, 0.0 * eye]])
    if not np.allclose(J_t.real, J_canonical, atol=1e-12):
        raise ComplexResidue("transformed J is not the canonical symplectic matrix")
    L_real = L_t.real
    return RealOperatorPair(
        J_tilde=J_canonical, L_tilde=0.5 * (L_real + L_real.T), theta0=theta0
    )


def transform_to_real_coords(theta0: float, vec: np.ndarray) -> np.ndarray:
    """Apply T2 T1 (block 2x2) to a doubled vector (v, vbar)."""
    T, _ = _transform_blocks(theta0)
    n = vec.shape[0] // 2
    v1, v2 = vec[:n], vec[n:]
    return np.concatenate([T[0, 0] * v1 + T[0, 1] * v2, T[1, 0] * v1 + T[1, 1] * v2])


def split_operators(params: Params, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """NLS split pair L_plus = -dxx + zeta - 3 phi0^2, L_minus = -dxx + zeta - phi0^2."""
    K = negative_laplacian_matrix(grid)
    phi0 = np.abs(nls_soliton(params, grid, 0.0).values)
    L_plus = K + np.diag(params.zeta - 3.0 * phi0**2)
    L_minus = K + np.diag(params.zeta - phi0**2)
    return L_plus, L_minus


def kernel_pair_vector(point: "BranchPoint") -> np.ndarray:
    """Discretized translational kernel vector (du/dx, d(ubar)/dx), L2-normalized."""
    du = first_derivative(point.field).values
    vec = np.concatenate([du, np.conj(du)])
    return vec / np.linalg.norm(vec)


def spectral_projection(ops: OperatorPair) -> SpectralProjection:
    """Biorthogonal rank-one projection onto the kernel of J L - eps.

    The right vector is the analytic translational mode; the left vector is
    taken from the dense eigensolve and normalized so <left, right> = 1.
    """
    if ops.about is None:
        raise ValueError("spectral_projection needs an OperatorPair with about set")
    if ops.epsilon == 0.0:
        raise ValueError("kernel is two-dimensional at epsilon = 0; need epsilon != 0")
    w, vl, _ = ops.eig()
    near_zero = np.flatnonzero(np.abs(w) < KERNEL_TOL)
    if near_zero.size != 1:
        raise KernelDimensionMismatch(
            f"expected exactly one eigenvalue of modulus < {KERNEL_TOL:.0e}, "
            f"found {near_zero.size}: {w[near_zero]}"
        )
    r = kernel_pair_vector(ops.about)
    left = vl[:, near_zero[0]]
    scale = left.conj() @ r
    if abs(scale) < 1e-12:
        raise KernelDimensionMismatch("left and right kernel vectors are orthogonal")
    left = left / np.conj(scale)
    P0 = np.outer(r, left.conj())
    return SpectralProjection(P0=P0, kernel_vector=r)


def matrix_to_csv(M: np.ndarray, path) -> None:
    """Dense export, row-major, each entry as a re,im pair."""
    M = np.asarray(M, dtype=complex)
    with open(path, "w", encoding="utf-8") as fh:
        for row in M:
            fh.write(",".join(f"{z.real:.17g},{z.imag:.17g}" for z in row))
            fh.write("\n")


def scalar_real_even_matrix(
    u: ComplexField, zeta: float, epsilon: float
) -> tuple[np.ndarray, np.ndarray]:
    """Even-subspace real matrix of v -> -v'' + zeta v - 2|u|^2 v - u^2 vbar - i eps v.

    Acts on stacked cosine coefficients (a, b) of v = E a + i E b.  This is
    both the Newton Jacobian of the stationary problem (restricted to even
    modes, which removes the odd translational kernel) and, at epsilon = 0,
    the scalar linearization about the rotated soliton.

    Returns (matrix, E) with E the even cosine basis.
    """
    grid = u.grid
    E = even_basis(grid)
    m = E.shape[1]
    k_even = np.pi * np.arange(m) / grid.half_length
    p, q = u.values.real, u.values.imag
    d_aa = zeta - (3.0 * p**2 + q**2)
    d_bb = zeta - (p**2 + 3.0 * q**2)
    d_ab = -2.0 * p * q + epsilon
    d_ba = -2.0 * p * q - epsilon
    A = np.zeros((2 * m, 2 * m))
    A[:m, :m] = np.diag(k_even**2) + E.T @ (d_aa[:, None] * E)
    A[:m, m:] = E.T @ (d_ab[:, None] * E)
    A[m:, :m] = E.T @ (d_ba[:, None] * E)
    A[m:, m:] = np.diag(k_even**2) + E.T @ (d_bb[:, None] * E)
    return A, E
