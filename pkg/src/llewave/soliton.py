"""Closed-form NLS objects and the bifurcation scalars.

The stationary problem at epsilon = 0 is the focusing cubic NLS

    -phi'' + zeta*phi - |phi|^2 phi = 0,

solved by phi_theta(x) = sqrt(2 zeta) sech(sqrt(zeta) x) e^{i theta} for any
rotation angle theta.  Forcing selects the admissible angles through
pi*f*cos(theta) = 2*sqrt(2 zeta), and pushes the far-field value off zero to
the root u_inf of a complex cubic.  Everything needed to seed and check the
continuation lives here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateRoot, ExistenceViolation, RootJump
from .grid import ComplexField, Grid

#: |sin theta| below this counts as a non-simple root of the angle equation.
SIMPLE_ROOT_TOL = 1e-8


@dataclass(frozen=True)
class Params:
    """Physical parameters: detuning zeta > 0, pump f > 0, bifurcation epsilon.

    Dispersion is rescaled to d = 1 throughout.
    """

    zeta: float
    f: float
    epsilon: float = 0.0
    d: float = field(default=1.0)

    def __post_init__(self) -> None:
        if self.zeta <= 0:
            raise ValueError("zeta must be positive")
        if self.f <= 0:
            raise ValueError("f must be positive")
        if self.d != 1.0:
            raise ValueError("dispersion is fixed at d = 1 (rescaled)")

    @property
    def existence_margin(self) -> float:
        """pi^2 f^2 - 8 zeta; admissible angles exist iff this is positive."""
        return math.pi**2 * self.f**2 - 8.0 * self.zeta

    def with_epsilon(self, epsilon: float) -> "Params":
        return Params(self.zeta, self.f, epsilon)


@dataclass(frozen=True)
class BifurcationAngles:
    """The two roots of pi*f*cos(theta) = 2*sqrt(2 zeta) in [0, 2 pi).

    theta_stable lies in (0, pi) (positive sine), theta_unstable is its
    mirror 2 pi - theta_stable with negative sine.
    """

    theta_stable: float
    theta_unstable: float
    sin_theta: float
    cos_theta: float


def solve_theta0(params: Params) -> BifurcationAngles:
    """Solve the angle equation; certify simplicity of the roots.

    Raises
    ------
    ExistenceViolation
        If pi^2 f^2 <= 8 zeta (no real root).
    DegenerateRoot
        If the root exists but |sin theta| < SIMPLE_ROOT_TOL.
    """
    if params.existence_margin <= 0:
        raise ExistenceViolation(
            f"pi^2 f^2 = {math.pi**2 * params.f**2:.6g} must exceed "
            f"8 zeta = {8 * params.zeta:.6g}"
        )
    cos_theta = 2.0 * math.sqrt(2.0 * params.zeta) / (math.pi * params.f)
    if cos_theta > 1.0:
        raise ExistenceViolation("cos(theta) > 1; no admissible angle")
    theta = math.acos(cos_theta)
    sin_theta = math.sin(theta)
    if abs(sin_theta) < SIMPLE_ROOT_TOL:
        raise DegenerateRoot(
            f"|sin theta| = {abs(sin_theta):.3e} < {SIMPLE_ROOT_TOL:.0e}; "
            "root of the angle equation is not simple"
        )
    return BifurcationAngles(
        theta_stable=theta,
        theta_unstable=2.0 * math.pi - theta,
        sin_theta=sin_theta,
        cos_theta=cos_theta,
    )


def nls_soliton(params: Params, grid: Grid, theta: float = 0.0) -> ComplexField:
    """Rotated bright soliton sqrt(2 zeta) sech(sqrt(zeta) x) e^{i theta}."""
    amp = math.sqrt(2.0 * params.zeta)
    profile = amp / np.cosh(math.sqrt(params.zeta) * grid.points)
    return grid.field(profile * np.exp(1j * theta))


def soliton_zeta_derivative(params: Params, grid: Grid, theta: float = 0.0) -> ComplexField:
    """d/d zeta of the soliton profile, from differentiating the sech formula."""
    z = params.zeta
    s = np.sqrt(z) * grid.points
    sech = 1.0 / np.cosh(s)
    # d/dz [sqrt(2z) sech(sqrt(z) x)] = sech/sqrt(2z) - x sqrt(2z)/(2 sqrt(z)) sech tanh
    dprofile = sech / math.sqrt(2.0 * z) - (
        grid.points * math.sqrt(2.0 * z) / (2.0 * math.sqrt(z))
    ) * sech * np.tanh(s)
    return grid.field(dprofile * np.exp(1j * theta))


def _background_system(u: np.ndarray, zeta: float, f: float, eps: float):
    """Real residual and Jacobian of the background cubic at u = (x, y)."""
    x, y = u
    rho = x * x + y * y
    res = np.array(
        [
            zeta * x - rho * x + eps * y,
            zeta * y - rho * y - eps * x + eps * f,
        ]
    )
    jac = np.array(
        [
            [zeta - 3 * x * x - y * y, -2 * x * y + eps],
            [-2 * x * y - eps, zeta - x * x - 3 * y * y],
        ]
    )
    return res, jac


#: Maximum epsilon increment when tracking the small background root.
BACKGROUND_STEP = 0.005


def solve_background(params: Params, tol: float = 1e-13) -> complex:
    """Small root of zeta*u - |u|^2 u + i eps (-u + f) = 0 near the origin.

    Tracks the root from epsilon = 0 by Newton continuation in steps of at
    most BACKGROUND_STEP, each seeded by the previous root (leading order
    -i f eps / zeta for the first step).  The two roots near +-sqrt(zeta)
    are excluded; landing on one raises RootJump.
    """
    eps_target = params.epsilon
    if eps_target == 0.0:
        return 0.0 + 0.0j
    n_steps = max(1, int(math.ceil(abs(eps_target) / BACKGROUND_STEP)))
    u = np.zeros(2)
    for m in range(1, n_steps + 1):
        eps = eps_target * m / n_steps
        if m == 1:
            u = np.array([0.0, -params.f * eps / params.zeta])
        for _ in range(50):
            res, jac = _background_system(u, params.zeta, params.f, eps)
            if np.max(np.abs(res)) < tol:
                break
            u = u - np.linalg.solve(jac, res)
        else:
            res, _ = _background_system(u, params.zeta, params.f, eps)
            if np.max(np.abs(res)) >= tol:
                raise RootJump(
                    f"background Newton stalled at eps={eps:.4g}, "
                    f"residual {np.max(np.abs(res)):.2e}"
                )
        if np.hypot(*u) > 0.5 * math.sqrt(params.zeta):
            raise RootJump(
                f"background root |u|={np.hypot(*u):.4g} at eps={eps:.4g} "
                "landed on an excluded branch near +-sqrt(zeta)"
            )
    return complex(u[0], u[1])


def reduced_bifurcation_function(theta: float, params: Params) -> float:
    """Leading-order reduced equation 4 sqrt(zeta) - sqrt(2) pi f cos(theta)."""
    return 4.0 * math.sqrt(params.zeta) - math.sqrt(2.0) * math.pi * params.f * math.cos(theta)


def reduced_bifurcation_derivative(theta: float, params: Params) -> float:
    """Angle derivative sqrt(2) pi f sin(theta) of the reduced equation."""
    return math.sqrt(2.0) * math.pi * params.f * math.sin(theta)


def leading_ansatz(params: Params, grid: Grid, theta: float) -> ComplexField:
    """Newton seed u_inf(eps) + soliton; exact at epsilon = 0."""
    u_inf = solve_background(params)
    return nls_soliton(params, grid, theta) + u_inf
