"""Numerical workbench for solitary waves of the Lugiato-Lefever equation.

Pipelines: Newton continuation of the wave from the NLS soliton, essential
and discrete spectra with Krein-index audits, resolvent-norm scans on the
closed right half-plane, and direct time evolution with modulation-based
orbital-distance tracking.
"""

__version__ = "0.1.0"

from .grid import ComplexField, Grid, norm, second_derivative, shift
from .soliton import (
    BifurcationAngles,
    Params,
    leading_ansatz,
    nls_soliton,
    reduced_bifurcation_derivative,
    reduced_bifurcation_function,
    solve_background,
    solve_theta0,
)
from .continuation import (
    Branch,
    BranchPoint,
    continue_branch,
    fit_theta,
    newton_correct,
    stationary_residual,
)
from .linops import (
    OperatorPair,
    RealOperatorPair,
    SpectralProjection,
    assemble,
    spectral_projection,
    split_operators,
    to_real_form,
)
from .spectrum import (
    KreinReport,
    SpectrumReport,
    dense_spectrum,
    essential_spectrum_edge,
    krein_audit,
    small_eigenvalue_asymptotics,
    stability_verdict,
    verify_expansion_constants,
)
from .resolvent import (
    BlockSystem,
    ResolventScan,
    build_block_system,
    compute_rho,
    high_frequency_scaling_check,
    resolvent_norm,
    scan_halfplane,
    schur_high_frequency_solve,
)
from .dynamics import (
    EvolutionTrace,
    evolve,
    make_perturbation,
    orbital_distance,
    stability_experiment,
)

__all__ = [
    "__version__",
    "ComplexField",
    "Grid",
    "norm",
    "second_derivative",
    "shift",
    "BifurcationAngles",
    "Params",
    "leading_ansatz",
    "nls_soliton",
    "reduced_bifurcation_derivative",
    "reduced_bifurcation_function",
    "solve_background",
    "solve_theta0",
    "Branch",
    "BranchPoint",
    "continue_branch",
    "fit_theta",
    "newton_correct",
    "stationary_residual",
    "OperatorPair",
    "RealOperatorPair",
    "SpectralProjection",
    "assemble",
    "spectral_projection",
    "split_operators",
    "to_real_form",
    "KreinReport",
    "SpectrumReport",
    "dense_spectrum",
    "essential_spectrum_edge",
    "krein_audit",
    "small_eigenvalue_asymptotics",
    "stability_verdict",
    "verify_expansion_constants",
    "BlockSystem",
    "ResolventScan",
    "build_block_system",
    "compute_rho",
    "high_frequency_scaling_check",
    "resolvent_norm",
    "scan_halfplane",
    "schur_high_frequency_solve",
    "EvolutionTrace",
    "evolve",
    "make_perturbation",
    "orbital_distance",
    "stability_experiment",
]
