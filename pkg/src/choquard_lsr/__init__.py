"""Semiclassical Choquard standing waves: ground state, reduction and barrier tools."""

from .ansatz import AnsatzPoint, build_ansatz, coercivity_probe, project_orthogonal, quasi_solution_norm
from .barriers import BarrierParams, barrier_check, comparison_functions, comparison_gamma, decay_radius
from .config import RunConfig, load_config
from .errors import ChoquardError
from .fields import Box3, EpsilonContext, ScalarField3, TruncationParams, coulomb_convolve, energy, gradient
from .landscape import concentration_study, energy_constant_D, find_critical_points, scan_reduced
from .potentials import PotentialSpec, make_potential
from .radial import RadialGrid, RadialProfile, linearized_spectrum, scale_profile, solve_ground_state
from .reduction import SolveParams, apply_S, estimate_contraction, full_residual, solve_auxiliary

__version__ = "0.1.0"

__all__ = [
    "AnsatzPoint",
    "BarrierParams",
    "Box3",
    "ChoquardError",
    "EpsilonContext",
    "PotentialSpec",
    "RadialGrid",
    "RadialProfile",
    "RunConfig",
    "ScalarField3",
    "SolveParams",
    "TruncationParams",
    "apply_S",
    "barrier_check",
    "build_ansatz",
    "coercivity_probe",
    "comparison_functions",
    "concentration_study",
    "coulomb_convolve",
    "energy",
    "energy_constant_D",
    "estimate_contraction",
    "find_critical_points",
    "full_residual",
    "gradient",
    "comparison_gamma",
    "decay_radius",
    "linearized_spectrum",
    "load_config",
    "make_potential",
    "project_orthogonal",
    "quasi_solution_norm",
    "scale_profile",
    "scan_reduced",
    "solve_auxiliary",
    "solve_ground_state",
]
