"""Stroboscopic state tomography for qudits under Gaussian dephasing."""

__version__ = "0.1.0"

from .operator_core import HamiltonianSpec, hermitian_basis, random_state, validate_density
from .generator import build_generator, generator_spectrum, evolve_exact, evolve_expm, evolve_quadrature
from .cyclicity import cyclicity_report, index_bruteforce, index_closed_form, minimal_polynomial
from .alpha_flow import AlphaSystem, TimeGrid, alpha_interp, alpha_ode, select_time_scale
from .tomography import design_observables, krylov_span, reconstruct, simulate_data

__all__ = [
    "HamiltonianSpec",
    "hermitian_basis",
    "random_state",
    "validate_density",
    "build_generator",
    "generator_spectrum",
    "evolve_exact",
    "evolve_expm",
    "evolve_quadrature",
    "cyclicity_report",
    "index_bruteforce",
    "index_closed_form",
    "minimal_polynomial",
    "AlphaSystem",
    "TimeGrid",
    "alpha_interp",
    "alpha_ode",
    "select_time_scale",
    "design_observables",
    "krylov_span",
    "reconstruct",
    "simulate_data",
]
