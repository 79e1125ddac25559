"""Diffusion on finite metric graphs with non-local vertex coupling.

Piecewise-linear finite elements for the coupled heat equation, its discrete
semigroup and heat kernel, and numerical checks of realness, positivity,
contractivity, ultracontractivity, Gaussian bounds, domination and
irreducibility.
"""
from .graph_model import Network, build_network, path_network, star_network
from .coupling import classify_coupling, verify_matrix_linf_contractivity
from .discretization import CoefficientProfile, Mesh, assemble
from .evolution import StateVector, evolve, expm_apply, heat_kernel, norm

__version__ = "0.1.0"

__all__ = [
    "Network",
    "build_network",
    "path_network",
    "star_network",
    "classify_coupling",
    "verify_matrix_linf_contractivity",
    "CoefficientProfile",
    "Mesh",
    "assemble",
    "StateVector",
    "evolve",
    "expm_apply",
    "heat_kernel",
    "norm",
]
