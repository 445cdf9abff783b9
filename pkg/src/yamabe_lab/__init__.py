"""Numerical laboratory for concentrating solutions of the subcritical
Yamabe equation on Riemannian products: radial ground states, reduced-energy
constants, and a discrete finite-dimensional reduction on 2-tori."""

from .errors import ConfigError, NumericalError, YamabeLabError
from .ground_state import ProblemDims, RadialProfile, ShootOptions, solve_radial_ground_state
from .moments import alpha_beta, beta_table, compute_moments, verify_identities

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "NumericalError",
    "YamabeLabError",
    "ProblemDims",
    "RadialProfile",
    "ShootOptions",
    "solve_radial_ground_state",
    "compute_moments",
    "alpha_beta",
    "verify_identities",
    "beta_table",
]
