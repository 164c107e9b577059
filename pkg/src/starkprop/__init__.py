"""Closed-form propagation and analysis of the 3-D Stark problem."""

from .backend import using_numba
from .propagation import (
    CartesianState,
    CubicPoly,
    MotionConstants,
    ParabolicState,
    PropagationContext,
    StarkModel,
    build_propagation,
    cartesian_to_parabolic,
    motion_constants,
    parabolic_to_cartesian,
    propagate,
    tau_of,
    time_of,
    xi_squared,
    eta_squared,
    phi,
)
from .weierstrass import Invariants, WeierstrassContext, context_from_invariants

__version__ = "0.1.0"

__all__ = [
    "CartesianState",
    "CubicPoly",
    "Invariants",
    "MotionConstants",
    "ParabolicState",
    "PropagationContext",
    "StarkModel",
    "WeierstrassContext",
    "build_propagation",
    "cartesian_to_parabolic",
    "context_from_invariants",
    "eta_squared",
    "motion_constants",
    "parabolic_to_cartesian",
    "phi",
    "propagate",
    "tau_of",
    "time_of",
    "using_numba",
    "xi_squared",
    "__version__",
]
