"""Independent numerical ground truth.

Adaptive Dormand-Prince 5(4) integration of the raw cartesian equations of
motion (dv/dt = -mu r/|r|^3 + eps e_z) and of the separated parabolic system
in fictitious time.  The integrator lives in :mod:`starkprop.kernels` and
shares nothing with the closed-form evaluation path, so trajectories from
here serve as the validation oracle for every analytic result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import CollisionApproach, NonFinite, StepLimitExceeded
from .propagation import CartesianState, MotionConstants, ParabolicState, StarkModel

#: default fraction of the initial radius treated as a collision
COLLISION_FLOOR_FRACTION = 1e-9


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-11
    abs_tol: float = 1e-13
    max_steps: int = 5_000_000
    dense_output: bool = True

    def __post_init__(self):
        for name, tol in (("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)):
            if not (0.0 < tol <= 1e-3):
                raise ValueError(f"{name} must lie in (0, 1e-3], got {tol}")
        if self.max_steps <= 0:
            raise ValueError("max_steps must be positive")


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution; ``escaped`` marks early stop at the escape radius."""

    times: np.ndarray
    states: np.ndarray  # shape (n, 6)
    escaped: bool
    t_reached: float
    n_steps: int
    final_state: np.ndarray  # state at t_reached (even when unsampled)

    def state(self, k: int) -> CartesianState:
        row = self.states[k]
        return CartesianState(r=tuple(row[:3]), v=tuple(row[3:]))

    def __len__(self) -> int:
        return len(self.times)


def _sample_grid(t_end: float, t_eval, n_default: int = 100) -> np.ndarray:
    if t_eval is not None:
        grid = np.asarray(t_eval, dtype=float)
        if grid.ndim != 1 or len(grid) == 0:
            raise ValueError("t_eval must be a nonempty 1-d array")
        return grid
    return np.linspace(0.0, t_end, n_default)


def integrate_cartesian(
    state0: CartesianState,
    model: StarkModel,
    t_end: float,
    cfg: IntegratorConfig = IntegratorConfig(),
    *,
    t_eval=None,
    escape_radius: float = 0.0,
    collision_floor: float | None = None,
) -> Trajectory:
    """Integrate the cartesian Stark equations from t = 0 to ``t_end``.

    Samples (dense output) at ``t_eval`` or a uniform 100-point grid.  An
    ``escape_radius`` > 0 stops integration once |r| exceeds it and returns
    the filled part with ``escaped=True``.  Crossing the collision floor
    (default 1e-9 of the initial radius) raises ``CollisionApproach``;
    exhausting the step budget raises ``StepLimitExceeded``.
    """
    if not math.isfinite(t_end):
        raise NonFinite("t_end must be finite", t_end=t_end)
    r0, v0 = state0.arrays()
    y0 = np.concatenate([r0, v0])
    grid = _sample_grid(t_end, t_eval)
    floor = (
        COLLISION_FLOOR_FRACTION * state0.radius
        if collision_floor is None
        else collision_floor
    )
    Y, status, n_filled, t_reached, n_steps, y_final = kernels.dp54_integrate(
        kernels.RHS_CARTESIAN,
        np.array([model.mu, model.eps]),
        y0,
        0.0,
        grid,
        cfg.rel_tol,
        cfg.abs_tol,
        cfg.max_steps,
        floor,
        escape_radius,
    )
    if status == kernels.STATUS_COLLISION:
        raise CollisionApproach(
            "trajectory approached the origin", t=t_reached, floor=floor
        )
    if status in (kernels.STATUS_STEP_LIMIT, kernels.STATUS_STEP_UNDERFLOW):
        raise StepLimitExceeded(
            "integrator exhausted its budget", t=t_reached, steps=n_steps
        )
    escaped = status == kernels.STATUS_ESCAPED
    return Trajectory(
        times=grid[:n_filled],
        states=Y[:n_filled],
        escaped=escaped,
        t_reached=t_reached,
        n_steps=n_steps,
        final_state=np.asarray(y_final),
    )


def integrate_parabolic_fictitious(
    ps0: ParabolicState,
    constants: MotionConstants,
    model: StarkModel,
    tau_end: float,
    cfg: IntegratorConfig = IntegratorConfig(),
    *,
    tau_eval=None,
) -> dict:
    """Integrate the separated system in fictitious time.

    Works on the canonical pairs (xi, p_xi), (eta, p_eta) plus phi and t, so
    no square roots of the radial cubics enter the right-hand side.  Returns
    arrays sampled at ``tau_eval`` (or a 100-point uniform grid):
    ``{"tau", "xi2", "eta2", "phi", "t", "p_xi", "p_eta"}``.
    """
    grid = _sample_grid(tau_end, tau_eval)
    y0 = np.array([ps0.xi, ps0.p_xi, ps0.eta, ps0.p_eta, ps0.phi, 0.0])
    Y, status, n_filled, t_reached, n_steps, _ = kernels.dp54_integrate(
        kernels.RHS_PARABOLIC,
        np.array([model.eps, constants.h, constants.p_phi]),
        y0,
        0.0,
        grid,
        cfg.rel_tol,
        cfg.abs_tol,
        cfg.max_steps,
        0.0,
        0.0,
    )
    if status != kernels.STATUS_OK:
        raise StepLimitExceeded(
            "fictitious-time integration failed", status=status, tau=t_reached
        )
    return {
        "tau": grid[:n_filled],
        "xi2": Y[:n_filled, 0] ** 2,
        "eta2": Y[:n_filled, 2] ** 2,
        "phi": Y[:n_filled, 4],
        "t": Y[:n_filled, 5],
        "p_xi": Y[:n_filled, 1],
        "p_eta": Y[:n_filled, 3],
    }


def dynamical_time(state0: CartesianState, model: StarkModel) -> float:
    """sqrt(r0^3 / mu): the natural orbital time scale of the initial radius."""
    return math.sqrt(state0.radius**3 / model.mu)
