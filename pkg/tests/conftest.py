"""Shared fixtures: canonical states and random bound-orbit generation."""

import math

import numpy as np
import pytest

from starkprop.propagation import (
    CartesianState,
    StarkModel,
    build_propagation,
)

MU = 1.0

BOUND_R0 = (1.0, 0.1, 0.25)
BOUND_V0 = (0.05, 0.95, 0.18)
BOUND_EPS = 0.05

UNBOUND_EPS = 0.5


@pytest.fixture(scope="session")
def bound_model():
    return StarkModel(mu=MU, eps=BOUND_EPS)


@pytest.fixture(scope="session")
def bound_state():
    return CartesianState(r=BOUND_R0, v=BOUND_V0)


@pytest.fixture(scope="session")
def bound_ctx(bound_state, bound_model):
    return build_propagation(bound_state, bound_model)


@pytest.fixture(scope="session")
def unbound_model():
    return StarkModel(mu=MU, eps=UNBOUND_EPS)


@pytest.fixture(scope="session")
def unbound_ctx(bound_state, unbound_model):
    ctx = build_propagation(bound_state, unbound_model)
    assert not ctx.bound
    return ctx


def random_state(rng) -> CartesianState:
    rho = rng.uniform(0.4, 1.6)
    ang = rng.uniform(-math.pi, math.pi)
    z = rng.uniform(-0.6, 0.6)
    vmag = rng.uniform(0.6, 1.1) * math.sqrt(MU / math.hypot(rho, z))
    # mostly tangential velocity, nonzero p_phi by construction
    vt = vmag * rng.uniform(0.75, 1.0)
    vr = math.sqrt(max(vmag**2 - vt**2, 0.0)) * rng.choice([-1.0, 1.0])
    vz = rng.uniform(-0.25, 0.25) * vmag
    c, s = math.cos(ang), math.sin(ang)
    r = (rho * c, rho * s, z)
    v = (vr * c - vt * s, vr * s + vt * c, vz)
    return CartesianState(r=r, v=v)


def escape_eps(state: CartesianState, mu: float = MU) -> float:
    """Critical field strength beyond which the state escapes (bisection)."""
    lo, hi = 1e-6, 1e-6
    for _ in range(60):
        hi *= 2.0
        try:
            if not build_propagation(state, StarkModel(mu, hi)).bound:
                break
        except Exception:
            break
    else:
        raise RuntimeError("no unbound eps found")
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        try:
            bound = build_propagation(state, StarkModel(mu, mid)).bound
        except Exception:
            bound = False
        if bound:
            lo = mid
        else:
            hi = mid
    return lo


def random_bound_cases(n: int, seed: int = 0):
    """n (state, model) pairs with mu=1, eps in [1e-3, 0.2 eps_escape], bound."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        state = random_state(rng)
        try:
            cap = 0.2 * escape_eps(state)
        except Exception:
            continue
        if cap <= 1e-3:
            continue
        model = StarkModel(MU, rng.uniform(1e-3, cap))
        try:
            ctx = build_propagation(state, model)
        except Exception:
            continue
        if ctx.bound:
            out.append((state, model))
    return out
