"""Qualitative dynamics built on the closed-form propagator.

Boundness classification from the characteristic-root criterion, asymptotic
escape geometry, fictitious-time periods, searches for commensurable
(quasi-periodic) and closed (periodic) orbits, and the displaced-circular /
stationary equilibrium family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import weierstrass as wz
from .errors import (
    BeyondEquilibriumLimit,
    Degenerate,
    NotBound,
    NotUnbound,
    SearchFailed,
)
from .oracle import IntegratorConfig, dynamical_time, integrate_cartesian
from .propagation import (
    CartesianState,
    PropagationContext,
    StarkModel,
    build_propagation,
    cartesian_to_parabolic,
    parabolic_to_cartesian,
    ParabolicState,
    phi,
    time_of,
)

BOUND = "bound"
UNBOUND = "unbound"


# ---------------------------------------------------------------------------
# boundness and escape geometry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundnessReport:
    """Outcome of the analytic bound/unbound test on the xi branch.

    The trajectory is bound exactly when the smallest value the p-function
    takes on the real axis stays above the initial-point threshold
    f''(xi0^2/2)/24, i.e. when ``margin`` is positive.
    """

    kind: str
    e_R: float
    threshold: float
    margin: float

    @property
    def is_bound(self) -> bool:
        return self.kind == BOUND

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "e_R": self.e_R,
            "threshold": self.threshold,
            "margin": self.margin,
        }


def classify_boundness(ctx: PropagationContext) -> BoundnessReport:
    """Analytic escape test; no integration involved."""
    e_R = ctx.xi.wctx.e_R.real
    threshold = ctx.xi.poly.deriv2(ctx.xi.s0) / 24.0
    margin = e_R - threshold
    return BoundnessReport(
        kind=BOUND if margin > 0.0 else UNBOUND,
        e_R=e_R, threshold=threshold, margin=margin,
    )


def oracle_escape_detected(
    state: CartesianState,
    model: StarkModel,
    radius_factor: float = 1e3,
    horizon_dyn_times: float = 1e4,
    cfg: IntegratorConfig | None = None,
) -> bool:
    """Escape check by direct integration: |r| exceeds ``radius_factor * r0``
    within ``horizon_dyn_times`` initial dynamical times."""
    if cfg is None:
        cfg = IntegratorConfig(rel_tol=1e-9, abs_tol=1e-11, max_steps=20_000_000)
    t_end = horizon_dyn_times * dynamical_time(state, model)
    traj = integrate_cartesian(
        state, model, t_end,
        cfg,
        t_eval=np.array([0.0, t_end]),
        escape_radius=radius_factor * state.radius,
    )
    return traj.escaped


def asymptotic_azimuth(ctx: PropagationContext) -> float:
    """Limiting azimuth of an escaping trajectory, in (-pi, pi].

    xi and t blow up at the first real zero of the denominator
    wp(tau - tau_xi) - f''(s_r)/24 after tau = 0; the azimuth stays finite
    there and fixes the plane of the asymptotic parabola.  The zero is a
    tangency (the real-axis minimum of wp), so it is located by bisecting
    wp' over one real period.
    """
    if ctx.bound:
        raise NotUnbound("trajectory is bound; no asymptote exists")
    coord = ctx.xi
    wctx = coord.wctx

    def dwp(tau: float) -> float:
        return wz.wp_prime(tau - coord.tau_peri, wctx).real

    eps_b = 1e-9 * wctx.omega_R
    lo = coord.tau_peri + eps_b
    hi = coord.tau_peri + 2.0 * wctx.omega_R - eps_b
    flo = dwp(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = dwp(mid)
        if flo * fm <= 0.0:
            hi = mid
        else:
            lo = mid
            flo = fm
        if hi - lo < 1e-13 * wctx.omega_R:
            break
    tau_star = 0.5 * (lo + hi)
    den = wz.wp(tau_star - coord.tau_peri, wctx).real - coord.e_match
    if abs(den) > 1e-6 * max(1.0, abs(coord.e_match)):
        raise SearchFailed("failed to localise the escape pole", residual=den)
    val = phi(tau_star, ctx)
    return math.remainder(val, 2.0 * math.pi) if abs(val) > math.pi else val


# ---------------------------------------------------------------------------
# periods
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PeriodPair:
    """Fictitious-time periods of the two separated coordinates."""

    T_xi: float
    T_eta: float

    @property
    def ratio(self) -> float:
        return self.T_xi / self.T_eta


def real_periods(ctx: PropagationContext) -> PeriodPair:
    """2 omega_R of each coordinate lattice (xi branch requires boundness)."""
    if not ctx.bound:
        raise NotBound("xi is unbound; it has no real period")
    return PeriodPair(T_xi=ctx.xi.period_tau, T_eta=ctx.eta.period_tau)


# ---------------------------------------------------------------------------
# search machinery
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SearchBox:
    """Bounds of the seed space: position offset z, cylindrical radius rho,
    tangential-speed factor relative to circular speed, field strength."""

    z: tuple[float, float] = (-0.6, 0.9)
    rho: tuple[float, float] = (0.35, 1.6)
    vscale: tuple[float, float] = (0.55, 1.45)
    eps: tuple[float, float] = (1e-3, 0.75)


@dataclass(frozen=True)
class SearchConfig:
    seed: int = 0
    lines: int = 200
    eps_grid: int = 28
    ratio_tol: float = 1e-9
    closure_tol: float = 1e-4
    max_evaluations: int = 200_000
    polish_iterations: int = 80


@dataclass(frozen=True)
class SearchResult:
    state: CartesianState
    model: StarkModel
    residual: float
    target: tuple
    iterations: int
    ratio_error: float
    closure_error: float | None = None

    def to_dict(self) -> dict:
        out = {
            "state": {"r": list(self.state.r), "v": list(self.state.v)},
            "model": {"mu": self.model.mu, "eps": self.model.eps},
            "residual": self.residual,
            "target": list(self.target),
            "iterations": self.iterations,
            "ratio_error": self.ratio_error,
        }
        if self.closure_error is not None:
            out["closure_error"] = self.closure_error
        return out


class _Budget:
    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0

    def tick(self, n: int = 1) -> bool:
        self.used += n
        return self.used <= self.limit


def _seed_state(z: float, rho: float, vscale: float, mu: float) -> CartesianState:
    """Tangential launch on the x-z plane; p_phi > 0 by construction."""
    r = math.hypot(rho, z)
    v_t = vscale * math.sqrt(mu / r)
    return CartesianState(r=(rho, 0.0, z), v=(0.0, v_t, 0.0))


def _period_gap(z, rho, vscale, eps, n, m, mu, budget) -> float | None:
    """n omega_xi - m omega_eta for a candidate, None when invalid/unbound."""
    if not budget.tick():
        return None
    try:
        ctx = build_propagation(_seed_state(z, rho, vscale, mu), StarkModel(mu, eps))
    except Exception:
        return None
    if not ctx.bound:
        return None
    return n * ctx.xi.wctx.omega_R - m * ctx.eta.wctx.omega_R


def _illinois(f, a, b, fa, fb, tol, max_iter):
    """Regula falsi with the Illinois modification; f(a) f(b) < 0 required."""
    c, fc = a, fa
    for _ in range(max_iter):
        c = b - fb * (b - a) / (fb - fa)
        if not (min(a, b) < c < max(a, b)):
            c = 0.5 * (a + b)
        fc = f(c)
        if fc is None:
            return None
        if abs(fc) == 0.0 or abs(b - a) < tol:
            return c
        if fa * fc < 0.0:
            b, fb = c, fc
        else:
            a, fa = c, fc
            fb *= 0.5
        if fa * fb > 0.0:
            return None
    return c


def quasi_periodic_residual(params, n: int, m: int, mu: float = 1.0) -> float:
    """(n omega_xi - m omega_eta)^2 for a decoded candidate.

    ``params`` = (z, rho, vscale, eps).  Vanishes exactly on the
    commensurability manifold omega_xi / omega_eta = m / n; decode failures
    and unbound candidates return a large finite penalty so derivative-free
    minimisers can traverse them.
    """
    z, rho, vscale, eps = (float(p) for p in params)
    if rho <= 0.0 or eps <= 0.0 or vscale <= 0.0:
        return 1e30
    try:
        ctx = build_propagation(_seed_state(z, rho, vscale, mu), StarkModel(mu, eps))
    except Exception:
        return 1e30
    if not ctx.bound:
        return 1e30
    return (n * ctx.xi.wctx.omega_R - m * ctx.eta.wctx.omega_R) ** 2


def _solve_commensurate_eps(z, rho, vscale, n, m, box, cfg, budget, mu):
    """eps with n omega_xi = m omega_eta along one seed line, or None."""
    eps_lo, eps_hi = box.eps
    grid = np.geomspace(eps_lo, eps_hi, cfg.eps_grid)
    prev_eps, prev_gap = None, None
    for eps in grid:
        gap = _period_gap(z, rho, vscale, float(eps), n, m, mu, budget)
        if gap is None:
            prev_eps, prev_gap = None, None
            continue
        if prev_gap is not None and prev_gap * gap < 0.0:
            root = _illinois(
                lambda e: _period_gap(z, rho, vscale, e, n, m, mu, budget),
                prev_eps, float(eps), prev_gap, gap,
                tol=1e-15 * float(eps), max_iter=cfg.polish_iterations,
            )
            if root is not None:
                return root
        prev_eps, prev_gap = float(eps), gap
    return None


def find_quasi_periodic(
    n: int,
    m: int,
    box: SearchBox = SearchBox(),
    config: SearchConfig = SearchConfig(),
    mu: float = 1.0,
) -> SearchResult:
    """Search for a bound orbit whose coordinate periods satisfy
    omega_xi / omega_eta = m / n (coprime n, m).

    Seed lines (z, rho, vscale) are drawn from ``box``; along each line the
    commensurability gap is a smooth function of the field strength, so a
    sign change on a geometric eps grid pins the root to machine precision.
    """
    _require_coprime(n, m)
    rng = np.random.default_rng(config.seed)
    budget = _Budget(config.max_evaluations)
    best: SearchResult | None = None
    for _ in range(config.lines):
        if budget.used >= budget.limit:
            break
        z = rng.uniform(*box.z)
        rho = rng.uniform(*box.rho)
        vscale = rng.uniform(*box.vscale)
        eps = _solve_commensurate_eps(z, rho, vscale, n, m, box, config, budget, mu)
        if eps is None:
            continue
        state = _seed_state(z, rho, vscale, mu)
        model = StarkModel(mu, eps)
        ctx = build_propagation(state, model)
        ratio_err = abs(ctx.xi.wctx.omega_R / ctx.eta.wctx.omega_R - m / n)
        resid = (n * ctx.xi.wctx.omega_R - m * ctx.eta.wctx.omega_R) ** 2
        cand = SearchResult(
            state=state, model=model, residual=resid, target=(n, m),
            iterations=budget.used, ratio_error=ratio_err,
        )
        if best is None or cand.ratio_error < best.ratio_error:
            best = cand
        if ratio_err <= config.ratio_tol:
            return cand
    if best is not None and best.ratio_error <= 10 * config.ratio_tol:
        return best
    raise SearchFailed(
        "no commensurable orbit found within budget",
        n=n, m=m, evaluations=budget.used,
        best=None if best is None else best.ratio_error,
    )


def delta_phi_over_period(ctx: PropagationContext, n: int) -> float:
    """Azimuth advance over one commensurate period T = 2 n omega_xi."""
    T = 2.0 * n * ctx.xi.wctx.omega_R
    return phi(T, ctx) - phi(0.0, ctx)


def rotation_mismatch(ctx: PropagationContext, n: int, p: int) -> float:
    """Distance of p times the per-period rotation from a whole turn.

    Over one commensurate period T the trajectory repeats rotated about z by
    delta_phi(T); the orbit closes after p periods exactly when p rotations
    add up to whole turns, i.e. p delta_phi(T) = 0 mod 2 pi.  The signed
    circle distance is divided by p so the scale matches the rotation itself.
    """
    rot = p * delta_phi_over_period(ctx, n)
    return math.remainder(rot, 2.0 * math.pi) / p


def rotation_numerator(ctx: PropagationContext, n: int, p: int) -> int:
    """q in rotation = 2 pi q / p (mod full turns); gcd(q, p) = 1 makes p T
    the minimal closed period (a p-fold symmetric figure)."""
    rot = delta_phi_over_period(ctx, n)
    return round(p * rot / (2.0 * math.pi)) % p


def _closure_error(ctx: PropagationContext, n: int, p: int) -> float:
    """Relative cartesian mismatch after the full closed period p T."""
    from .propagation import propagate_at

    T_closed = 2.0 * p * n * ctx.xi.wctx.omega_R
    t_period = time_of(T_closed, ctx)
    _, state = propagate_at(ctx, t_period)
    r0, v0 = ctx.state0.arrays()
    r1, v1 = state.arrays()
    scale = max(float(np.linalg.norm(r0)), float(np.linalg.norm(v0)))
    return float(
        max(np.linalg.norm(r1 - r0), np.linalg.norm(v1 - v0)) / scale
    )


def find_periodic(
    n: int,
    m: int,
    p: int,
    box: SearchBox = SearchBox(),
    config: SearchConfig = SearchConfig(),
    mu: float = 1.0,
) -> SearchResult:
    """Search for a closed orbit: commensurable coordinate periods plus a
    per-period rotation that is a primitive p-th fraction of the circle.

    Along each random (z, rho) line the field strength is slaved to the
    commensurability condition n omega_xi = m omega_eta, leaving the rotation
    mismatch as a scalar function of the speed factor; a sign change in it is
    refined to machine precision.  Rotations 2 pi q / p with gcd(q, p) = 1
    close the trajectory after p periods into a p-fold rotationally symmetric
    figure; non-primitive crossings (orbits that already close after fewer
    periods) are rejected.  The result is validated by propagating the full
    closed period and measuring cartesian closure.
    """
    _require_coprime(n, m)
    rng = np.random.default_rng(config.seed)
    budget = _Budget(config.max_evaluations)
    best: SearchResult | None = None

    def mismatch(z, rho, vscale):
        eps = _solve_commensurate_eps(z, rho, vscale, n, m, box, config, budget, mu)
        if eps is None:
            return None, None
        try:
            ctx = build_propagation(_seed_state(z, rho, vscale, mu), StarkModel(mu, eps))
            return rotation_mismatch(ctx, n, p), eps
        except Exception:
            return None, None

    for _ in range(config.lines):
        if budget.used >= budget.limit:
            break
        z = rng.uniform(*box.z)
        rho = rng.uniform(*box.rho)
        vgrid = np.linspace(box.vscale[0], box.vscale[1], 14)
        prev_v, prev_w = None, None
        for v in vgrid:
            w, _ = mismatch(z, rho, float(v))
            if w is None:
                prev_v, prev_w = None, None
                continue
            # a genuine zero crossing, not a wrap of the circle distance
            if prev_w is not None and prev_w * w < 0.0 and abs(prev_w - w) < math.pi:
                vroot = _illinois(
                    lambda vv: mismatch(z, rho, vv)[0],
                    prev_v, float(v), prev_w, w,
                    tol=1e-14, max_iter=config.polish_iterations,
                )
                if vroot is None:
                    prev_v, prev_w = float(v), w
                    continue
                wfin, eps = mismatch(z, rho, vroot)
                if wfin is None:
                    prev_v, prev_w = float(v), w
                    continue
                state = _seed_state(z, rho, vroot, mu)
                model = StarkModel(mu, eps)
                ctx = build_propagation(state, model)
                if math.gcd(rotation_numerator(ctx, n, p), p) != 1:
                    prev_v, prev_w = float(v), w
                    continue  # closes after fewer than p periods
                ratio_err = abs(ctx.xi.wctx.omega_R / ctx.eta.wctx.omega_R - m / n)
                closure = _closure_error(ctx, n, p)
                resid = (n * ctx.xi.wctx.omega_R - m * ctx.eta.wctx.omega_R) ** 2 + wfin**2
                cand = SearchResult(
                    state=state, model=model, residual=resid, target=(n, m, p),
                    iterations=budget.used, ratio_error=ratio_err,
                    closure_error=closure,
                )
                if best is None or cand.closure_error < best.closure_error:
                    best = cand
                if closure <= config.closure_tol:
                    return cand
            prev_v, prev_w = float(v), w
    if best is not None and best.closure_error <= 10 * config.closure_tol:
        return best
    raise SearchFailed(
        "no closed orbit found within budget",
        n=n, m=m, p=p, evaluations=budget.used,
        best=None if best is None else best.closure_error,
    )


def _require_coprime(n: int, m: int):
    if n <= 0 or m <= 0 or math.gcd(n, m) != 1:
        raise ValueError(f"(n, m) must be coprime positive integers, got {(n, m)}")


# ---------------------------------------------------------------------------
# equilibria and the displaced-circular family
# ---------------------------------------------------------------------------

def stationary_equilibrium(model: StarkModel) -> float:
    """Height z* = sqrt(mu/eps) where gravity balances the field."""
    return math.sqrt(model.mu / model.eps)


def displaced_circular_conditions(z: float, model: StarkModel) -> CartesianState:
    """Initial conditions of the displaced circular orbit through height z.

    The orbit is a circle parallel to the x-y plane traversed at constant
    angular velocity; it exists for 0 < z < sqrt(mu/eps).  Both radial cubics
    acquire repeated roots there, so the closed-form propagator flags these
    states as degenerate and :func:`degenerate_propagate` takes over.
    """
    z_star = stationary_equilibrium(model)
    if not (0.0 < z < z_star):
        raise BeyondEquilibriumLimit(
            "displaced circular orbits require 0 < z < sqrt(mu/eps)",
            z=z, z_star=z_star,
        )
    rad = (z * model.mu / model.eps) ** (2.0 / 3.0) - z * z
    x = math.sqrt(rad)
    vy = math.sqrt(model.eps / z * rad)
    return CartesianState(r=(x, 0.0, z), v=(0.0, vy, 0.0))


def degenerate_propagate(state0: CartesianState, model: StarkModel, t: float) -> CartesianState:
    """Constant-radius solution for repeated-root (displaced-circular) states.

    xi and eta are frozen at their initial values, the azimuth advances
    linearly in fictitious time, and t = (xi^2 + eta^2) tau integrates
    trivially.  Raises ``Degenerate`` with diagnostics when the state is not
    actually on the repeated-root family.
    """
    ps = cartesian_to_parabolic(state0)
    pscale = max(1.0, abs(ps.p_phi))
    if max(abs(ps.p_xi), abs(ps.p_eta)) > 1e-8 * pscale:
        raise Degenerate(
            "state carries radial momentum; not a displaced circular orbit",
            p_xi=ps.p_xi, p_eta=ps.p_eta,
        )
    xi2, eta2 = ps.xi**2, ps.eta**2
    tau = t / (xi2 + eta2)
    phi_t = ps.phi + ps.p_phi * (1.0 / xi2 + 1.0 / eta2) * tau
    return parabolic_to_cartesian(
        ParabolicState(
            xi=ps.xi, eta=ps.eta, phi=phi_t,
            p_xi=0.0, p_eta=0.0, p_phi=ps.p_phi,
        )
    )
