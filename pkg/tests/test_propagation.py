"""Closed-form propagation vs independent oracles."""

import math

import numpy as np
import pytest

from starkprop import weierstrass as wz
from starkprop.errors import (
    BranchSelectionFailure,
    Degenerate,
    EscapedBeforeT,
    NoReachableRoot,
)
from starkprop.oracle import IntegratorConfig, integrate_cartesian, integrate_parabolic_fictitious
from starkprop.propagation import (
    CartesianState,
    CubicPoly,
    StarkModel,
    build_propagation,
    cartesian_to_parabolic,
    context_summary,
    eta_squared,
    motion_constants,
    parabolic_at,
    pericentre_time,
    phi,
    propagate,
    propagate_at,
    reachable_root,
    sample_trajectory,
    tau_of,
    time_of,
    xi_squared,
    xi_squared_general,
)

from conftest import random_bound_cases
from oracles import tau_quadrature

TIGHT = IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14)


# ------------------------------------------------------------ reachable root

def test_reachable_root_lobe():
    # downward cubic with roots {0.2, 0.5, 1.0}: admissible on [0.5, 1.0]
    a, b, c = 0.2, 0.5, 1.0
    poly = CubicPoly(a1=-1.0, a2=(a + b + c) * 4.0 / 6.0, a3=-(a * b + a * c + b * c),
                     a4=4.0 * a * b * c)
    assert poly(a) == pytest.approx(0.0, abs=1e-14)
    assert poly(0.7) > 0.0
    assert reachable_root(poly, 0.7, -1.0) == pytest.approx(0.5, rel=1e-12)


def test_reachable_root_arm():
    # upward cubic 4(s - 0.3)((s - 0.3)^2 + 0.25): single real root, arm s >= 0.3
    rts = [complex(0.3, 0.0), complex(0.3, 0.5), complex(0.3, -0.5)]
    s1 = sum(rts)
    s2 = rts[0] * rts[1] + rts[0] * rts[2] + rts[1] * rts[2]
    s3 = rts[0] * rts[1] * rts[2]
    poly = CubicPoly(a1=1.0, a2=(-4.0 * s1 / 6.0).real, a3=s2.real, a4=(-4.0 * s3).real)
    assert poly(0.3) == pytest.approx(0.0, abs=1e-14)
    assert poly(2.0) > 0.0
    assert reachable_root(poly, 2.0, 1.0) == pytest.approx(0.3, rel=1e-9)


def test_reachable_root_sign_scan_oracle(bound_ctx):
    # brute-force sign scan between s0 and the reported root
    for coord in (bound_ctx.xi, bound_ctx.eta):
        lo, hi = sorted((coord.s_root, coord.s0))
        ss = np.linspace(lo, hi, 2001)
        vals = np.array([coord.poly(s) for s in ss])
        assert vals.min() > -1e-9 * coord.poly.scale(hi)
        # no real root strictly inside the span
        inside = [r for r in coord.poly.real_roots() if lo + 1e-10 < r < hi - 1e-10]
        assert not inside


def test_reachable_root_rejects_outside():
    poly = CubicPoly(a1=1.0, a2=0.0, a3=-1.0, a4=-1.0)
    with pytest.raises(NoReachableRoot):
        s_bad = -5.0
        reachable_root(poly, s_bad, 1.0)


# ------------------------------------------------------------ pericentre time

def test_pericentre_time_zero_at_root(bound_ctx):
    for coord in (bound_ctx.xi, bound_ctx.eta):
        tp = pericentre_time(coord.poly, coord.s_root, coord.s_root, 0.0, coord.wctx)
        assert tp == 0.0


def test_pericentre_sign_convention(bound_ctx):
    # root lies in the future when the coordinate is initially shrinking
    for coord in (bound_ctx.xi, bound_ctx.eta):
        if coord.p0 != 0.0:
            assert math.copysign(1.0, coord.tau_peri) == -math.copysign(1.0, coord.p0)


def test_pericentre_time_vs_quadrature(bound_ctx):
    for coord in (bound_ctx.xi, bound_ctx.eta):
        ref = tau_quadrature(coord.poly, coord.s0, coord.s_root)
        assert abs(abs(coord.tau_peri) - ref) < 1e-9


def test_pericentre_time_vs_quadrature_unbound(unbound_ctx):
    coord = unbound_ctx.xi
    ref = tau_quadrature(coord.poly, coord.s0, coord.s_root)
    assert abs(abs(coord.tau_peri) - ref) < 1e-9


def test_branch_selection_failure_surfaces(bound_ctx):
    coord = bound_ctx.xi
    with pytest.raises(BranchSelectionFailure):
        # impossible initial point: claims to sit at s0 far outside the lobe
        pericentre_time(coord.poly, coord.s_root, coord.s_root + 123.0, 1.0, coord.wctx)


# ------------------------------------------------------------ closed forms

def test_initial_conditions_reproduced(bound_ctx):
    ps0 = bound_ctx.para0
    assert xi_squared(0.0, bound_ctx) == pytest.approx(ps0.xi**2, rel=1e-9)
    assert eta_squared(0.0, bound_ctx) == pytest.approx(ps0.eta**2, rel=1e-9)
    assert phi(0.0, bound_ctx) == pytest.approx(ps0.phi, abs=1e-12)
    assert time_of(0.0, bound_ctx) == 0.0


def test_value_at_pericentre_is_root(bound_ctx):
    for coord, f in ((bound_ctx.xi, xi_squared), (bound_ctx.eta, eta_squared)):
        assert f(coord.tau_peri, bound_ctx) == pytest.approx(2.0 * coord.s_root, rel=1e-10)


def test_xi2_periodicity(bound_ctx):
    rng = np.random.default_rng(4)
    for coord, f in ((bound_ctx.xi, xi_squared), (bound_ctx.eta, eta_squared)):
        T = coord.period_tau
        for tau in rng.uniform(-5, 5, 20):
            assert f(tau + T, bound_ctx) == pytest.approx(f(tau, bound_ctx), rel=1e-9)


def test_fictitious_time_oracle(bound_ctx, bound_model):
    """Primary oracle: direct integration of the separated system."""
    taus = np.linspace(0.0, 12.0, 101)
    sol = integrate_parabolic_fictitious(
        bound_ctx.para0, bound_ctx.constants, bound_model, 12.0, TIGHT, tau_eval=taus
    )
    for k, tau in enumerate(taus):
        tau = float(tau)
        assert xi_squared(tau, bound_ctx) == pytest.approx(sol["xi2"][k], abs=2e-9, rel=1e-9)
        assert eta_squared(tau, bound_ctx) == pytest.approx(sol["eta2"][k], abs=2e-9, rel=1e-9)
        assert phi(tau, bound_ctx) == pytest.approx(sol["phi"][k], abs=2e-9)
        assert time_of(tau, bound_ctx) == pytest.approx(sol["t"][k], abs=2e-9, rel=1e-9)


def test_momentum_radicand_invariant(bound_ctx):
    # p_xi^2 xi^2 = eps xi^6 + 2h xi^4 + 2 alpha1 xi^2 - p_phi^2 along the solution
    mc = bound_ctx.constants
    eps = bound_ctx.model.eps
    rng = np.random.default_rng(5)
    for tau in rng.uniform(-6, 6, 40):
        ps = parabolic_at(tau, bound_ctx)
        xi2 = ps.xi**2
        lhs = (ps.p_xi * ps.xi) ** 2
        rhs = eps * xi2**3 + 2 * mc.h * xi2**2 + 2 * mc.alpha1 * xi2 - mc.p_phi**2
        assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-10)
        eta2 = ps.eta**2
        lhs = (ps.p_eta * ps.eta) ** 2
        rhs = -eps * eta2**3 + 2 * mc.h * eta2**2 + 2 * mc.alpha2 * eta2 - mc.p_phi**2
        assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-10)


def test_general_formula_matches_root_anchored(bound_ctx):
    """Anchor the general form at a non-root point of the same trajectory."""
    rng = np.random.default_rng(6)
    coord = bound_ctx.xi
    for tau_ref in (0.9, 2.3):
        s_ref = coord.s_of(tau_ref)
        p_ref = coord.dsquared_dtau(tau_ref) / 2.0  # ds/dtau at the new anchor
        for dtau in rng.uniform(-2, 2, 10):
            got = xi_squared_general(dtau, s_ref, p_ref, coord.poly, coord.wctx)
            want = xi_squared(tau_ref + dtau, bound_ctx)
            assert got == pytest.approx(want, rel=1e-8, abs=1e-9)


def test_general_formula_at_zero(bound_ctx):
    coord = bound_ctx.xi
    assert xi_squared_general(0.0, coord.s0, coord.p0, coord.poly, coord.wctx) \
        == pytest.approx(2.0 * coord.s0, rel=1e-12)


def test_general_formula_vs_fictitious_ode(bound_ctx, bound_model):
    taus = np.linspace(0.0, 6.0, 31)
    sol = integrate_parabolic_fictitious(
        bound_ctx.para0, bound_ctx.constants, bound_model, 6.0, TIGHT, tau_eval=taus
    )
    coord = bound_ctx.xi
    for k, tau in enumerate(taus):
        got = xi_squared_general(float(tau), coord.s0, coord.p0, coord.poly, coord.wctx)
        assert got == pytest.approx(sol["xi2"][k], rel=1e-8, abs=1e-8)


# ------------------------------------------------------------ azimuth

def test_phi_derivative_consistency(bound_ctx):
    rng = np.random.default_rng(7)
    pphi = bound_ctx.constants.p_phi
    for tau in rng.uniform(-8, 8, 50):
        h = 1e-6
        fd = (phi(tau + h, bound_ctx) - phi(tau - h, bound_ctx)) / (2 * h)
        expect = pphi * (1.0 / xi_squared(tau, bound_ctx) + 1.0 / eta_squared(tau, bound_ctx))
        assert fd == pytest.approx(expect, rel=1e-6)


def test_phi_monotone_for_positive_p_phi(bound_ctx):
    assert bound_ctx.constants.p_phi > 0
    taus = np.linspace(-4, 8, 400)
    vals = [phi(float(t), bound_ctx) for t in taus]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_phi_continuity_across_many_cells(bound_ctx):
    T = max(bound_ctx.xi.period_tau, bound_ctx.eta.period_tau)
    taus = np.linspace(-3.2 * T, 3.2 * T, 6001)
    vals = np.array([phi(float(t), bound_ctx) for t in taus])
    dtau = taus[1] - taus[0]
    deriv = bound_ctx.constants.p_phi * np.array(
        [1.0 / xi_squared(float(t), bound_ctx) + 1.0 / eta_squared(float(t), bound_ctx)
         for t in taus[:-1]]
    )
    jumps = np.abs(np.diff(vals))
    assert np.all(jumps <= 10.0 * np.abs(deriv) * dtau + 1e-9)


# ------------------------------------------------------------ time equation

def test_time_derivative_consistency(bound_ctx):
    rng = np.random.default_rng(8)
    for tau in rng.uniform(-6, 6, 30):
        h = 1e-6
        fd = (time_of(tau + h, bound_ctx) - time_of(tau - h, bound_ctx)) / (2 * h)
        expect = xi_squared(tau, bound_ctx) + eta_squared(tau, bound_ctx)
        assert fd == pytest.approx(expect, rel=1e-6)


def test_time_vs_quadrature(bound_ctx):
    from scipy.integrate import quad

    for tau_end in (0.7, 3.1, -2.2):
        ref, err = quad(
            lambda u: xi_squared(u, bound_ctx) + eta_squared(u, bound_ctx),
            0.0, tau_end, limit=300, epsabs=1e-12, epsrel=1e-12,
        )
        assert time_of(tau_end, bound_ctx) == pytest.approx(ref, abs=1e-9)


def test_tau_of_round_trip(bound_ctx):
    rng = np.random.default_rng(9)
    for tau in rng.uniform(-10, 10, 100):
        t = time_of(tau, bound_ctx)
        assert tau_of(t, bound_ctx) == pytest.approx(tau, abs=1e-10 * max(1, abs(tau)))
    assert tau_of(0.0, bound_ctx) == 0.0


def test_tau_of_monotone(bound_ctx):
    ts = np.linspace(-20.0, 40.0, 101)
    taus = [tau_of(float(t), bound_ctx) for t in ts]
    assert all(b > a for a, b in zip(taus, taus[1:]))


# ------------------------------------------------------------ full pipeline

def test_propagate_identity_at_zero(bound_state, bound_model):
    out = propagate(bound_state, bound_model, 0.0)
    assert np.allclose(out.r, bound_state.r, rtol=1e-10)
    assert np.allclose(out.v, bound_state.v, rtol=1e-10)


def test_propagate_vs_cartesian_oracle(bound_ctx, bound_state, bound_model):
    t_end = 3.0 * time_of(3 * bound_ctx.xi.period_tau, bound_ctx) / 3.0
    ts = np.linspace(0.0, t_end, 50)
    traj = integrate_cartesian(bound_state, bound_model, float(t_end), TIGHT, t_eval=ts)
    for k, t in enumerate(ts):
        _, state = propagate_at(bound_ctx, float(t))
        ref = traj.states[k]
        err = np.linalg.norm(np.asarray(state.r) - ref[:3]) / np.linalg.norm(ref[:3])
        assert err < 1e-7


def test_propagate_conservation(bound_ctx, bound_model):
    mc0 = bound_ctx.constants
    for t in np.linspace(0.0, 25.0, 11):
        _, state = propagate_at(bound_ctx, float(t))
        mc = motion_constants(cartesian_to_parabolic(state), bound_model)
        assert mc.h == pytest.approx(mc0.h, abs=1e-9)
        assert mc.alpha1 == pytest.approx(mc0.alpha1, abs=1e-9)
        assert mc.alpha2 == pytest.approx(mc0.alpha2, abs=1e-9)
        assert mc.p_phi == pytest.approx(mc0.p_phi, abs=1e-12)


def test_propagate_five_periods_pointwise(bound_ctx, bound_state, bound_model):
    t_end = time_of(5.0 * bound_ctx.xi.period_tau, bound_ctx)
    ts = np.linspace(0.0, t_end, 60)
    traj = integrate_cartesian(bound_state, bound_model, float(t_end), TIGHT, t_eval=ts)
    for k, t in enumerate(ts):
        _, state = propagate_at(bound_ctx, float(t))
        ref = traj.states[k]
        err = np.linalg.norm(np.asarray(state.r) - ref[:3])
        assert err < 1e-7 * np.linalg.norm(ref[:3])


def test_propagate_many_random_bound():
    for state, model in random_bound_cases(4, seed=11):
        ctx = build_propagation(state, model)
        t_probe = time_of(1.5 * ctx.xi.period_tau, ctx)
        traj = integrate_cartesian(state, model, float(t_probe), TIGHT,
                                   t_eval=np.array([0.0, t_probe]))
        _, mine = propagate_at(ctx, float(t_probe))
        ref = traj.states[-1]
        err = np.linalg.norm(np.asarray(mine.r) - ref[:3]) / np.linalg.norm(ref[:3])
        assert err < 1e-7


# ------------------------------------------------------------ unbound

def test_unbound_time_diverges(unbound_ctx):
    tau_star = unbound_ctx.tau_escape
    t1 = time_of(tau_star - 1e-2, unbound_ctx)
    t2 = time_of(tau_star - 1e-4, unbound_ctx)
    assert t2 > 10.0 * t1


def test_unbound_xi2_pole(unbound_ctx):
    tau_star = unbound_ctx.tau_escape
    assert xi_squared(tau_star - 1e-7, unbound_ctx) > 1e10
    # eta stays finite through the xi pole
    assert eta_squared(tau_star, unbound_ctx) < 10.0


def test_unbound_epoch_guard(unbound_ctx):
    # beyond what the resolvable tau window can represent
    with pytest.raises(EscapedBeforeT):
        tau_of(1e25, unbound_ctx)
    with pytest.raises(EscapedBeforeT):
        tau_of(-1e25, unbound_ctx)


def test_unbound_matches_oracle(unbound_ctx, bound_state, unbound_model):
    ts = np.linspace(0.0, 8.0, 9)
    traj = integrate_cartesian(bound_state, unbound_model, 8.0, TIGHT, t_eval=ts)
    for k, t in enumerate(ts):
        _, state = propagate_at(unbound_ctx, float(t))
        ref = traj.states[k]
        err = np.linalg.norm(np.asarray(state.r) - ref[:3]) / np.linalg.norm(ref[:3])
        assert err < 1e-7


# ------------------------------------------------------------ misc

def test_degenerate_detection():
    from starkprop.analysis import displaced_circular_conditions

    model = StarkModel(mu=1.0, eps=0.1)
    state = displaced_circular_conditions(1.0, model)
    with pytest.raises(Degenerate):
        build_propagation(state, model)


def test_characteristic_root_consistency(bound_ctx):
    # f''(s_r)/24 solves 4 t^3 - g2 t - g3 = 0 for the same coordinate
    for coord in (bound_ctx.xi, bound_ctx.eta):
        g2, g3 = coord.poly.invariants()
        e = coord.e_match
        assert abs(4 * e**3 - g2 * e - g3) < 1e-9 * max(1.0, abs(e) ** 3)


def test_sample_trajectory_and_summary(bound_ctx):
    rows = sample_trajectory(bound_ctx, np.linspace(0.0, 5.0, 6))
    assert len(rows) == 6
    assert rows[0]["t"] == 0.0
    assert rows[0]["x"] == pytest.approx(bound_ctx.state0.r[0], rel=1e-10)
    summ = context_summary(bound_ctx)
    assert summ["bound"] is True
    assert summ["xi"]["period_tau"] == pytest.approx(bound_ctx.xi.period_tau)
    import json

    json.dumps(summ)  # must be JSON-ready
