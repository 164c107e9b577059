"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s``.  Wall-clock budgets are
asserted only on the accelerated (numba) backend; the pure-Python fallback
computes identical numbers more slowly.
"""

import math
import time

import numpy as np
import pytest

from starkprop import weierstrass as wz
from starkprop.analysis import (
    SearchConfig,
    classify_boundness,
    displaced_circular_conditions,
    find_periodic,
    find_quasi_periodic,
    oracle_escape_detected,
    stationary_equilibrium,
)
from starkprop.backend import using_numba
from starkprop.oracle import (
    IntegratorConfig,
    integrate_cartesian,
    integrate_parabolic_fictitious,
)
from starkprop.propagation import (
    CartesianState,
    StarkModel,
    build_propagation,
    cartesian_to_parabolic,
    characteristic_cubic,
    eta_squared,
    motion_constants,
    phi,
    propagate_at,
    tau_of,
    time_of,
    xi_squared,
)

from conftest import random_bound_cases

TIGHT = IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14)


def _report(num, ok, detail, elapsed=None):
    stamp = f" [{elapsed:.1f}s]" if elapsed is not None else ""
    print(f"\n{'PASS' if ok else 'FAIL'} criterion {num}: {detail}{stamp}")
    assert ok, f"criterion {num}: {detail}"


def _budget_ok(elapsed, budget):
    return (elapsed < budget) if using_numba() else True


# -------------------------------------------------------------------------

def test_criterion_1_weierstrass_identity_suite():
    t0 = time.time()
    cases = [(4.0, 1.0), (1.0, 1.0), (4.0, -1.0), (1.0, -1.0)]  # d>0, d<0, folds
    worst = {"ode": 0.0, "halfp": 0.0, "legendre": 0.0, "homog": 0.0, "sigma": 0.0}
    rng = np.random.default_rng(101)
    for g2, g3 in cases:
        ctx = wz.context_from_invariants(g2, g3)
        for _ in range(60):
            z = complex(rng.uniform(-3, 3), rng.uniform(-3, 3))
            if ctx.lattice_distance(z) < 0.2:
                continue
            pv = wz.wp(z, ctx)
            dv = wz.wp_prime(z, ctx)
            worst["ode"] = max(
                worst["ode"],
                abs(dv * dv - (4 * pv**3 - g2 * pv - g3)) / max(1.0, abs(pv) ** 3),
            )
        for w_i, e_i in zip(ctx.half_periods, ctx.roots):
            worst["halfp"] = max(
                worst["halfp"], abs(wz.wp(w_i, ctx) - e_i) / max(1.0, abs(e_i))
            )
        eta_w = wz.zeta(ctx.omega, ctx)
        eta_p = wz.zeta(ctx.omega_prime, ctx)
        worst["legendre"] = max(
            worst["legendre"],
            abs(eta_w * ctx.omega_prime - eta_p * ctx.omega - 1j * math.pi / 2),
        )
        if g3 < 0:
            flip = wz.context_from_invariants(g2, -g3)
            for _ in range(20):
                z = complex(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5))
                if ctx.lattice_distance(z) < 0.2:
                    continue
                worst["homog"] = max(
                    worst["homog"],
                    abs(wz.wp(z, ctx) + wz.wp(1j * z, flip))
                    / max(1.0, abs(wz.wp(z, ctx))),
                )
        ew, epp = wz.zeta(ctx.omega, ctx), wz.zeta(ctx.omega_prime, ctx)
        for _ in range(10):
            z = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
            M, N = int(rng.integers(-2, 3)), int(rng.integers(-2, 3))
            shift = 2.0 * M * ctx.omega + 2.0 * N * ctx.omega_prime
            sign = -1.0 if (M + N + M * N) % 2 else 1.0
            import cmath

            expect = sign * wz.sigma(z, ctx) * cmath.exp(
                (z + M * ctx.omega + N * ctx.omega_prime) * (2 * M * ew + 2 * N * epp)
            )
            got = wz.sigma(z + shift, ctx)
            worst["sigma"] = max(
                worst["sigma"], abs(got - expect) / max(1e-12, abs(expect))
            )
    elapsed = time.time() - t0
    ok = (
        worst["ode"] <= 1e-9
        and worst["halfp"] <= 1e-10
        and worst["legendre"] <= 1e-10
        and worst["homog"] <= 1e-10
        and worst["sigma"] <= 1e-9
        and _budget_ok(elapsed, 10.0)
    )
    _report(
        1, ok,
        "identity suite residuals: "
        + " ".join(f"{k}={v:.1e}" for k, v in worst.items()),
        elapsed,
    )


def test_criterion_2_oracle_equivalence_real_time():
    t0 = time.time()
    cases = random_bound_cases(20, seed=202)
    worst = 0.0
    for state, model in cases:
        ctx = build_propagation(state, model)
        t_end = time_of(3.0 * ctx.xi.period_tau, ctx)
        ts = np.linspace(0.0, t_end, 50)
        traj = integrate_cartesian(state, model, float(t_end), TIGHT, t_eval=ts)
        for k, t in enumerate(ts):
            _, mine = propagate_at(ctx, float(t))
            ref = traj.states[k]
            rel = np.linalg.norm(np.asarray(mine.r) - ref[:3]) / np.linalg.norm(ref[:3])
            worst = max(worst, float(rel))
    elapsed = time.time() - t0
    ok = worst <= 1e-6 and _budget_ok(elapsed, 60.0)
    _report(2, ok, f"20 bound orbits, 50 epochs x 3 xi-periods, "
                   f"max relative position error {worst:.2e} (<= 1e-6)", elapsed)


def test_criterion_3_oracle_equivalence_fictitious_time():
    t0 = time.time()
    worst = 0.0
    for state, model in random_bound_cases(3, seed=303):
        ctx = build_propagation(state, model)
        tau_end = 3.0 * ctx.xi.period_tau
        taus = np.linspace(0.0, tau_end, 100)
        sol = integrate_parabolic_fictitious(
            ctx.para0, ctx.constants, model, float(tau_end), TIGHT, tau_eval=taus
        )
        for k, tau in enumerate(taus):
            tau = float(tau)
            for mine, ref in (
                (xi_squared(tau, ctx), sol["xi2"][k]),
                (eta_squared(tau, ctx), sol["eta2"][k]),
                (phi(tau, ctx), sol["phi"][k]),
                (time_of(tau, ctx), sol["t"][k]),
            ):
                worst = max(worst, abs(mine - ref) / max(1.0, abs(ref)))
    elapsed = time.time() - t0
    ok = worst <= 1e-8 and _budget_ok(elapsed, 30.0)
    _report(3, ok, f"xi^2/eta^2/phi/t vs separated-system integration at 100 "
                   f"samples, worst error {worst:.2e} (<= 1e-8)", elapsed)


def test_criterion_4_conservation():
    t0 = time.time()
    worst_drift = 0.0
    worst_sum = 0.0
    for state, model in random_bound_cases(5, seed=404):
        ctx = build_propagation(state, model)
        mc0 = ctx.constants
        t_end = time_of(4.0 * ctx.xi.period_tau, ctx)
        for t in np.linspace(0.0, t_end, 25):
            _, cart = propagate_at(ctx, float(t))
            mc = motion_constants(cartesian_to_parabolic(cart), model)
            worst_drift = max(
                worst_drift,
                abs(mc.h - mc0.h),
                abs(mc.alpha1 - mc0.alpha1),
                abs(mc.alpha2 - mc0.alpha2),
                abs(mc.p_phi - mc0.p_phi),
            )
            worst_sum = max(worst_sum, abs(mc.alpha1 + mc.alpha2 - 2.0 * model.mu))
    elapsed = time.time() - t0
    ok = worst_drift <= 1e-9 and worst_sum <= 1e-12
    _report(4, ok, f"H/alpha1/alpha2/p_phi drift {worst_drift:.2e} (<= 1e-9), "
                   f"alpha-sum residual {worst_sum:.2e} (machine)", elapsed)


def test_criterion_5_phi_continuity(bound_ctx):
    t0 = time.time()
    T = max(bound_ctx.xi.period_tau, bound_ctx.eta.period_tau)
    taus = np.linspace(-3.3 * T, 3.3 * T, 10_000)  # spans > 6 periods, many seams
    vals = np.array([phi(float(tq), bound_ctx) for tq in taus])
    step = taus[1] - taus[0]
    ok = True
    worst_ratio = 0.0
    pphi = bound_ctx.constants.p_phi
    for k in range(len(taus) - 1):
        d = pphi * (
            1.0 / xi_squared(float(taus[k]), bound_ctx)
            + 1.0 / eta_squared(float(taus[k]), bound_ctx)
        )
        jump = abs(vals[k + 1] - vals[k])
        bound = 10.0 * abs(d) * step + 1e-9
        worst_ratio = max(worst_ratio, jump / bound)
        if jump > bound:
            ok = False
    elapsed = time.time() - t0
    _report(5, ok, f"10^4-point phi sweep over 6.6 periods, worst "
                   f"jump/(10 x derivative bound) = {worst_ratio:.3f}", elapsed)


def test_criterion_6_time_equation(bound_ctx):
    t0 = time.time()
    rng = np.random.default_rng(606)
    worst = 0.0
    for tau in rng.uniform(-12.0, 12.0, 100):
        t = time_of(float(tau), bound_ctx)
        worst = max(worst, abs(tau_of(t, bound_ctx) - tau) / max(1.0, abs(tau)))
    ts = np.linspace(-30.0, 60.0, 400)
    taus = [tau_of(float(t), bound_ctx) for t in ts]
    monotone = all(b > a for a, b in zip(taus, taus[1:]))
    elapsed = time.time() - t0
    ok = worst <= 1e-10 and monotone
    _report(6, ok, f"tau(t(tau)) round-trip error {worst:.2e} (<= 1e-10), "
                   f"strict monotonicity {monotone}", elapsed)


def test_criterion_7_boundness_criterion():
    t0 = time.time()
    cfg = IntegratorConfig(rel_tol=1e-8, abs_tol=1e-10, max_steps=50_000_000)
    rng = np.random.default_rng(707)
    checked = 0
    disagreements = 0
    margins = []
    while checked < 50:
        state = CartesianState(
            r=(rng.uniform(0.6, 1.4), rng.uniform(-0.2, 0.2), rng.uniform(-0.4, 0.4)),
            v=(rng.uniform(-0.2, 0.2), rng.uniform(0.55, 1.05), rng.uniform(-0.25, 0.25)),
        )
        eps = 10 ** rng.uniform(-2.2, -0.05)
        model = StarkModel(1.0, float(eps))
        try:
            ctx = build_propagation(state, model)
        except Exception:
            continue
        rep = classify_boundness(ctx)
        if abs(rep.margin) < 1e-6:
            continue
        escaped = oracle_escape_detected(state, model, cfg=cfg)
        margins.append(rep.margin)
        if escaped == rep.is_bound:
            disagreements += 1
        checked += 1
    elapsed = time.time() - t0
    n_bound = sum(1 for m in margins if m > 0)
    ok = disagreements == 0
    _report(7, ok, f"analytic criterion vs escape detection on 50 states "
                   f"({n_bound} bound / {50 - n_bound} unbound), "
                   f"{disagreements} disagreements", elapsed)


def test_criterion_8_quasi_periodic_search():
    t0 = time.time()
    res = find_quasi_periodic(5, 6, config=SearchConfig(seed=1, lines=120))
    ctx = build_propagation(res.state, res.model)
    ratio_err = abs(ctx.xi.wctx.omega_R / ctx.eta.wctx.omega_R - 6.0 / 5.0)
    elapsed = time.time() - t0
    ok = ratio_err <= 1e-9 and _budget_ok(elapsed, 300.0)
    _report(8, ok, f"(5,6) commensurable orbit, period-ratio residual "
                   f"{ratio_err:.2e} (<= 1e-9), eps = {res.model.eps:.6f}", elapsed)


def test_criterion_9_periodic_search():
    t0 = time.time()
    res = find_periodic(1, 2, 7, config=SearchConfig(seed=3, lines=150))
    elapsed = time.time() - t0
    ok = res.closure_error <= 1e-4 and _budget_ok(elapsed, 600.0)
    _report(9, ok, f"(1,2,7) closed orbit, cartesian closure after the full "
                   f"period {res.closure_error:.2e} (<= 1e-4)", elapsed)


def test_criterion_10_equilibria():
    t0 = time.time()
    model = StarkModel(1.0, 0.1)
    z_star = stationary_equilibrium(model)
    balance = abs(-model.mu / z_star**2 + model.eps)

    z = 0.15 * z_star
    state = displaced_circular_conditions(z, model)
    ps = cartesian_to_parabolic(state)
    mc = motion_constants(ps, model)
    worst_poly = 0.0
    for coord, s0 in (("xi", ps.xi**2 / 2), ("eta", ps.eta**2 / 2)):
        poly = characteristic_cubic(coord, mc, model)
        worst_poly = max(worst_poly, abs(poly(s0)), abs(poly.deriv(s0)))

    T_rev = 2.0 * math.pi * state.r[0] / state.v[1]
    cfg = IntegratorConfig(rel_tol=1e-13, abs_tol=1e-15)
    ts = np.linspace(0.0, 10.0 * T_rev, 250)
    traj = integrate_cartesian(state, model, 10.0 * T_rev, cfg, t_eval=ts)
    rho = np.hypot(traj.states[:, 0], traj.states[:, 1])
    wander = max(
        float(np.max(np.abs(rho - state.r[0]))),
        float(np.max(np.abs(traj.states[:, 2] - z))),
    )
    elapsed = time.time() - t0
    ok = balance < 1e-15 and worst_poly <= 1e-10 and wander <= 1e-9
    _report(10, ok, f"force balance {balance:.1e}, f/f' at double root "
                    f"{worst_poly:.1e} (<= 1e-10), 10-revolution wander "
                    f"{wander:.2e} (<= 1e-9)", elapsed)
