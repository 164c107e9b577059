"""Analytic propagation of the three-dimensional Stark problem.

A point mass moves under an inverse-square central attraction of parameter
``mu`` plus a uniform acceleration ``eps`` along +z.  In parabolic
coordinates (xi, eta, phi) with momenta (p_xi, p_eta, p_phi) and the
regularised time ``tau`` (dt = (xi^2 + eta^2) dtau) the problem separates:
xi^2 and eta^2 evolve on cubic-polynomial energy curves and are expressed in
closed form through the Weierstrass p-function, phi through sigma/zeta
logarithms, and real time through a Kepler-equation analogue built from zeta
differences.  This module builds the per-trajectory constants once
(:func:`build_propagation`) and then evaluates state, azimuth and time at any
fictitious time, plus the numerical inversion tau(t).

Conventions: the field strength is positive along +z; xi = sqrt(r + z) and
eta = sqrt(r - z) are nonnegative; the azimuth lies in (-pi, pi]; p_phi != 0
(motion touching the polar axis is out of scope).  No unit system is imposed;
tests and docs use mu = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import weierstrass as wz
from .cubic import cubic_roots
from .errors import (
    BranchSelectionFailure,
    Degenerate,
    DegenerateLattice,
    EscapedBeforeT,
    ImaginaryResidue,
    NoConvergence,
    NonFinite,
    NoReachableRoot,
    OnPolarAxis,
    OutOfScopeBidimensional,
)

#: |Im| budget for assembled real quantities (phi, t); larger values signal
#: a branch mistake and raise instead of being dropped silently
IMAG_RESIDUE_TOL = 1e-8

#: |f'(s_r)| / scale below which the reachable root counts as repeated
DEGENERACY_TOL = 1e-7


# ---------------------------------------------------------------------------
# model and state types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StarkModel:
    """Gravitational parameter and uniform field strength (along +z)."""

    mu: float
    eps: float

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.eps)):
            raise NonFinite("model parameters must be finite", mu=self.mu, eps=self.eps)
        if self.mu <= 0 or self.eps <= 0:
            raise ValueError("mu and eps must be positive")


@dataclass(frozen=True)
class CartesianState:
    r: tuple[float, float, float]
    v: tuple[float, float, float]

    @property
    def radius(self) -> float:
        x, y, z = self.r
        return math.sqrt(x * x + y * y + z * z)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.r, dtype=float), np.asarray(self.v, dtype=float)


@dataclass(frozen=True)
class ParabolicState:
    xi: float
    eta: float
    phi: float
    p_xi: float
    p_eta: float
    p_phi: float


@dataclass(frozen=True)
class MotionConstants:
    h: float
    alpha1: float
    alpha2: float
    p_phi: float


@dataclass(frozen=True)
class CubicPoly:
    """f(s) = 4 a1 s^3 + 6 a2 s^2 + 4 a3 s + a4."""

    a1: float
    a2: float
    a3: float
    a4: float

    def __call__(self, s):
        return ((4.0 * self.a1 * s + 6.0 * self.a2) * s + 4.0 * self.a3) * s + self.a4

    def deriv(self, s):
        return (12.0 * self.a1 * s + 12.0 * self.a2) * s + 4.0 * self.a3

    def deriv2(self, s):
        return 24.0 * self.a1 * s + 12.0 * self.a2

    def deriv3(self):
        return 24.0 * self.a1

    def invariants(self) -> tuple[float, float]:
        """Quartic-style invariants of the cubic (quadratic/cubic covariants)."""
        g2 = -4.0 * self.a1 * self.a3 + 3.0 * self.a2 * self.a2
        g3 = (
            2.0 * self.a1 * self.a2 * self.a3
            - self.a2**3
            - self.a1 * self.a1 * self.a4
        )
        return g2, g3

    def roots(self) -> list[complex]:
        return cubic_roots(4.0 * self.a1, 6.0 * self.a2, 4.0 * self.a3, self.a4)

    def real_roots(self) -> list[float]:
        return sorted(r.real for r in self.roots() if r.imag == 0.0)

    def scale(self, s: float) -> float:
        return max(
            abs(4.0 * self.a1 * s**3), abs(6.0 * self.a2 * s**2),
            abs(4.0 * self.a3 * s), abs(self.a4), 1e-300,
        )


# ---------------------------------------------------------------------------
# coordinate transforms
# ---------------------------------------------------------------------------

def cartesian_to_parabolic(state: CartesianState) -> ParabolicState:
    """Parabolic coordinates and canonical momenta of a cartesian state."""
    x, y, z = state.r
    vx, vy, vz = state.v
    for name, val in (("x", x), ("y", y), ("z", z), ("vx", vx), ("vy", vy), ("vz", vz)):
        if not math.isfinite(val):
            raise NonFinite(f"state component {name} is not finite", value=val)
    rho2 = x * x + y * y
    r = math.sqrt(rho2 + z * z)
    if r == 0.0:
        raise OnPolarAxis("state at the origin", state=state)
    if rho2 == 0.0:
        raise OnPolarAxis("azimuth undefined on the z axis", state=state)
    xi = math.sqrt(r + z)
    eta = math.sqrt(r - z)
    phi = math.atan2(y, x)
    rdot = (x * vx + y * vy + z * vz) / r
    xi_dot = (rdot + vz) / (2.0 * xi)
    eta_dot = (rdot - vz) / (2.0 * eta)
    phi_dot = (vy * x - vx * y) / rho2
    s2 = xi * xi + eta * eta
    return ParabolicState(
        xi=xi, eta=eta, phi=phi,
        p_xi=s2 * xi_dot, p_eta=s2 * eta_dot, p_phi=xi * xi * eta * eta * phi_dot,
    )


def parabolic_to_cartesian(ps: ParabolicState) -> CartesianState:
    """Inverse transform, velocities recovered from the canonical momenta."""
    xi, eta, phi = ps.xi, ps.eta, ps.phi
    s2 = xi * xi + eta * eta
    xi_dot = ps.p_xi / s2
    eta_dot = ps.p_eta / s2
    phi_dot = ps.p_phi / (xi * xi * eta * eta)
    cp, sp = math.cos(phi), math.sin(phi)
    rho = xi * eta
    rho_dot = xi_dot * eta + xi * eta_dot
    return CartesianState(
        r=(rho * cp, rho * sp, 0.5 * (xi * xi - eta * eta)),
        v=(
            rho_dot * cp - rho * phi_dot * sp,
            rho_dot * sp + rho * phi_dot * cp,
            xi * xi_dot - eta * eta_dot,
        ),
    )


def hamiltonian(ps: ParabolicState, model: StarkModel) -> float:
    """Energy integral evaluated in parabolic variables."""
    xi2, eta2 = ps.xi**2, ps.eta**2
    s2 = xi2 + eta2
    return (
        0.5 * (ps.p_xi**2 + ps.p_eta**2) / s2
        + 0.5 * ps.p_phi**2 / (xi2 * eta2)
        - 2.0 * model.mu / s2
        - 0.5 * model.eps * (xi2 - eta2)
    )


def cartesian_energy(state: CartesianState, model: StarkModel) -> float:
    x, y, z = state.r
    vx, vy, vz = state.v
    r = state.radius
    return 0.5 * (vx * vx + vy * vy + vz * vz) - model.mu / r - model.eps * z


def angular_momentum_z(state: CartesianState) -> float:
    x, y, _ = state.r
    vx, vy, _ = state.v
    return x * vy - y * vx


def motion_constants(ps: ParabolicState, model: StarkModel) -> MotionConstants:
    """Separation constants (h, alpha1, alpha2, p_phi); alpha1 + alpha2 = 2 mu."""
    h = hamiltonian(ps, model)
    xi2, eta2 = ps.xi**2, ps.eta**2
    alpha1 = -0.5 * model.eps * xi2 * xi2 - h * xi2 + 0.5 * ps.p_xi**2 \
        + 0.5 * ps.p_phi**2 / xi2
    alpha2 = 0.5 * model.eps * eta2 * eta2 - h * eta2 + 0.5 * ps.p_eta**2 \
        + 0.5 * ps.p_phi**2 / eta2
    resid = abs(alpha1 + alpha2 - 2.0 * model.mu)
    if resid > 1e-8 * max(1.0, abs(alpha1), abs(alpha2), 2.0 * model.mu):
        raise NoConvergence(
            "separation constants violate alpha1 + alpha2 = 2 mu",
            alpha1=alpha1, alpha2=alpha2, residual=resid,
        )
    return MotionConstants(h=h, alpha1=alpha1, alpha2=alpha2, p_phi=ps.p_phi)


def characteristic_cubic(coord: str, constants: MotionConstants, model: StarkModel) -> CubicPoly:
    """Radial cubic of one coordinate: s = xi^2/2 (coord='xi') or eta^2/2."""
    if coord == "xi":
        return CubicPoly(a1=2.0 * model.eps, a2=4.0 * constants.h / 3.0,
                         a3=constants.alpha1, a4=-constants.p_phi**2)
    if coord == "eta":
        return CubicPoly(a1=-2.0 * model.eps, a2=4.0 * constants.h / 3.0,
                         a3=constants.alpha2, a4=-constants.p_phi**2)
    raise ValueError(f"unknown coordinate {coord!r}")


# ---------------------------------------------------------------------------
# root selection and pericentre passage
# ---------------------------------------------------------------------------

def reachable_root(poly: CubicPoly, s0: float, p_sign: float) -> float:
    """Smallest positive root bounding the motion's current component below.

    The radicand f is nonnegative on the component of {f >= 0} containing the
    initial point; its lower endpoint is the smallest root the coordinate can
    actually attain.  ``p_sign`` is accepted for interface symmetry; both
    component endpoints are reachable regardless of the initial direction.
    """
    del p_sign
    scale = poly.scale(max(abs(s0), 1e-30))
    f0 = poly(s0)
    if f0 < -1e-9 * scale:
        raise NoReachableRoot(
            "initial point lies outside the admissible region", s0=s0, f_s0=f0
        )
    roots = poly.real_roots()
    stol = 1e-9 * max(1.0, abs(s0))
    at_root = [r for r in roots if abs(r - s0) <= stol]
    if at_root:
        r = at_root[0]
        if poly.deriv(r) >= 0.0:
            candidate = r  # rising root: lower endpoint of the component
        else:
            below = [q for q in roots if q < r - stol]
            if not below:
                raise NoReachableRoot("no root bounds the component below", s0=s0)
            candidate = max(below)
    else:
        below = [q for q in roots if q < s0]
        if not below:
            raise NoReachableRoot("no real root below the initial point", s0=s0)
        candidate = max(below)
    if candidate <= 0.0:
        raise NoReachableRoot(
            "component reaches the polar axis; geometry out of scope",
            s0=s0, candidate=candidate,
        )
    return candidate


def characteristic_roots(poly: CubicPoly) -> list[complex]:
    """Roots of 4t^3 - g2 t - g3 through the affine root map t = a1 s + a2/2.

    The map sends each root of f to a root of the characteristic cubic
    (t at a root equals f''(root)/24), and stays well conditioned even when
    the characteristic roots nearly collide, unlike re-solving their cubic.
    """
    return [poly.a1 * s + 0.5 * poly.a2 for s in poly.roots()]


def _wctx_for(poly: CubicPoly) -> wz.WeierstrassContext:
    g2, g3 = poly.invariants()
    return wz.context_from_invariants(g2, g3, roots=characteristic_roots(poly))


def pericentre_time(
    poly: CubicPoly,
    s0: float,
    s_root: float,
    p_sign: float,
    wctx: wz.WeierstrassContext | None = None,
) -> float:
    """Fictitious time at which the coordinate attains its chosen root.

    The initial point maps to u0 = wp^-1(f''(s0)/24) and the root to its
    matching half-period; the elapsed fictitious time is the real
    representative of their difference.  The difference is evaluated through
    the half-period reflection, wp(tau_peri) = f''(s_r)/24 + f'(s_r) /
    (4 (s0 - s_r)), which stays fully conditioned even when the initial point
    sits a hair off the root (the raw difference of the two inverse-wp values
    cancels there).  The sign is fixed opposite to the initial momentum (the
    root lies ahead when the coordinate is shrinking); both branch candidates
    are validated against the closed-form solution and its slope at tau = 0.
    """
    if wctx is None:
        wctx = _wctx_for(poly)
    fp_root = poly.deriv(s_root)
    e_match = poly.deriv2(s_root) / 24.0

    if abs(s0 - s_root) <= 1e-12 * max(1.0, abs(s0)):
        return 0.0

    w_peri = e_match + fp_root / (4.0 * (s0 - s_root))
    u_pair = wz.wp_inverse(w_peri, wctx)

    candidates: list[float] = []
    for u0 in u_pair:
        for sgn in (1.0, -1.0):
            d = sgn * u0
            # physical offsets are real; fold into |tau| <= omega_R
            d -= 2.0 * wctx.omega_R * round(d.real / (2.0 * wctx.omega_R))
            if abs(d.imag) <= 1e-8 * max(1.0, abs(d)):
                candidates.append(d.real)
    # prefer the convention sign (opposite to the initial momentum)
    want = -math.copysign(1.0, p_sign) if p_sign != 0.0 else 1.0
    candidates.sort(key=lambda tq: (0 if math.copysign(1.0, tq) == want else 1, abs(tq)))

    sscale = max(1.0, abs(s0))
    for tau_p in candidates:
        den = wz.wp(tau_p, wctx) - e_match
        if den == 0:
            continue
        s_at0 = s_root + 0.25 * fp_root / den
        if abs(s_at0 - s0) > 1e-6 * sscale * (1.0 + abs(s_at0.imag)):
            continue
        slope = (0.25 * fp_root * wz.wp_prime(tau_p, wctx) / den**2).real
        slope_scale = max(abs(slope), 1.0)
        if p_sign == 0.0 or slope * p_sign > 0.0 or abs(slope) < 1e-9 * slope_scale:
            return tau_p
    raise BranchSelectionFailure(
        "no inverse-wp branch reproduces the initial conditions",
        s0=s0, s_root=s_root, candidates=candidates,
    )


# ---------------------------------------------------------------------------
# per-coordinate closed-form bundle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoordinateSolution:
    """Constants of one separated coordinate, frozen at build time."""

    name: str
    poly: CubicPoly
    s0: float
    p0: float
    s_root: float
    tau_peri: float
    wctx: wz.WeierstrassContext
    e_match: float
    omega_slot: int
    omega_match: complex
    # azimuth-quadrature constants
    beta: float
    gamma: float
    delta_c: float
    u: complex
    zeta_u: complex
    phi_coef: complex
    log_ratio0: complex
    # time-equation constants
    time_coef: float
    zeta_const: complex

    def _at_pole(self, v: float) -> bool:
        # wp pole <-> the coordinate sits exactly at its root value
        return self.wctx.lattice_distance(complex(v)) < 1e-9 * self.wctx.omega_R

    def s_of(self, tau: float) -> float:
        v = tau - self.tau_peri
        if self._at_pole(v):
            return self.s_root
        den = wz.wp(v, self.wctx) - self.e_match
        if den == 0:
            return math.inf
        return (self.s_root + 0.25 * self.poly.deriv(self.s_root) / den).real

    def squared(self, tau: float) -> float:
        return 2.0 * self.s_of(tau)

    def dsquared_dtau(self, tau: float) -> float:
        v = tau - self.tau_peri
        if self._at_pole(v):
            return 0.0
        den = wz.wp(v, self.wctx) - self.e_match
        num = -0.5 * self.poly.deriv(self.s_root) * wz.wp_prime(v, self.wctx)
        return (num / (den * den)).real

    def log_ratio(self, x: float) -> complex:
        up = wz.log_sigma_continuous(x, self.u, self.wctx)
        dn = wz.log_sigma_continuous(x, -self.u, self.wctx)
        return up - dn

    def phi_term(self, tau: float) -> complex:
        return self.phi_coef * (
            self.log_ratio(tau - self.tau_peri) - self.log_ratio0 - 2.0 * tau * self.zeta_u
        )

    def time_term(self, tau: float) -> complex:
        return self.time_coef * (
            tau * self.e_match
            + wz.zeta(tau - self.tau_peri - self.omega_match, self.wctx)
            - self.zeta_const
        )

    @property
    def period_tau(self) -> float:
        return 2.0 * self.wctx.omega_R


def _build_coordinate(
    name: str, poly: CubicPoly, s0: float, p0: float
) -> CoordinateSolution:
    s_root = reachable_root(poly, s0, p0)
    fp_root = poly.deriv(s_root)
    if abs(fp_root) <= DEGENERACY_TOL * poly.scale(s_root) / max(s_root, 1e-30):
        raise Degenerate(
            "repeated reachable root: constant-coordinate (equilibrium) solution",
            coordinate=name, s_root=s_root, f_prime=fp_root,
        )
    try:
        wctx = _wctx_for(poly)
    except DegenerateLattice as exc:
        # repeated cubic roots and a vanishing discriminant are the same
        # condition seen through the root map; double roots computed in
        # floating point can split wider than the f' test resolves
        raise Degenerate(
            "radial cubic is degenerate (repeated roots)",
            coordinate=name, s_root=s_root,
        ) from exc

    e_match = poly.deriv2(s_root) / 24.0
    slot = min(range(3), key=lambda i: abs(wctx.roots[i] - e_match))
    mismatch = abs(wctx.roots[slot] - e_match)
    if mismatch > 1e-9 * max(1.0, abs(e_match)):
        raise NoConvergence(
            "f''(s_r)/24 is not a characteristic root",
            coordinate=name, mismatch=mismatch,
        )
    omega_match = wctx.half_periods[slot]
    tau_peri = pericentre_time(poly, s0, s_root, p0, wctx)

    beta = -e_match
    gamma = 4.0 * s_root  # = 2 xi_r^2
    delta_c = fp_root + gamma * beta
    u_pair = wz.wp_inverse(-delta_c / gamma, wctx)
    u = min(
        (u_pair[0], u_pair[1], u_pair[0] - 2.0 * wctx.omega_C, u_pair[1] - 2.0 * wctx.omega_C),
        key=lambda c: (abs(c.imag), -c.imag),
    )
    # keep Re(u) in (-omega_R, omega_R]: the continuous-log window
    u -= 2.0 * wctx.omega_R * math.ceil((u.real - wctx.omega_R) / (2.0 * wctx.omega_R))
    zeta_u = wz.zeta(u, wctx)
    wp_prime_u = wz.wp_prime(u, wctx)
    phi_coef = (delta_c - beta * gamma) / (gamma * gamma * wp_prime_u)

    g2, _ = poly.invariants()
    time_coef = 0.5 * fp_root / (g2 / 4.0 - 3.0 * e_match * e_match)
    zeta_const = wz.zeta(-tau_peri - omega_match, wctx)

    sol = CoordinateSolution(
        name=name, poly=poly, s0=s0, p0=p0, s_root=s_root, tau_peri=tau_peri,
        wctx=wctx, e_match=e_match, omega_slot=slot, omega_match=omega_match,
        beta=beta, gamma=gamma, delta_c=delta_c, u=u, zeta_u=zeta_u,
        phi_coef=phi_coef, log_ratio0=0j, time_coef=time_coef, zeta_const=zeta_const,
    )
    object.__setattr__(sol, "log_ratio0", sol.log_ratio(-tau_peri))
    return sol


# ---------------------------------------------------------------------------
# propagation context
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PropagationContext:
    """Everything cached for closed-form evaluation of one trajectory."""

    model: StarkModel
    state0: CartesianState
    para0: ParabolicState
    constants: MotionConstants
    xi: CoordinateSolution
    eta: CoordinateSolution
    bound: bool
    bound_margin: float
    tau_escape: float | None

    @property
    def phi0(self) -> float:
        return self.para0.phi


def build_propagation(state0: CartesianState, model: StarkModel) -> PropagationContext:
    """Assemble the full closed-form solution for one initial state.

    Raises ``OutOfScopeBidimensional`` for vanishing p_phi, ``Degenerate``
    when a radial cubic has a repeated reachable root (displaced-circular /
    equilibrium family; see :func:`starkprop.analysis.degenerate_propagate`).
    """
    para0 = cartesian_to_parabolic(state0)
    pscale = max(abs(para0.p_xi), abs(para0.p_eta), state0.radius, 1.0)
    if abs(para0.p_phi) <= 1e-12 * pscale:
        raise OutOfScopeBidimensional(
            "p_phi = 0: planar Stark geometry is not in scope", p_phi=para0.p_phi
        )
    constants = motion_constants(para0, model)

    poly_xi = characteristic_cubic("xi", constants, model)
    poly_eta = characteristic_cubic("eta", constants, model)
    xi_sol = _build_coordinate("xi", poly_xi, 0.5 * para0.xi**2, para0.p_xi)
    eta_sol = _build_coordinate("eta", poly_eta, 0.5 * para0.eta**2, para0.p_eta)

    # bound iff the real-axis minimum of wp clears the xi-branch threshold
    e_R = xi_sol.wctx.e_R.real
    threshold = poly_xi.deriv2(xi_sol.s0) / 24.0
    margin = e_R - threshold
    bound = margin > 0.0
    tau_escape = None if bound else xi_sol.tau_peri + xi_sol.wctx.omega_R

    return PropagationContext(
        model=model, state0=state0, para0=para0, constants=constants,
        xi=xi_sol, eta=eta_sol, bound=bound, bound_margin=margin,
        tau_escape=tau_escape,
    )


# ---------------------------------------------------------------------------
# evaluation in fictitious time
# ---------------------------------------------------------------------------

def xi_squared(tau: float, ctx: PropagationContext) -> float:
    """xi^2 at fictitious time tau (+inf at the escape pole)."""
    return ctx.xi.squared(tau)


def eta_squared(tau: float, ctx: PropagationContext) -> float:
    """eta^2 at fictitious time tau (always bound)."""
    return ctx.eta.squared(tau)


def xi_squared_general(
    tau: float, s0: float, p_sign: float, poly: CubicPoly,
    wctx: wz.WeierstrassContext,
) -> float:
    """Closed form for xi^2 anchored at an arbitrary admissible point.

    Unlike the root-anchored formula this needs no pericentre offset; it is
    used for cross-validation and for starting points that are not roots.
    The odd term carries the initial momentum direction.
    """
    if tau == 0.0:
        return 2.0 * s0
    f0 = poly(s0)
    if f0 < -1e-9 * poly.scale(max(abs(s0), 1e-30)):
        raise NoReachableRoot("starting point outside the admissible region", s0=s0)
    f0 = max(f0, 0.0)
    p = wz.wp(tau, wctx)
    pp = wz.wp_prime(tau, wctx)
    A = p - poly.deriv2(s0) / 24.0
    sgn = math.copysign(1.0, p_sign) if p_sign != 0.0 else 0.0
    num = (
        0.5 * poly.deriv(s0) * A
        + poly(s0) * poly.deriv3() / 24.0
        - sgn * math.sqrt(f0) * pp
    )
    return (2.0 * s0 + num / (A * A)).real


def phi(tau: float, ctx: PropagationContext) -> float:
    """Azimuth at fictitious time tau, continuous in tau, phi(0) = phi0."""
    val = (
        tau * (1.0 / ctx.xi.gamma + 1.0 / ctx.eta.gamma)
        + ctx.xi.phi_term(tau)
        + ctx.eta.phi_term(tau)
    )
    out = ctx.phi0 + 2.0 * ctx.constants.p_phi * val
    if abs(out.imag) > IMAG_RESIDUE_TOL:
        raise ImaginaryResidue(
            "azimuth assembly left a large imaginary part", tau=tau, value=out
        )
    return out.real


def time_of(tau: float, ctx: PropagationContext) -> float:
    """Elapsed real time t(tau); strictly increasing, t(0) = 0."""
    val = (
        2.0 * (ctx.xi.s_root + ctx.eta.s_root) * tau
        + ctx.xi.time_term(tau)
        + ctx.eta.time_term(tau)
    )
    if abs(val.imag) > IMAG_RESIDUE_TOL * max(1.0, abs(val.real)):
        raise ImaginaryResidue(
            "time-equation assembly left a large imaginary part", tau=tau, value=val
        )
    return val.real


def _tau_window(ctx: PropagationContext) -> tuple[float, float]:
    if ctx.bound:
        return (-math.inf, math.inf)
    guard = 1e-9 * ctx.xi.wctx.omega_R
    hi = ctx.tau_escape - guard
    lo = ctx.tau_escape - 2.0 * ctx.xi.wctx.omega_R + guard
    return (lo, hi)


def tau_of(t: float, ctx: PropagationContext) -> float:
    """Invert the time equation: the unique tau with time_of(tau) = t.

    Bracketed, safeguarded Newton on the monotone time equation with
    dt/dtau = xi^2 + eta^2.  For unbound orbits the admissible window is the
    open pole-to-pole interval containing tau = 0; epochs beyond it raise
    ``EscapedBeforeT``.
    """
    if not math.isfinite(t):
        raise NonFinite("t must be finite", t=t)
    if t == 0.0:
        return 0.0
    lo_lim, hi_lim = _tau_window(ctx)

    # grow a bracket geometrically from tau = 0
    step = 0.1 * min(ctx.xi.period_tau, ctx.eta.period_tau)
    lo, hi = (0.0, step) if t > 0 else (-step, 0.0)
    for _ in range(200):
        if t > 0:
            hi = min(hi, hi_lim)
            if time_of(hi, ctx) >= t:
                break
            if hi >= hi_lim:
                raise EscapedBeforeT(
                    "epoch beyond the escape asymptote", t=t, tau_limit=hi_lim
                )
            hi = min(hi * 2.0, hi_lim)
        else:
            lo = max(lo, lo_lim)
            if time_of(lo, ctx) <= t:
                break
            if lo <= lo_lim:
                raise EscapedBeforeT(
                    "epoch beyond the backward asymptote", t=t, tau_limit=lo_lim
                )
            lo = max(lo * 2.0, lo_lim)
    else:
        raise NoConvergence("failed to bracket the epoch", t=t)

    tau = 0.5 * (lo + hi)
    for _ in range(200):
        resid = time_of(tau, ctx) - t
        if resid > 0:
            hi = tau
        else:
            lo = tau
        deriv = ctx.xi.squared(tau) + ctx.eta.squared(tau)
        nxt = tau - resid / deriv
        if not (lo < nxt < hi):
            nxt = 0.5 * (lo + hi)
        if abs(nxt - tau) <= 1e-12 * max(1.0, abs(tau)):
            return nxt
        tau = nxt
    raise NoConvergence("time-equation inversion stalled", t=t, bracket=(lo, hi))


def parabolic_at(tau: float, ctx: PropagationContext) -> ParabolicState:
    """Full parabolic state from the closed form at fictitious time tau."""
    x2 = ctx.xi.squared(tau)
    n2 = ctx.eta.squared(tau)
    if not (math.isfinite(x2) and x2 > 0.0 and n2 > 0.0):
        raise EscapedBeforeT("coordinate pole reached", tau=tau, xi2=x2, eta2=n2)
    xi = math.sqrt(x2)
    eta = math.sqrt(n2)
    return ParabolicState(
        xi=xi, eta=eta, phi=phi(tau, ctx),
        p_xi=ctx.xi.dsquared_dtau(tau) / (2.0 * xi),
        p_eta=ctx.eta.dsquared_dtau(tau) / (2.0 * eta),
        p_phi=ctx.constants.p_phi,
    )


def propagate_at(ctx: PropagationContext, t: float) -> tuple[float, CartesianState]:
    """(tau, cartesian state) at real time t using a prebuilt context."""
    tau = tau_of(t, ctx)
    return tau, parabolic_to_cartesian(parabolic_at(tau, ctx))


def propagate(state0: CartesianState, model: StarkModel, t: float) -> CartesianState:
    """Closed-form state at time t for the given initial conditions."""
    ctx = build_propagation(state0, model)
    return propagate_at(ctx, t)[1]


def sample_trajectory(ctx: PropagationContext, times) -> list[dict]:
    """Rows of (t, tau, cartesian, parabolic) at the requested times.

    Stops early at the escape asymptote of unbound orbits; callers inspect
    the row count to detect truncation.
    """
    rows = []
    for t in times:
        try:
            tau = tau_of(float(t), ctx)
            ps = parabolic_at(tau, ctx)
        except EscapedBeforeT:
            break
        cart = parabolic_to_cartesian(ps)
        rows.append(
            {
                "t": float(t), "tau": tau,
                "x": cart.r[0], "y": cart.r[1], "z": cart.r[2],
                "vx": cart.v[0], "vy": cart.v[1], "vz": cart.v[2],
                "xi": ps.xi, "eta": ps.eta, "phi": ps.phi,
            }
        )
    return rows


def _coord_summary(c: CoordinateSolution) -> dict:
    g2, g3 = c.poly.invariants()
    return {
        "g2": g2,
        "g3": g3,
        "delta": c.wctx.invariants.delta,
        "roots": [[r.real, r.imag] for r in c.wctx.roots],
        "s_root": c.s_root,
        "tau_pericentre": c.tau_peri,
        "omega_R": c.wctx.omega_R,
        "omega_C": [c.wctx.omega_C.real, c.wctx.omega_C.imag],
        "period_tau": c.period_tau,
    }


def context_summary(ctx: PropagationContext) -> dict:
    """JSON-ready digest of the propagation constants."""
    return {
        "mu": ctx.model.mu,
        "eps": ctx.model.eps,
        "h": ctx.constants.h,
        "alpha1": ctx.constants.alpha1,
        "alpha2": ctx.constants.alpha2,
        "p_phi": ctx.constants.p_phi,
        "bound": ctx.bound,
        "bound_margin": ctx.bound_margin,
        "tau_escape": ctx.tau_escape,
        "xi": _coord_summary(ctx.xi),
        "eta": _coord_summary(ctx.eta),
    }
