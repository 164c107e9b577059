"""Weierstrass elliptic functions for real invariants.

Evaluates p (``wp``), p', p^-1, zeta and sigma for one pair of real
invariants (g2, g3) with nonzero modular discriminant, plus a
branch-continuous logarithm of sigma restricted to horizontal strips of the
complex plane.  The evaluation backend is the classical Jacobi-theta route
(Whittaker & Watson ch. 20/21, DLMF 23.6): arguments are reduced to the
fundamental cell, theta series are summed in the nome q, and quasi-periodic
factors are restored exactly.

Negative g3 is folded onto positive g3 through the degree--2 homogeneity
relation p(z; g2, g3) = -p(iz; g2, -g3) (similarly for zeta/sigma); the
context keeps the folded machinery internally and undoes the quarter-turn on
every public evaluation, so callers always see the original invariants.

All context state is immutable after construction; every function here is
pure and thread-safe.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

from .cubic import cubic_roots
from .errors import (
    DegenerateLattice,
    NoConvergence,
    NonFinite,
    OutsideStrip,
    PoleProximity,
    SeriesNoConverge,
    SigmaOverflow,
)
from .kernels import carlson_rf, log_sigma_qsum, theta_consts, theta_eval

#: lattice-distance fraction of omega_R below which wp/zeta lose significance
POLE_DISTANCE_FRACTION = 1e-12

#: |beta| margin kept from the edge of the sigma-series convergence strip
STRIP_MARGIN = 0.05

_EXP_OVERFLOW = 700.0


def _require_finite(**vals):
    for name, v in vals.items():
        if not (math.isfinite(v.real) and math.isfinite(v.imag)):
            raise NonFinite(f"{name} must be finite", **{name: v})


@dataclass(frozen=True)
class Invariants:
    """Invariant pair (g2, g3) with its modular discriminant."""

    g2: float
    g3: float
    delta: float = field(init=False)

    def __post_init__(self):
        if not (math.isfinite(self.g2) and math.isfinite(self.g3)):
            raise NonFinite("invariants must be finite", g2=self.g2, g3=self.g3)
        object.__setattr__(self, "delta", self.g2**3 - 27.0 * self.g3**2)

    @property
    def delta_sign(self) -> int:
        return (self.delta > 0) - (self.delta < 0)


@dataclass(frozen=True)
class _EvalLattice:
    """Theta machinery for one lattice with g3 >= 0 (the fold target)."""

    g2: float
    g3: float
    delta: float
    all_real: bool
    e: tuple[complex, complex, complex]
    omega: complex
    omega_prime: complex
    lnq: complex
    eta: complex        # zeta(omega)
    eta_prime: complex  # zeta(omega_prime), from the Legendre relation
    t1p_0: complex
    t2_0: complex

    def reduce(self, z: complex):
        """Split z = z* + 2M omega + 2N omega' with z* in the centered cell."""
        w, wp = self.omega, self.omega_prime
        det = w.real * wp.imag - w.imag * wp.real
        a = (z.real * wp.imag - z.imag * wp.real) / (2.0 * det)
        b = (z.imag * w.real - z.real * w.imag) / (2.0 * det)
        M = math.floor(a + 0.5)
        N = math.floor(b + 0.5)
        return z - 2.0 * M * w - 2.0 * N * wp, M, N

    def _theta(self, zs: complex):
        v = math.pi * zs / (2.0 * self.omega)
        t1, t1p, t2 = theta_eval(v, self.lnq)
        if t1 != t1:  # NaN: series tail bound failed
            raise SeriesNoConverge("theta series did not converge", z=zs)
        return t1, t1p, t2

    def wp(self, z: complex) -> complex:
        zs, _, _ = self.reduce(z)
        t1, _, t2 = self._theta(zs)
        quot = self.t1p_0 * t2 / (self.t2_0 * t1)
        return self.e[0] + (math.pi / (2.0 * self.omega) * quot) ** 2

    def wp_prime(self, z: complex) -> complex:
        # sigma(2z)/sigma(z)^4 with the eta-exponentials cancelled analytically
        zs, _, _ = self.reduce(z)
        t1, _, _ = self._theta(zs)
        t1d, _, _ = self._theta(2.0 * zs)
        c = math.pi / (2.0 * self.omega)
        return -(c**3) * self.t1p_0**3 * t1d / t1**4

    def zeta(self, z: complex) -> complex:
        zs, M, N = self.reduce(z)
        t1, t1p, _ = self._theta(zs)
        return (
            self.eta * zs / self.omega
            + math.pi / (2.0 * self.omega) * t1p / t1
            + 2.0 * M * self.eta
            + 2.0 * N * self.eta_prime
        )

    def sigma(self, z: complex) -> complex:
        zs, M, N = self.reduce(z)
        t1, _, _ = self._theta(zs)
        expo = self.eta * zs * zs / (2.0 * self.omega)
        if M != 0 or N != 0:
            expo = expo + (zs + M * self.omega + N * self.omega_prime) * (
                2.0 * M * self.eta + 2.0 * N * self.eta_prime
            )
        if abs(expo.real) > _EXP_OVERFLOW:
            raise SigmaOverflow(
                "sigma quasi-period factor exceeds double range", z=z, exponent=expo
            )
        val = (2.0 * self.omega / math.pi) * cmath.exp(expo) * t1 / self.t1p_0
        if (M + N + M * N) % 2:
            val = -val
        return val


def _classify_roots(roots) -> tuple[tuple[complex, complex, complex], bool]:
    """Slot-order a characteristic root triple; True when all real.

    All-real triples are sorted descending; otherwise the +Im member of the
    conjugate pair leads and the real root sits in the middle slot, matching
    wp at (omega, omega + omega', omega') respectively.
    """
    reals = [r for r in roots if r.imag == 0.0]
    if len(reals) == 3:
        rs = sorted((r.real for r in roots), reverse=True)
        return (complex(rs[0]), complex(rs[1]), complex(rs[2])), True
    real_root = reals[0]
    pair = sorted((r for r in roots if r.imag != 0.0), key=lambda r: -r.imag)
    return (pair[0], complex(real_root.real), pair[1]), False


def _build_eval_lattice(g2: float, g3: float, roots=None) -> _EvalLattice:
    """Half-periods and theta constants for g3 >= 0, nondegenerate roots.

    ``roots`` may carry externally computed characteristic roots when the
    caller knows them through a better-conditioned route than re-solving
    4t^3 - g2 t - g3 = 0 (near-degenerate invariants make that cubic
    ill-conditioned while the roots themselves are accurate).
    """
    delta = g2**3 - 27.0 * g3**2
    if roots is None:
        roots = cubic_roots(4.0, 0.0, -g2, -g3)
    e, all_real = _classify_roots(roots)
    if all_real:
        e1, e2, e3 = (x.real for x in e)
        omega = complex(carlson_rf(0.0, e1 - e2, e1 - e3).real, 0.0)
        omega_prime = complex(0.0, carlson_rf(0.0, e2 - e3, e1 - e3).real)
    else:
        e2 = e[1].real
        H2 = ((e2 - e[0]) * (e2 - e[2])).real  # |e2 - e1|^2 > 0
        H = math.sqrt(H2)
        m = 0.5 - 0.75 * e2 / H
        K = carlson_rf(0.0, 1.0 - m, 1.0).real
        Kp = carlson_rf(0.0, m, 1.0).real
        sH = math.sqrt(H)
        omega = complex(0.5 * K / sH, -0.5 * Kp / sH)
        omega_prime = omega.conjugate()

    tau = omega_prime / omega
    lnq = 1j * math.pi * tau
    t2_0, t3_0, t4_0, t1p_0, t1ppp_0 = theta_consts(lnq)
    if t2_0 != t2_0:
        raise SeriesNoConverge("theta constants did not converge", g2=g2, g3=g3)
    eta = -(math.pi**2) * t1ppp_0 / (12.0 * omega * t1p_0)
    eta_prime = (eta * omega_prime - 1j * math.pi / 2.0) / omega

    lat = _EvalLattice(
        g2=g2, g3=g3, delta=delta, all_real=all_real, e=e,
        omega=omega, omega_prime=omega_prime,
        lnq=lnq, eta=eta, eta_prime=eta_prime, t1p_0=t1p_0, t2_0=t2_0,
    )

    # cross-check the roots against their theta-constant expressions
    scale = max(1.0, max(abs(x) for x in e))
    c = (math.pi / (2.0 * omega)) ** 2
    e_theta = (
        c * (t3_0**4 + t4_0**4) / 3.0,
        c * (t2_0**4 - t4_0**4) / 3.0,
        -c * (t2_0**4 + t3_0**4) / 3.0,
    )
    worst = max(abs(a - b) for a, b in zip(e, e_theta))
    if worst > 1e-10 * scale:
        raise NoConvergence(
            "half-period construction inconsistent with theta constants",
            g2=g2, g3=g3, mismatch=worst,
        )
    return lat


@dataclass(frozen=True)
class WeierstrassContext:
    """Immutable evaluation environment for one wp-function family.

    ``roots`` are ordered so that ``wp(omega) = roots[0]``,
    ``wp(omega + omega_prime) = roots[1]`` and ``wp(omega_prime) = roots[2]``;
    ``e_R = roots[e_R_slot]`` is the value attained at the real half-period
    ``omega_R``.
    """

    invariants: Invariants
    roots: tuple[complex, complex, complex]
    omega: complex
    omega_prime: complex
    omega_R: float
    omega_C: complex
    eta_R: complex
    nome_q: complex
    g3_was_negative: bool
    e_R_slot: int
    _lat: _EvalLattice

    @property
    def e_R(self) -> complex:
        return self.roots[self.e_R_slot]

    @property
    def half_periods(self) -> tuple[complex, complex, complex]:
        """(omega_1, omega_2, omega_3) paired with roots[0..2]."""
        return (self.omega, self.omega + self.omega_prime, self.omega_prime)

    def lattice_coords(self, z: complex) -> tuple[float, float]:
        """Real (a, b) with z = 2 a omega + 2 b omega_prime."""
        w, wp = self.omega, self.omega_prime
        det = w.real * wp.imag - w.imag * wp.real
        a = (z.real * wp.imag - z.imag * wp.real) / (2.0 * det)
        b = (z.imag * w.real - z.real * w.imag) / (2.0 * det)
        return a, b

    def lattice_distance(self, z: complex) -> float:
        a, b = self.lattice_coords(z)
        da = a - math.floor(a + 0.5)
        db = b - math.floor(b + 0.5)
        return abs(2.0 * da * self.omega + 2.0 * db * self.omega_prime)

    def reduce_to_cell(self, z: complex) -> complex:
        """Representative of z modulo the lattice in [0,2wR) x [0,2wC)."""
        b = z.imag / (2.0 * self.omega_C.imag)
        a = (z.real - 2.0 * b * self.omega_C.real) / (2.0 * self.omega_R)
        a -= math.floor(a)
        b -= math.floor(b)
        return 2.0 * a * self.omega_R + 2.0 * b * self.omega_C


def context_from_invariants(g2: float, g3: float, roots=None) -> WeierstrassContext:
    """Build the evaluation context for real invariants with delta != 0.

    ``roots`` optionally carries the characteristic roots when the caller
    obtained them through a better-conditioned route than the direct cubic
    solve (residuals are verified); near-degenerate invariants make the
    direct solve lose half the digits of close root pairs.

    Raises ``DegenerateLattice`` when the root configuration is too close to
    a repeated root for the period lattice to be resolvable, ``NonFinite`` on
    bad input.
    """
    if not (math.isfinite(g2) and math.isfinite(g3)):
        raise NonFinite("invariants must be finite", g2=g2, g3=g3)
    inv = Invariants(g2, g3)

    supplied = roots is not None
    if not supplied:
        roots = cubic_roots(4.0, 0.0, -g2, -g3)
    else:
        roots = [complex(r) for r in roots]
        rscale = max(1.0, max(abs(r) for r in roots))
        for r in roots:
            resid = 4.0 * r**3 - g2 * r - g3
            if abs(resid) > 1e-6 * max(1.0, rscale**3):
                raise NoConvergence(
                    "supplied characteristic roots do not solve the cubic",
                    root=r, residual=resid,
                )
    rscale = max(1.0, max(abs(r) for r in roots))
    gap = min(
        abs(roots[0] - roots[1]), abs(roots[0] - roots[2]), abs(roots[1] - roots[2])
    )
    # supplied roots carry their own accuracy; an internal solve splits a
    # repeated root by ~sqrt(eps), so near-degenerate invariants need the
    # caller to provide roots from a better-conditioned source
    gap_floor = 1e-12 if supplied else 3e-8
    delta_scale = max(1.0, abs(g2) ** 3, 27.0 * g3**2)
    degenerate = gap <= gap_floor * rscale or (
        not supplied and abs(inv.delta) <= 1e-14 * delta_scale
    )
    if degenerate:
        raise DegenerateLattice(
            "repeated characteristic roots; no nondegenerate period lattice",
            g2=g2, g3=g3, delta=inv.delta, root_gap=gap,
        )

    folded = g3 < 0.0
    if folded:
        fold_roots = [-r for r in roots]
    else:
        fold_roots = roots
    lat = _build_eval_lattice(g2, abs(g3), fold_roots)

    if not folded:
        pub_roots = lat.e
        omega, omega_prime = lat.omega, lat.omega_prime
    else:
        # root reflection and quarter-turn of the half-periods
        ef = lat.e
        pub_roots = (-ef[2], -ef[1], -ef[0])
        omega = -1j * lat.omega_prime
        omega_prime = 1j * lat.omega

    delta_shift = 0 if lat.all_real else 1
    omega_R_c = omega + delta_shift * omega_prime
    if abs(omega_R_c.imag) > 1e-12 * abs(omega_R_c):
        raise NoConvergence(
            "real half-period has nonzero imaginary part", omega_R=omega_R_c
        )
    omega_R = omega_R_c.real
    omega_C = omega_prime
    nome_q = cmath.exp(1j * math.pi * omega_C / omega_R)
    e_R_slot = 0 if lat.all_real else 1

    ctx = WeierstrassContext(
        invariants=inv, roots=pub_roots, omega=omega, omega_prime=omega_prime,
        omega_R=omega_R, omega_C=omega_C, eta_R=0j, nome_q=nome_q,
        g3_was_negative=folded, e_R_slot=e_R_slot, _lat=lat,
    )
    object.__setattr__(ctx, "eta_R", zeta(complex(omega_R), ctx))
    return ctx


def _check_pole(z: complex, ctx: WeierstrassContext):
    d = ctx.lattice_distance(z)
    if d < POLE_DISTANCE_FRACTION * ctx.omega_R:
        raise PoleProximity("argument too close to the period lattice", z=z, distance=d)


def wp(z: complex, ctx: WeierstrassContext) -> complex:
    """Weierstrass p-function at z."""
    z = complex(z)
    _require_finite(z=z)
    _check_pole(z, ctx)
    if ctx.g3_was_negative:
        return -ctx._lat.wp(1j * z)
    return ctx._lat.wp(z)


def wp_prime(z: complex, ctx: WeierstrassContext) -> complex:
    """Derivative of wp; satisfies wp'^2 = 4 wp^3 - g2 wp - g3."""
    z = complex(z)
    _require_finite(z=z)
    _check_pole(z, ctx)
    if ctx.g3_was_negative:
        return -1j * ctx._lat.wp_prime(1j * z)
    return ctx._lat.wp_prime(z)


def zeta(z: complex, ctx: WeierstrassContext) -> complex:
    """Weierstrass zeta at z (odd, quasi-periodic, zeta' = -wp)."""
    z = complex(z)
    _require_finite(z=z)
    _check_pole(z, ctx)
    if ctx.g3_was_negative:
        return 1j * ctx._lat.zeta(1j * z)
    return ctx._lat.zeta(z)


def sigma(z: complex, ctx: WeierstrassContext) -> complex:
    """Weierstrass sigma at z (odd entire function, sigma(z) ~ z near 0)."""
    z = complex(z)
    _require_finite(z=z)
    if ctx.g3_was_negative:
        return -1j * ctx._lat.sigma(1j * z)
    return ctx._lat.sigma(z)


def _inverse_principal_real(lat: _EvalLattice, wr: float) -> complex:
    """One wp-preimage of a real value on an eval lattice (g3 >= 0).

    Case ladder over the position of w relative to the characteristic roots;
    each branch reduces to a Carlson R_F with arguments off the cut, using the
    half-period reflection formulas and the g3-flip for the imaginary axis.
    """
    e1, e2, e3 = lat.e
    scale = max(1.0, abs(e1), abs(e3))
    # exact roots map straight to half periods (generic branches divide by w-e)
    if abs(wr - e1.real) < 1e-12 * scale and abs(e1.imag) == 0.0:
        return lat.omega
    if abs(wr - e2.real) < 1e-12 * scale:
        return lat.omega + lat.omega_prime
    if abs(wr - e3.real) < 1e-12 * scale and abs(e3.imag) == 0.0:
        return lat.omega_prime
    if lat.all_real:
        r1, r2, r3 = e1.real, e2.real, e3.real
        if wr >= r1:
            return carlson_rf(wr - r1, wr - r2, wr - r3)
        if wr >= r2:
            # w attained on [omega, omega+omega']: reflect through omega
            wt = r1 + (r1 - r2) * (r1 - r3) / (wr - r1)
            y = carlson_rf(r3 - wt, r2 - wt, r1 - wt).real
            return lat.omega + 1j * y
        if wr >= r3:
            # w attained on [omega', omega'+omega]: reflect through omega'
            wt = r3 + (r1 - r3) * (r2 - r3) / (wr - r3)
            t = carlson_rf(wt - r1, wt - r2, wt - r3).real
            return lat.omega_prime + t
        # w below all roots: imaginary axis, wp(iy; g2,g3) = -wp(y; g2,-g3)
        y = carlson_rf(r3 - wr, r2 - wr, r1 - wr).real
        return 1j * y
    r2 = e2.real
    if wr >= r2:
        return carlson_rf(wr - e1, wr - e2, wr - e3)
    y = carlson_rf(e1 - wr, e2 - wr, e3 - wr).real
    return 1j * y


def wp_inverse(w: complex, ctx: WeierstrassContext) -> tuple[complex, complex]:
    """Both wp-preimages of w inside the fundamental cell [0,2wR) x [0,2wC).

    The two values v1, v2 satisfy wp(v) = w and v1 + v2 on the lattice
    (evenness); candidates are Newton-polished against wp/wp'.  Ordered by
    ascending |Im|, then ascending Re.  Callers pick per their branch policy.
    """
    w = complex(w)
    _require_finite(w=w)
    wscale = max(1.0, abs(w))
    real_w = abs(w.imag) <= 1e-13 * wscale

    if ctx.g3_was_negative:
        target = -w
        if real_w:
            u = -1j * _inverse_principal_real(ctx._lat, target.real)
        else:
            e1, e2, e3 = ctx._lat.e
            u = -1j * carlson_rf(target - e1, target - e2, target - e3)
    else:
        if real_w:
            u = _inverse_principal_real(ctx._lat, w.real)
        else:
            e1, e2, e3 = ctx._lat.e
            u = carlson_rf(w - e1, w - e2, w - e3)

    # Newton polish against the defining relation; near half-periods the
    # derivative vanishes quadratically, so oversized steps mean the residual
    # is already at the level the local curvature can resolve
    tol = 1e-13 * wscale
    step_cap = 0.25 * ctx.omega_R
    ok = False
    for _ in range(12):
        resid = wp(u, ctx) - w
        if abs(resid) <= tol:
            ok = True
            break
        deriv = wp_prime(u, ctx)
        if abs(deriv) * step_cap < abs(resid):
            ok = abs(resid) <= 1e-9 * wscale
            break
        u = u - resid / deriv
    if not ok and abs(wp(u, ctx) - w) > 1e-9 * wscale:
        raise NoConvergence("wp_inverse failed to converge", w=w, candidate=u)

    c1 = ctx.reduce_to_cell(u)
    c2 = ctx.reduce_to_cell(-u)
    pair = sorted((c1, c2), key=lambda v: (abs(v.imag), v.real))
    return pair[0], pair[1]


def log_sigma_continuous(x: float, shift: complex, ctx: WeierstrassContext) -> complex:
    """A logarithm of sigma(x + shift) continuous in the real variable x.

    The Fourier/product expansion of log sigma about the real period is
    evaluated at x* = x mod 2 omega_R and the quasi-period correction
    2 N eta_R (x* + shift + N omega_R) -+ i N pi restores the full argument;
    the sign of the i N pi term follows the sign of Im(shift) so that the
    branch sewn at every cell boundary is the continuous one on either side
    of the real axis.

    Within one cell the expansion is free of branch cuts provided
    Re(shift) lies in (-omega_R, omega_R]; preimages from ``wp_inverse``
    should be recentred accordingly (``propagation`` does).  exp of the result
    always equals sigma(x + shift) regardless.
    """
    if not math.isfinite(x):
        raise NonFinite("x must be finite", x=x)
    shift = complex(shift)
    _require_finite(shift=shift)

    wR = ctx.omega_R
    beta = shift.imag / (2.0 * ctx.omega_C.imag)
    if abs(beta) >= 1.0 - STRIP_MARGIN:
        raise OutsideStrip(
            "shift outside the sigma-series convergence strip",
            shift=shift, beta=beta,
        )

    N = math.floor(x / (2.0 * wR))
    xs = x - 2.0 * N * wR
    U = xs + shift
    v = math.pi * U / (2.0 * wR)
    qsum = log_sigma_qsum(v, ctx.nome_q)
    if qsum != qsum:
        raise SeriesNoConverge("sigma log series did not converge", shift=shift)
    L = (
        cmath.log(2.0 * wR / math.pi)
        + ctx.eta_R * U * U / (2.0 * wR)
        + cmath.log(cmath.sin(v))
        + qsum
    )
    if N != 0:
        branch = math.pi if shift.imag >= 0.0 else -math.pi
        L = L + 2.0 * N * ctx.eta_R * (U + N * wR) - 1j * N * branch
    return L
