"""Hot numeric kernels.

Scalar complex series (Jacobi theta, Carlson R_F, the sigma-log q-sum) and
the embedded Dormand-Prince 5(4) integrator loops.  Everything here is plain
Python over floats/complex/ndarrays so that :func:`starkprop.backend.maybe_jit`
can compile the identical source with numba; kernels signal failure through
NaN rather than exceptions so both backends behave the same.

References: Carlson, "Numerical computation of real or complex elliptic
integrals" (1995); Hairer, Norsett & Wanner, "Solving ODEs I" (DOPRI5 and its
dense output); Whittaker & Watson ch. 21 for the theta series.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

from .backend import maybe_jit

_NAN = complex(float("nan"), float("nan"))

#: relative magnitude at which a theta/q-series term is considered converged
SERIES_TRUNC = 1e-18

_MAX_TERMS = 220


@maybe_jit
def theta_eval(v: complex, lnq: complex):
    """theta1(v), theta1'(v), theta2(v) for nome q = exp(lnq), |q| < 1.

    Series in q^((n+1/2)^2); geometric convergence for arguments reduced to
    the fundamental cell.  Returns NaNs when the tail bound fails.
    """
    t1 = 0j
    t1p = 0j
    t2 = 0j
    n = 0
    while n < _MAX_TERMS:
        qp = cmath.exp(lnq * (n + 0.5) * (n + 0.5))
        m = 2 * n + 1
        s = cmath.sin(m * v)
        c = cmath.cos(m * v)
        if n % 2 == 0:
            t1 += 2.0 * qp * s
            t1p += 2.0 * qp * m * c
        else:
            t1 -= 2.0 * qp * s
            t1p -= 2.0 * qp * m * c
        t2 += 2.0 * qp * c
        tail = abs(qp) * (abs(s) + abs(c)) * m
        if n >= 2 and tail < SERIES_TRUNC * (abs(t1) + abs(t1p) + abs(t2) + 1e-300):
            return t1, t1p, t2
        n += 1
    return _NAN, _NAN, _NAN


@maybe_jit
def theta_consts(lnq: complex):
    """theta2, theta3, theta4, theta1', theta1''' at v = 0."""
    t2 = 0j
    t1p = 0j
    t1ppp = 0j
    n = 0
    while n < _MAX_TERMS:
        qp = cmath.exp(lnq * (n + 0.5) * (n + 0.5))
        m = 2 * n + 1
        if n % 2 == 0:
            t1p += 2.0 * qp * m
            t1ppp -= 2.0 * qp * m * m * m
        else:
            t1p -= 2.0 * qp * m
            t1ppp += 2.0 * qp * m * m * m
        t2 += 2.0 * qp
        if n >= 2 and abs(qp) * m * m * m < SERIES_TRUNC * (abs(t1p) + abs(t1ppp)):
            break
        n += 1
    else:
        return _NAN, _NAN, _NAN, _NAN, _NAN
    t3 = 1.0 + 0j
    t4 = 1.0 + 0j
    n = 1
    while n < _MAX_TERMS:
        qp = cmath.exp(lnq * n * n)
        if n % 2 == 0:
            t4 += 2.0 * qp
        else:
            t4 -= 2.0 * qp
        t3 += 2.0 * qp
        if n >= 2 and 2.0 * abs(qp) < SERIES_TRUNC * (abs(t3) + abs(t4)):
            return t2, t3, t4, t1p, t1ppp
        n += 1
    return _NAN, _NAN, _NAN, _NAN, _NAN


@maybe_jit
def carlson_rf(x: complex, y: complex, z: complex) -> complex:
    """Carlson symmetric elliptic integral R_F via the duplication theorem.

    Principal branch; valid for complex arguments off the negative real axis
    (and for nonnegative real arguments, at most one zero).
    """
    A = (x + y + z) / 3.0
    A0 = A
    Q = (3.0 * 2.220446049250313e-16) ** (-0.125) * max(
        abs(A - x), abs(A - y), abs(A - z)
    )
    fac = 1.0
    n = 0
    while n < 120:
        if Q < fac * abs(A):
            break
        sx = cmath.sqrt(x)
        sy = cmath.sqrt(y)
        sz = cmath.sqrt(z)
        lam = sx * sy + sy * sz + sz * sx
        x = (x + lam) * 0.25
        y = (y + lam) * 0.25
        z = (z + lam) * 0.25
        A = (A + lam) * 0.25
        fac *= 4.0
        n += 1
    # exact relation: (A0 - x0)/4^n == A - x at every iterate
    X = (A - x) / A
    Y = (A - y) / A
    Z = -(X + Y)
    E2 = X * Y - Z * Z
    E3 = X * Y * Z
    series = 1.0 + E3 * (1.0 / 14.0 + 3.0 * E3 / 104.0) + E2 * (
        -0.1 + E2 / 24.0 - 3.0 * E3 / 44.0 - 5.0 * E2 * E2 / 208.0 + E2 * E3 / 16.0
    )
    return series / cmath.sqrt(A)


@maybe_jit
def log_sigma_qsum(v: complex, q: complex) -> complex:
    """sum_{r>=1} q^(2r) / (r (1 - q^(2r))) * (2 sin(r v))^2.

    The Fourier tail of log sigma; converges for |Im v| < pi Im(tau).
    """
    total = 0j
    q2 = q * q
    q2r = q2
    r = 1
    while r < 500:
        s = 2.0 * cmath.sin(r * v)
        term = q2r / (r * (1.0 - q2r)) * (s * s)
        total += term
        if abs(term) < SERIES_TRUNC * (1.0 + abs(total)):
            return total
        q2r *= q2
        r += 1
    return _NAN


# ----------------------------------------------------------------------
# Dormand-Prince 5(4) with PI step control and quartic dense output.
# ----------------------------------------------------------------------

RHS_CARTESIAN = 0  # params: (mu, eps);           y = (x, y, z, vx, vy, vz)
RHS_PARABOLIC = 1  # params: (eps, h, p_phi);     y = (xi, p_xi, eta, p_eta, phi, t)

STATUS_OK = 0
STATUS_STEP_LIMIT = 1
STATUS_COLLISION = 2
STATUS_ESCAPED = 3
STATUS_STEP_UNDERFLOW = 4


@maybe_jit
def _rhs(rhs_id: int, params, y, out):
    if rhs_id == 0:
        mu = params[0]
        eps = params[1]
        r2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2]
        r3 = r2 * math.sqrt(r2)
        out[0] = y[3]
        out[1] = y[4]
        out[2] = y[5]
        out[3] = -mu * y[0] / r3
        out[4] = -mu * y[1] / r3
        out[5] = -mu * y[2] / r3 + eps
    else:
        eps = params[0]
        h = params[1]
        pphi = params[2]
        xi = y[0]
        eta = y[2]
        out[0] = y[1]
        out[1] = 2.0 * eps * xi * xi * xi + 2.0 * h * xi + pphi * pphi / (xi * xi * xi)
        out[2] = y[3]
        out[3] = -2.0 * eps * eta * eta * eta + 2.0 * h * eta + pphi * pphi / (eta * eta * eta)
        out[4] = pphi * (1.0 / (xi * xi) + 1.0 / (eta * eta))
        out[5] = xi * xi + eta * eta


@maybe_jit
def dp54_integrate(
    rhs_id: int,
    params,
    y0,
    t0: float,
    t_eval,
    rtol: float,
    atol: float,
    max_steps: int,
    r_floor: float,
    r_escape: float,
):
    """Integrate from t0 through the monotone sample grid ``t_eval``.

    Returns ``(Y, status, n_filled, t_reached, n_steps, y_final)`` where
    ``Y`` holds dense-output samples at ``t_eval[:n_filled]`` and ``y_final``
    is the state at ``t_reached``.  ``r_floor``/``r_escape`` (cartesian
    system only; pass 0 to disable) stop integration with the
    collision/escape status when crossed.
    """
    ndim = 6
    nsamp = t_eval.shape[0]
    Y = np.empty((nsamp, ndim))
    t_end = t_eval[nsamp - 1] if nsamp > 0 else t0
    direction = 1.0 if t_end >= t0 else -1.0

    y = y0.copy()
    k = np.empty((7, ndim))
    ytmp = np.empty(ndim)
    y1 = np.empty(ndim)

    _rhs(rhs_id, params, y, k[0])

    isamp = 0
    while isamp < nsamp and t_eval[isamp] == t0:
        for j in range(ndim):
            Y[isamp, j] = y[j]
        isamp += 1

    # initial step from the scale of y and f (Hairer hinit, simplified)
    d0 = 0.0
    d1 = 0.0
    for j in range(ndim):
        sc = atol + rtol * abs(y[j])
        d0 += (y[j] / sc) ** 2
        d1 += (k[0][j] / sc) ** 2
    d0 = math.sqrt(d0 / ndim)
    d1 = math.sqrt(d1 / ndim)
    if d0 < 1e-5 or d1 < 1e-5:
        h = 1e-6
    else:
        h = 0.01 * d0 / d1
    span = abs(t_end - t0)
    if span > 0.0 and h > span:
        h = span
    h *= direction

    t = t0
    facold = 1e-4
    nsteps = 0
    status = STATUS_OK

    while isamp < nsamp:
        if nsteps >= max_steps:
            status = STATUS_STEP_LIMIT
            break
        if abs(h) < 1e-15 * max(1.0, abs(t)):
            status = STATUS_STEP_UNDERFLOW
            break
        if direction * (t + h - t_end) > 0.0:
            h = t_end - t

        # stages (DOPRI5 tableau)
        for j in range(ndim):
            ytmp[j] = y[j] + h * 0.2 * k[0][j]
        _rhs(rhs_id, params, ytmp, k[1])
        for j in range(ndim):
            ytmp[j] = y[j] + h * (3.0 / 40.0 * k[0][j] + 9.0 / 40.0 * k[1][j])
        _rhs(rhs_id, params, ytmp, k[2])
        for j in range(ndim):
            ytmp[j] = y[j] + h * (44.0 / 45.0 * k[0][j] - 56.0 / 15.0 * k[1][j] + 32.0 / 9.0 * k[2][j])
        _rhs(rhs_id, params, ytmp, k[3])
        for j in range(ndim):
            ytmp[j] = y[j] + h * (
                19372.0 / 6561.0 * k[0][j]
                - 25360.0 / 2187.0 * k[1][j]
                + 64448.0 / 6561.0 * k[2][j]
                - 212.0 / 729.0 * k[3][j]
            )
        _rhs(rhs_id, params, ytmp, k[4])
        for j in range(ndim):
            ytmp[j] = y[j] + h * (
                9017.0 / 3168.0 * k[0][j]
                - 355.0 / 33.0 * k[1][j]
                + 46732.0 / 5247.0 * k[2][j]
                + 49.0 / 176.0 * k[3][j]
                - 5103.0 / 18656.0 * k[4][j]
            )
        _rhs(rhs_id, params, ytmp, k[5])
        for j in range(ndim):
            y1[j] = y[j] + h * (
                35.0 / 384.0 * k[0][j]
                + 500.0 / 1113.0 * k[2][j]
                + 125.0 / 192.0 * k[3][j]
                - 2187.0 / 6784.0 * k[4][j]
                + 11.0 / 84.0 * k[5][j]
            )
        _rhs(rhs_id, params, y1, k[6])

        # embedded error estimate
        err = 0.0
        for j in range(ndim):
            e = h * (
                71.0 / 57600.0 * k[0][j]
                - 71.0 / 16695.0 * k[2][j]
                + 71.0 / 1920.0 * k[3][j]
                - 17253.0 / 339200.0 * k[4][j]
                + 22.0 / 525.0 * k[5][j]
                - 1.0 / 40.0 * k[6][j]
            )
            sc = atol + rtol * max(abs(y[j]), abs(y1[j]))
            err += (e / sc) ** 2
        err = math.sqrt(err / ndim)

        if err <= 1.0:
            # accept; dense output over (t, t+h]
            t_new = t + h
            while isamp < nsamp and direction * (t_eval[isamp] - t_new) <= 0.0:
                theta = (t_eval[isamp] - t) / h
                th1 = 1.0 - theta
                for j in range(ndim):
                    ydiff = y1[j] - y[j]
                    bspl = h * k[0][j] - ydiff
                    r1 = y[j]
                    r2 = ydiff
                    r3 = bspl
                    r4 = ydiff - h * k[6][j] - bspl
                    r5 = h * (
                        -12715105075.0 / 11282082432.0 * k[0][j]
                        + 87487479700.0 / 32700410799.0 * k[2][j]
                        - 10690763975.0 / 1880347072.0 * k[3][j]
                        + 701980252875.0 / 199316789632.0 * k[4][j]
                        - 1453857185.0 / 822651844.0 * k[5][j]
                        + 69997945.0 / 29380423.0 * k[6][j]
                    )
                    Y[isamp, j] = r1 + theta * (r2 + th1 * (r3 + theta * (r4 + th1 * r5)))
                isamp += 1
            for j in range(ndim):
                y[j] = y1[j]
                k[0][j] = k[6][j]
            t = t_new
            nsteps += 1

            if rhs_id == 0 and (r_floor > 0.0 or r_escape > 0.0):
                r = math.sqrt(y[0] * y[0] + y[1] * y[1] + y[2] * y[2])
                if r_floor > 0.0 and r < r_floor:
                    status = STATUS_COLLISION
                    break
                if r_escape > 0.0 and r > r_escape:
                    status = STATUS_ESCAPED
                    break

            fac11 = err ** 0.17 if err > 0.0 else 1e-10
            fac = fac11 / facold ** 0.04
            fac = max(0.2, min(5.0, fac / 0.9))
            h = h / fac
            facold = max(err, 1e-4)
            if direction * (t - t_end) >= 0.0:
                break
        else:
            fac11 = err ** 0.17
            h = h / min(5.0, fac11 / 0.9)
            nsteps += 1

    return Y, status, isamp, t, nsteps, y
