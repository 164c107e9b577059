"""Real-coefficient cubic root finding.

Roots come from the companion-matrix eigenvalues (numpy.roots), then each is
polished with a few complex Newton steps; real roots and conjugate pairs are
snapped exactly so downstream case analysis can branch on root type without
tolerance juggling.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import NonFinite


def cubic_roots(c3: float, c2: float, c1: float, c0: float) -> list[complex]:
    """Roots of c3 s^3 + c2 s^2 + c1 s + c0 with c3 != 0.

    Returns three complex roots, either all real (as complex with zero
    imaginary part) or one real plus a conjugate pair with the +Im member
    first.  Real roots are sorted ascending.
    """
    coeffs = (c3, c2, c1, c0)
    if not all(math.isfinite(c) for c in coeffs):
        raise NonFinite("cubic coefficients must be finite", coefficients=coeffs)
    raw = np.roots(coeffs)

    scale = max(abs(c) for c in coeffs)
    polished = []
    for r in raw:
        t = complex(r)
        for _ in range(3):
            f = ((c3 * t + c2) * t + c1) * t + c0
            fp = (3.0 * c3 * t + 2.0 * c2) * t + c1
            if fp == 0:
                break
            t -= f / fp
        polished.append(t)

    # classify: a real cubic has either 3 real roots or 1 real + conj pair
    rscale = max(1.0, max(abs(t) for t in polished))
    imag_tol = 1e-9 * rscale
    reals = [t for t in polished if abs(t.imag) <= imag_tol]
    if len(reals) >= 3:
        out = sorted((complex(t.real, 0.0) for t in polished), key=lambda z: z.real)
        return out
    if len(reals) == 2:
        # borderline double root seen as a tight conjugate pair or vice versa;
        # keep the most-real one as the real root
        reals = [min(polished, key=lambda t: abs(t.imag))]
    real_root = complex(reals[0].real, 0.0)
    pair = [t for t in polished if t is not reals[0]]
    if len(pair) != 2:
        pair = sorted(polished, key=lambda t: abs(t.imag))[1:]
    avg = 0.5 * (pair[0] + pair[1].conjugate())
    up = complex(avg.real, abs(avg.imag))
    return [up, real_root, up.conjugate()]


def real_roots(c3: float, c2: float, c1: float, c0: float) -> list[float]:
    """Ascending real roots of the cubic (empty imaginary parts stripped)."""
    rts = cubic_roots(c3, c2, c1, c0)
    return sorted(r.real for r in rts if r.imag == 0.0)
