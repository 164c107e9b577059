"""Kernel benchmark: numba-compiled vs pure-Python paths.

Run as ``python -m starkprop.bench``.  Times the three hot kernels (theta
series, Carlson R_F, the DP54 integrator loop) through the compiled
dispatchers when numba is active and through the undecorated Python source
either way, so one run shows the speedup the JIT buys on this machine.
Force the pure path globally with ``STARKPROP_NO_NUMBA=1``.
"""

from __future__ import annotations

import cmath
import time

import numpy as np

from . import kernels
from .backend import pure_variant, using_numba


def _time(fn, *args, repeat: int = 5, number: int = 1) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(number):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / number)
    return best


def _bench_theta(fn, n=2000):
    lnq = cmath.log(0.04321391826377226 + 0j)
    def run():
        v = 0.31 + 0.12j
        for k in range(n):
            fn(v + 0.0007j * k, lnq)
    return run


def _bench_rf(fn, n=2000):
    def run():
        for k in range(n):
            fn(0.0, 1.0 + 0.0003 * k, 2.0 - 0.0001j * k)
    return run


def _bench_dp54(fn, t_end=200.0):
    params = np.array([1.0, 0.05])
    y0 = np.array([1.0, 0.1, 0.25, 0.05, 0.95, 0.18])
    grid = np.linspace(0.0, t_end, 50)
    def run():
        fn(kernels.RHS_CARTESIAN, params, y0, 0.0, grid, 1e-11, 1e-13,
           5_000_000, 0.0, 0.0)
    return run


def main() -> int:
    rows = []
    for name, fn, builder, per_call in (
        ("theta_eval (2000 pts)", kernels.theta_eval, _bench_theta, 2000),
        ("carlson_rf (2000 pts)", kernels.carlson_rf, _bench_rf, 2000),
        ("dp54 cartesian 200 tu", kernels.dp54_integrate, _bench_dp54, 1),
    ):
        pure = pure_variant(fn)
        if builder is _bench_dp54:
            # the loop kernel calls the rhs through the module binding; the
            # pure timing therefore needs the compiled flag off at import,
            # so only report it when running without numba
            compiled_t = _time(builder(fn)) if using_numba() else None
            pure_t = _time(builder(fn)) if not using_numba() else None
        else:
            compiled_t = _time(builder(fn)) if using_numba() else None
            pure_t = _time(builder(pure))
        rows.append((name, per_call, compiled_t, pure_t))

    backend = "numba" if using_numba() else "pure python/numpy"
    print(f"starkprop kernel benchmark  (active backend: {backend})")
    print(f"{'kernel':28s} {'numba':>12s} {'pure':>12s} {'speedup':>9s}")
    for name, _, ct, pt in rows:
        c = f"{ct*1e3:9.3f} ms" if ct is not None else "        --"
        p = f"{pt*1e3:9.3f} ms" if pt is not None else "        --"
        s = f"{pt/ct:8.1f}x" if (ct and pt) else "       --"
        print(f"{name:28s} {c:>12s} {p:>12s} {s:>9s}")
    if using_numba():
        print("note: dp54 pure timing requires STARKPROP_NO_NUMBA=1 "
              "(its inner rhs binds at import)")
    return 0


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
