"""Kernel backend selection.

Hot numeric kernels in :mod:`starkprop.kernels` are written as plain
scalar/ndarray functions and compiled with numba when it is importable.
Setting the environment variable ``STARKPROP_NO_NUMBA=1`` (or any non-empty
value other than ``0``) forces the pure-Python/numpy fallback; the two paths
run the same source.  ``python -m starkprop.bench`` times one against the
other.
"""

from __future__ import annotations

import os

_flag = os.environ.get("STARKPROP_NO_NUMBA", "").strip().lower()
_DISABLED = _flag not in ("", "0", "false", "no")

if not _DISABLED:
    try:
        from numba import njit as _njit

        _HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - depends on install
        _HAVE_NUMBA = False
else:
    _HAVE_NUMBA = False


def using_numba() -> bool:
    """True when kernels are numba-compiled in this process."""
    return _HAVE_NUMBA


def maybe_jit(func):
    """Compile ``func`` with numba when enabled, else return it unchanged.

    The undecorated function stays importable as ``<name>_py`` through
    :func:`pure_variant` for benchmarking.
    """
    if _HAVE_NUMBA:
        return _njit(cache=True, fastmath=False)(func)
    return func


def pure_variant(func):
    """Return the uncompiled python callable behind a kernel."""
    return getattr(func, "py_func", func)
