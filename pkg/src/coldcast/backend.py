"""Kernel backend selection.

The hot numeric kernels (per-horizon RLS sweep, low-pass filter scan,
spline curve evaluation) exist twice: a numba ``@njit`` implementation in
:mod:`coldcast._kernels_numba` and a pure numpy/scipy implementation in
:mod:`coldcast._kernels_numpy`.  Which one the package uses is decided once
at import time from the ``COLDCAST_BACKEND`` environment variable:

* ``auto`` (default) -- use numba if it imports and compiles, else numpy.
* ``numba``          -- require numba; raise if unavailable.
* ``numpy``          -- force the pure numpy path.

Both implementations are kept numerically interchangeable (same update
order, same regularization fallback); the test suite cross-checks them.
"""

from __future__ import annotations

import os

_ENV_VAR = "COLDCAST_BACKEND"

_kernels = None
_name = None


def _load(flag: str):
    if flag == "numpy":
        from coldcast import _kernels_numpy as mod
        return mod, "numpy"
    if flag == "numba":
        from coldcast import _kernels_numba as mod
        return mod, "numba"
    if flag == "auto":
        try:
            from coldcast import _kernels_numba as mod
            return mod, "numba"
        except ImportError:
            from coldcast import _kernels_numpy as mod
            return mod, "numpy"
    raise ValueError(
        f"{_ENV_VAR} must be one of auto/numba/numpy, got {flag!r}"
    )


def _init():
    global _kernels, _name
    if _kernels is None:
        flag = os.environ.get(_ENV_VAR, "auto").strip().lower() or "auto"
        _kernels, _name = _load(flag)
    return _kernels


def active_backend() -> str:
    """Name of the kernel backend in use ('numba' or 'numpy')."""
    _init()
    return _name


def kernels():
    """The active kernel module."""
    return _init()


def numpy_kernels():
    """The pure numpy kernel module, regardless of the active backend."""
    from coldcast import _kernels_numpy as mod
    return mod


def numba_kernels():
    """The numba kernel module; raises ImportError if numba is missing."""
    from coldcast import _kernels_numba as mod
    return mod


def lowpass_scan(x, a, y0, has_state):
    return _init().lowpass_scan(x, a, y0, has_state)


def extend_filtered(y_obs, eff, a, k):
    return _init().extend_filtered(y_obs, eff, a, k)


def spline_curve(knots, degree, coeffs, xs):
    return _init().spline_curve(knots, degree, coeffs, xs)


def sweep_horizon(load, drows, fixed_ind, ft, u, v, k, lam, lam_rgm,
                  n_har, var_regime, delta):
    return _init().sweep_horizon(load, drows, fixed_ind, ft, u, v, k, lam,
                                 lam_rgm, n_har, var_regime, delta)
