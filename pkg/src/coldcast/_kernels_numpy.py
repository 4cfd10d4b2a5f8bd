"""Pure numpy/scipy implementations of the hot numeric kernels.

Fallback twins of :mod:`coldcast._kernels_numba` with identical signatures
and identical update ordering.  Kept importable without numba so the package
works (more slowly) on interpreters where JIT compilation is unavailable.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.signal import lfilter

REG_EPS = 1e-8


def _solve_spd(M, b):
    """Solve M w = b for symmetric positive definite M, or None on failure."""
    try:
        c = cho_factor(M, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        return None
    return cho_solve(c, b, check_finite=False)


def _rls_update(R, theta, x, y, lam):
    """One forgetting-factor RLS step, in place.  Returns 0 ok, 1 singular."""
    R *= lam
    R += np.outer(x, x)
    w = _solve_spd(R, x)
    if w is None:
        d = R.shape[0]
        ridge = REG_EPS * np.trace(R) / d
        w = _solve_spd(R + ridge * np.eye(d), x)
        if w is None:
            return 1
    theta += w * (y - x @ theta)
    return 0


def lowpass_scan(x, a, y0, has_state):
    """First-order low-pass filter y_t = a*y_{t-1} + (1-a)*x_t.

    With has_state the recursion starts from prior output y0; otherwise the
    first output equals the first input.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] == 0:
        return np.empty(0)
    prior = y0 if has_state else x[0]
    zi = np.array([a * prior])
    y, _ = lfilter(np.array([1.0 - a]), np.array([1.0, -a]), x, zi=zi)
    return y


def extend_filtered(y_obs, eff, a, k):
    """Extend per-time filter states k steps through forecast values.

    See the numba twin for semantics.
    """
    s = np.array(y_obs, dtype=np.float64, copy=True)
    for j in range(k):
        s = a * s + (1.0 - a) * eff[:, j]
    return s


def spline_curve(knots, degree, coeffs, xs):
    """Evaluate a clamped B-spline with given coefficients at points xs.

    Inputs outside the knot span are clamped to the boundary; NaN inputs
    yield NaN outputs.
    """
    xs = np.asarray(xs, dtype=np.float64)
    n_basis = knots.shape[0] - degree - 1
    lo = knots[degree]
    hi = knots[n_basis]
    x = np.clip(xs, lo, hi)
    finite = np.isfinite(x)
    xw = np.where(finite, x, lo)
    span = np.searchsorted(knots, xw, side="right") - 1
    span = np.clip(span, degree, n_basis - 1)
    for _ in range(degree):
        bad = (span > degree) & (knots[span + 1] == knots[span])
        if not bad.any():
            break
        span = np.where(bad, span - 1, span)

    m = xw.shape[0]
    vals = np.zeros((m, degree + 1))
    left = np.zeros((m, degree + 1))
    right = np.zeros((m, degree + 1))
    vals[:, 0] = 1.0
    for j in range(1, degree + 1):
        left[:, j] = xw - knots[span + 1 - j]
        right[:, j] = knots[span + j] - xw
        saved = np.zeros(m)
        for r in range(j):
            tmp = vals[:, r] / (right[:, r + 1] + left[:, j - r])
            vals[:, r] = saved + right[:, r + 1] * tmp
            saved = left[:, j - r] * tmp
        vals[:, j] = saved

    ys = np.zeros(m)
    for r in range(degree + 1):
        ys += vals[:, r] * coeffs[span - degree + r]
    ys[~finite] = np.nan
    return ys


def sweep_horizon(load, drows, fixed_ind, ft, u, v, k, lam, lam_rgm,
                  n_har, var_regime, delta):
    """Run one forecast horizon end to end.  See the numba twin for the
    argument conventions and return layout."""
    n = load.shape[0]
    nb = 4 * n_har
    d = nb + 4
    d_rgm = nb + 2

    R = np.eye(d) * delta
    theta = np.zeros(d)
    R_rgm = np.eye(d_rgm) * delta
    theta_rgm = np.zeros(d_rgm)

    nslot = k + 1
    xbuf = np.zeros((nslot, d))
    gbuf = np.zeros((nslot, d_rgm))
    xval = np.zeros(nslot, np.uint8)
    gval = np.zeros(nslot, np.uint8)

    fc = np.full(n, np.nan)
    rg = np.full(n, -1, np.int8)
    xrow = np.zeros(d)
    grow = np.zeros(d_rgm)

    n_upd = 0
    n_upd_rgm = 0

    for t in range(n):
        if t >= k:
            s_upd = (t + 1) % nslot
            y = load[t]
            if np.isfinite(y):
                if xval[s_upd] == 1:
                    rc = _rls_update(R, theta, xbuf[s_upd], y, lam)
                    if rc != 0:
                        return (fc, rg, theta, R, theta_rgm, R_rgm,
                                n_upd, n_upd_rgm, 1, t)
                    n_upd += 1
                if var_regime == 1 and gval[s_upd] == 1:
                    rc = _rls_update(R_rgm, theta_rgm, gbuf[s_upd], y,
                                     lam_rgm)
                    if rc != 0:
                        return (fc, rg, theta, R, theta_rgm, R_rgm,
                                n_upd, n_upd_rgm, 2, t)
                    n_upd_rgm += 1

        ft_t = ft[t]
        ok_ft = bool(np.isfinite(ft_t))

        if var_regime == 1:
            mu = float(drows[t] @ theta_rgm[:nb])
            ind = 1.0 if mu >= 0.0 else 0.0
        else:
            ind = fixed_ind[t]
        rg[t] = np.int8(ind)

        ok = ok_ft and bool(np.isfinite(u[t])) and bool(np.isfinite(v[t]))
        s_t = t % nslot
        if ok:
            xrow[:nb] = drows[t]
            xrow[nb] = ind
            xrow[nb + 1] = ind * u[t]
            xrow[nb + 2] = 1.0 - ind
            xrow[nb + 3] = (1.0 - ind) * v[t]
            fc[t] = xrow @ theta
            xbuf[s_t] = xrow
            xval[s_t] = 1
        else:
            fc[t] = np.nan
            xval[s_t] = 0

        if var_regime == 1:
            if ok_ft:
                grow[:nb] = drows[t]
                grow[nb] = 1.0
                grow[nb + 1] = ft_t
                gbuf[s_t] = grow
                gval[s_t] = 1
            else:
                gval[s_t] = 0

    return (fc, rg, theta, R, theta_rgm, R_rgm, n_upd, n_upd_rgm, 0, -1)
