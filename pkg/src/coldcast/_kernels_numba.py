"""Numba implementations of the hot numeric kernels.

Importing this module requires numba; :mod:`coldcast.backend` falls back to
the numpy twins in :mod:`coldcast._kernels_numpy` when it is missing.  Both
modules implement identical signatures and identical update ordering so that
results agree to floating-point roundoff.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# Relative ridge added to a recursion matrix when its Cholesky factorization
# fails; one retry, then the sweep aborts with an error code.
REG_EPS = 1e-8


@njit(cache=True)
def _chol_solve(A, b, L, w):
    """Solve A w = b for symmetric positive definite A via Cholesky.

    L and w are caller-provided scratch/output buffers.  Returns 0 on
    success, 1 if the factorization hits a non-positive pivot.
    """
    d = A.shape[0]
    for i in range(d):
        for j in range(i + 1):
            s = A[i, j]
            for m in range(j):
                s -= L[i, m] * L[j, m]
            if i == j:
                if s <= 0.0:
                    return 1
                L[i, i] = np.sqrt(s)
            else:
                L[i, j] = s / L[j, j]
    for i in range(d):
        s = b[i]
        for m in range(i):
            s -= L[i, m] * w[m]
        w[i] = s / L[i, i]
    for i in range(d - 1, -1, -1):
        s = w[i]
        for m in range(i + 1, d):
            s -= L[m, i] * w[m]
        w[i] = s / L[i, i]
    return 0


@njit(cache=True)
def _rls_update(R, theta, x, y, lam, L, w, A):
    """One forgetting-factor RLS step, in place.  Returns 0 ok, 1 singular."""
    d = R.shape[0]
    for i in range(d):
        for j in range(d):
            R[i, j] = lam * R[i, j] + x[i] * x[j]
    rc = _chol_solve(R, x, L, w)
    if rc != 0:
        tr = 0.0
        for i in range(d):
            tr += R[i, i]
        ridge = REG_EPS * tr / d
        for i in range(d):
            for j in range(d):
                A[i, j] = R[i, j]
            A[i, i] += ridge
        rc = _chol_solve(A, x, L, w)
        if rc != 0:
            return 1
    e = y
    for i in range(d):
        e -= x[i] * theta[i]
    for i in range(d):
        theta[i] += w[i] * e
    return 0


@njit(cache=True)
def lowpass_scan(x, a, y0, has_state):
    """First-order low-pass filter y_t = a*y_{t-1} + (1-a)*x_t.

    With has_state the recursion starts from prior output y0; otherwise the
    first output equals the first input.
    """
    n = x.shape[0]
    y = np.empty(n)
    if n == 0:
        return y
    if has_state:
        y[0] = a * y0 + (1.0 - a) * x[0]
    else:
        y[0] = x[0]
    for t in range(1, n):
        y[t] = a * y[t - 1] + (1.0 - a) * x[t]
    return y


@njit(cache=True)
def extend_filtered(y_obs, eff, a, k):
    """Extend per-time filter states k steps through forecast values.

    y_obs[t] is the filter output after consuming observations up to t;
    eff[t, j] is the forecast for time t+j+1 that is available at t.  The
    result ft[t] is the filter output at target time t+k, seen from t.
    Missing forecast values propagate as NaN.
    """
    n = y_obs.shape[0]
    ft = np.empty(n)
    for t in range(n):
        s = y_obs[t]
        for j in range(k):
            s = a * s + (1.0 - a) * eff[t, j]
        ft[t] = s
    return ft


@njit(cache=True)
def _find_span(knots, degree, n_basis, x):
    lo = degree
    hi = n_basis
    # rightmost index i in [degree, n_basis-1] with knots[i] <= x < knots[i+1]
    if x >= knots[hi]:
        span = hi - 1
    elif x <= knots[lo]:
        span = lo
    else:
        a = lo
        b = hi
        while b - a > 1:
            mid = (a + b) // 2
            if knots[mid] <= x:
                a = mid
            else:
                b = mid
        span = a
    while span > degree and knots[span] == knots[span + 1]:
        span -= 1
    return span


@njit(cache=True)
def _basis_funs(knots, degree, span, x, vals, left, right):
    vals[0] = 1.0
    for j in range(1, degree + 1):
        left[j] = x - knots[span + 1 - j]
        right[j] = knots[span + j] - x
        saved = 0.0
        for r in range(j):
            tmp = vals[r] / (right[r + 1] + left[j - r])
            vals[r] = saved + right[r + 1] * tmp
            saved = left[j - r] * tmp
        vals[j] = saved


@njit(cache=True)
def spline_curve(knots, degree, coeffs, xs):
    """Evaluate a clamped B-spline with given coefficients at points xs.

    Inputs outside the knot span are clamped to the boundary; NaN inputs
    yield NaN outputs.
    """
    n_basis = knots.shape[0] - degree - 1
    lo = knots[degree]
    hi = knots[n_basis]
    m = xs.shape[0]
    ys = np.empty(m)
    vals = np.empty(degree + 1)
    left = np.empty(degree + 1)
    right = np.empty(degree + 1)
    for i in range(m):
        x = xs[i]
        if np.isnan(x):
            ys[i] = np.nan
            continue
        if x < lo:
            x = lo
        elif x > hi:
            x = hi
        span = _find_span(knots, degree, n_basis, x)
        _basis_funs(knots, degree, span, x, vals, left, right)
        s = 0.0
        for r in range(degree + 1):
            s += vals[r] * coeffs[span - degree + r]
        ys[i] = s
    return ys


@njit(cache=True)
def sweep_horizon(load, drows, fixed_ind, ft, u, v, k, lam, lam_rgm,
                  n_har, var_regime, delta):
    """Run one forecast horizon end to end: interleaved RLS updates and
    k-step-ahead predictions over the whole series.

    Arguments are issue-time aligned: drows[t] is the diurnal basis row for
    target time t+k, fixed_ind[t] the fixed opening indicator at t+k, ft[t]
    the k-step filtered temperature issued at t, and u[t]/v[t] the open- and
    closed-regime temperature terms entering the regressor (equal to ft for
    the linear models, spline-transformed for the nonlinear one).

    Returns (fc, rg, theta, R, theta_rgm, R_rgm, n_upd, n_upd_rgm,
    err, err_t) where fc[t] is the forecast issued at t for t+k, rg[t] the
    regime indicator used for that forecast, and err is 0 on success, 1 or 2
    if the main or regime recursion matrix became numerically singular at
    time err_t.
    """
    n = load.shape[0]
    nb = 4 * n_har
    d = nb + 4
    d_rgm = nb + 2

    R = np.zeros((d, d))
    theta = np.zeros(d)
    R_rgm = np.zeros((d_rgm, d_rgm))
    theta_rgm = np.zeros(d_rgm)
    for i in range(d):
        R[i, i] = delta
    for i in range(d_rgm):
        R_rgm[i, i] = delta

    L = np.zeros((d, d))
    w = np.zeros(d)
    A = np.zeros((d, d))
    L2 = np.zeros((d_rgm, d_rgm))
    w2 = np.zeros(d_rgm)
    A2 = np.zeros((d_rgm, d_rgm))

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
                    rc = _rls_update(R, theta, xbuf[s_upd], y, lam, L, w, A)
                    if rc != 0:
                        return (fc, rg, theta, R, theta_rgm, R_rgm,
                                n_upd, n_upd_rgm, 1, t)
                    n_upd += 1
                if var_regime == 1 and gval[s_upd] == 1:
                    rc = _rls_update(R_rgm, theta_rgm, gbuf[s_upd], y,
                                     lam_rgm, L2, w2, A2)
                    if rc != 0:
                        return (fc, rg, theta, R, theta_rgm, R_rgm,
                                n_upd, n_upd_rgm, 2, t)
                    n_upd_rgm += 1

        ft_t = ft[t]
        ok_ft = np.isfinite(ft_t)

        if var_regime == 1:
            mu = 0.0
            for i in range(nb):
                mu += drows[t, i] * theta_rgm[i]
            ind = 1.0 if mu >= 0.0 else 0.0
        else:
            ind = fixed_ind[t]
        rg[t] = np.int8(ind)

        ok = ok_ft and np.isfinite(u[t]) and np.isfinite(v[t])
        s_t = t % nslot
        if ok:
            for i in range(nb):
                xrow[i] = drows[t, i]
            xrow[nb] = ind
            xrow[nb + 1] = ind * u[t]
            xrow[nb + 2] = 1.0 - ind
            xrow[nb + 3] = (1.0 - ind) * v[t]
            p = 0.0
            for i in range(d):
                p += xrow[i] * theta[i]
            fc[t] = p
            for i in range(d):
                xbuf[s_t, i] = xrow[i]
            xval[s_t] = 1
        else:
            fc[t] = np.nan
            xval[s_t] = 0

        if var_regime == 1:
            if ok_ft:
                for i in range(nb):
                    grow[i] = drows[t, i]
                grow[nb] = 1.0
                grow[nb + 1] = ft_t
                for i in range(d_rgm):
                    gbuf[s_t, i] = grow[i]
                gval[s_t] = 1
            else:
                gval[s_t] = 0

    return (fc, rg, theta, R, theta_rgm, R_rgm, n_upd, n_upd_rgm, 0, -1)
