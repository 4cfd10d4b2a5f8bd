"""Recursive least squares with exponential forgetting.

One estimator per forecast horizon.  The update keeps the information matrix
R_t = lambda * R_{t-1} + x x^T and solves for the gain at every step; with
d around 50 the O(d^3) factorization is cheap and avoids the numerical
fragility of propagating an inverse.  The k-step lag pairing of regressors
and observations is the caller's job; the estimator itself is lag-agnostic.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from coldcast.errors import (
    ConditioningError,
    DimensionError,
    ParameterError,
    ParseError,
)

# Initial information matrix is DELTA * I: a small ridge prior that keeps the
# first solves well posed; its weight decays like lambda^t.
DELTA = 1e-3

# Relative ridge for the one retry after a failed factorization.
REG_EPS = 1e-8

MAGIC = "RLS1"


def forgetting_weight(lam: float, age_hours: float) -> float:
    """Weight lambda**age given to data age_hours old."""
    if not (0.0 < lam <= 1.0):
        raise ParameterError(f"lambda must be in (0,1], got {lam}")
    if age_hours < 0:
        raise ParameterError(f"age must be non-negative, got {age_hours}")
    return float(lam) ** float(age_hours)


class RlsState:
    """Coefficients theta, information matrix R, and forgetting factor."""

    def __init__(self, d: int, lam: float, delta: float = DELTA):
        if d < 1:
            raise DimensionError(f"dimension must be >= 1, got {d}")
        if not (0.5 < lam <= 1.0):
            raise ParameterError(
                f"lambda must be in (0.5, 1], got {lam}"
            )
        self.d = int(d)
        self.lam = float(lam)
        self.R = np.eye(self.d) * float(delta)
        self.theta = np.zeros(self.d)
        self.update_count = 0

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.d,):
            raise DimensionError(
                f"regressor shape {x.shape} does not match dimension {self.d}"
            )
        return x

    def update(self, x_lagged, y: float) -> "RlsState":
        """R <- lam*R + x x^T; theta <- theta + R^-1 x (y - x^T theta)."""
        x = self._check(x_lagged)
        self.R *= self.lam
        self.R += np.outer(x, x)
        w = _solve_spd(self.R, x)
        if w is None:
            ridge = REG_EPS * np.trace(self.R) / self.d
            w = _solve_spd(self.R + ridge * np.eye(self.d), x)
            if w is None:
                raise ConditioningError(
                    f"information matrix singular after {self.update_count} "
                    "updates, even with ridge retry"
                )
        self.theta += w * (float(y) - x @ self.theta)
        self.update_count += 1
        return self

    def predict(self, x_now) -> float:
        """Inner product x^T theta with the current estimates."""
        x = self._check(x_now)
        return float(x @ self.theta)


def _solve_spd(M, b):
    try:
        c = cho_factor(M, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        return None
    return cho_solve(c, b, check_finite=False)


def rls_update(state: RlsState, x_lagged, y: float) -> RlsState:
    """Functional alias for RlsState.update."""
    return state.update(x_lagged, y)


def rls_predict(state: RlsState, x_now) -> float:
    """Functional alias for RlsState.predict."""
    return state.predict(x_now)


def save_state(state: RlsState, path) -> None:
    """Dump (d, lambda, update_count, R, theta) as versioned text."""
    with open(path, "w") as fh:
        fh.write(MAGIC + "\n")
        fh.write(f"{state.d} {repr(state.lam)} {state.update_count}\n")
        for i in range(state.d):
            fh.write(" ".join(repr(float(v)) for v in state.R[i]) + "\n")
        fh.write(" ".join(repr(float(v)) for v in state.theta) + "\n")


def load_state(path) -> RlsState:
    """Read a dump written by save_state."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != MAGIC:
        raise ParseError(f"{path}: missing {MAGIC} header")
    try:
        head = lines[1].split()
        d = int(head[0])
        lam = float(head[1])
        count = int(head[2])
        R = np.array(
            [[float(v) for v in lines[2 + i].split()] for i in range(d)]
        )
        theta = np.array([float(v) for v in lines[2 + d].split()])
    except (IndexError, ValueError) as exc:
        raise ParseError(f"{path}: malformed state dump: {exc}") from None
    if R.shape != (d, d) or theta.shape != (d,):
        raise ParseError(f"{path}: state dimensions inconsistent")
    st = RlsState(d, lam)
    st.R = R
    st.theta = theta
    st.update_count = count
    return st
