"""Pure-Python kernels.

Line-for-line twin of ``_kernels.pyx``; used when the compiled extension is
missing or ``REINS_PURE_PYTHON=1`` is set.  Keep the arithmetic order
identical in both files so results agree to rounding.
"""

from __future__ import annotations

import math

import numpy as np

EXP_LIMIT = 700.0


def riccati_rhs(A, L, H, xi, kappa, sigma, rho0, alpha, gamma, beta0, betaY, appendix):
    ahat = 1.0 - alpha
    tilt = 2.0 * alpha - 1.0
    denom = gamma + tilt * beta0
    vol_load = beta0 * rho0 * rho0 + betaY * (1.0 - rho0 * rho0)
    num = xi - tilt * beta0 * rho0 * sigma * A - gamma * sigma * rho0 * (alpha * L + ahat * H)
    pihat = num / denom
    s2 = sigma * sigma
    if appendix:
        dA = (
            kappa * A
            - 0.5 * tilt * s2 * vol_load * A * A
            + 0.5 * s2 * (alpha * L * L + ahat * H * H)
            - num * num / (2.0 * denom)
        )
    else:
        dA = (
            kappa * A
            + 0.5 * tilt * s2 * vol_load * A * A
            + 0.5 * gamma * s2 * (alpha * L * L + ahat * H * H)
            - num * num / (2.0 * denom)
        )
    dL = (
        kappa * L
        - xi * pihat
        + beta0 * pihat * pihat
        + sigma * beta0 * pihat * (A + L)
        + s2 * vol_load * A * L
    )
    dH = (
        kappa * H
        - xi * pihat
        - beta0 * pihat * pihat
        - sigma * beta0 * pihat * (A + H)
        - s2 * vol_load * A * H
    )
    return dA, dL, dH


def riccati_backward(t, xi, kappa, sigma, rho0, alpha, gamma, beta0, betaY, appendix, threshold):
    """Classical RK4 from (0, 0, 0) at t[-1] down to t[0].

    Returns ``(values, derivs, fail_index)``; ``fail_index`` is -1 on success,
    otherwise the grid index at which a component first exceeded ``threshold``.
    """
    t = np.asarray(t, dtype=float).tolist()
    n = len(t) - 1
    values = np.zeros((n + 1, 3))
    derivs = np.zeros((n + 1, 3))
    p = (xi, kappa, sigma, rho0, alpha, gamma, beta0, betaY, appendix)
    A = L = H = 0.0
    for k in range(n, 0, -1):
        h = t[k] - t[k - 1]
        hh = 0.5 * h
        k1 = riccati_rhs(A, L, H, *p)
        derivs[k, 0], derivs[k, 1], derivs[k, 2] = k1
        k2 = riccati_rhs(A - hh * k1[0], L - hh * k1[1], H - hh * k1[2], *p)
        k3 = riccati_rhs(A - hh * k2[0], L - hh * k2[1], H - hh * k2[2], *p)
        k4 = riccati_rhs(A - h * k3[0], L - h * k3[1], H - h * k3[2], *p)
        A = A - h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        L = L - h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
        H = H - h / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
        values[k - 1, 0] = A
        values[k - 1, 1] = L
        values[k - 1, 2] = H
        if not (abs(A) <= threshold and abs(L) <= threshold and abs(H) <= threshold):
            return values, derivs, k - 1
    derivs[0, 0], derivs[0, 1], derivs[0, 2] = riccati_rhs(A, L, H, *p)
    return values, derivs, -1


def retention_foc(a0, eta, alpha, gamma, beta):
    s = beta * (a0 + 0.5 * gamma * a0 * a0)
    if s > EXP_LIMIT:
        return -math.inf
    return (1.0 + eta) - (1.0 + gamma * a0) * (alpha * math.exp(s) + (1.0 - alpha) * math.exp(-s))


def solve_retention(eta, alpha, gamma, beta, abs_tol, rel_tol):
    """Bracket by doubling, then bisect.  Returns nan if no bracket is found."""
    lo = 0.0
    hi = 1.0
    fhi = retention_foc(hi, eta, alpha, gamma, beta)
    while fhi >= 0.0:
        lo = hi
        hi *= 2.0
        if hi > 1e300:
            return math.nan
        fhi = retention_foc(hi, eta, alpha, gamma, beta)
    flo = retention_foc(lo, eta, alpha, gamma, beta)
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fmid = retention_foc(mid, eta, alpha, gamma, beta)
        if fmid == 0.0:
            return mid
        if fmid > 0.0:
            lo, flo = mid, fmid
        else:
            hi, fhi = mid, fmid
        if hi - lo <= rel_tol * lo and min(abs(flo), abs(fhi)) <= abs_tol:
            break
    return lo if abs(flo) <= abs(fhi) else hi
