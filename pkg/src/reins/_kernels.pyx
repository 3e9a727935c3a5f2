# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: Riccati right-hand side, backward RK4, retention root.

Same algorithms and arithmetic order as ``_kernels_py.py``.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, fabs, INFINITY, NAN

cnp.import_array()

cdef double EXP_LIMIT = 700.0


cdef inline void _rhs(double A, double L, double H,
                      double xi, double kappa, double sigma, double rho0,
                      double alpha, double gamma, double beta0, double betaY,
                      bint appendix, double* out) noexcept nogil:
    cdef double ahat = 1.0 - alpha
    cdef double tilt = 2.0 * alpha - 1.0
    cdef double denom = gamma + tilt * beta0
    cdef double vol_load = beta0 * rho0 * rho0 + betaY * (1.0 - rho0 * rho0)
    cdef double num = xi - tilt * beta0 * rho0 * sigma * A - gamma * sigma * rho0 * (alpha * L + ahat * H)
    cdef double pihat = num / denom
    cdef double s2 = sigma * sigma
    if appendix:
        out[0] = (kappa * A
                  - 0.5 * tilt * s2 * vol_load * A * A
                  + 0.5 * s2 * (alpha * L * L + ahat * H * H)
                  - num * num / (2.0 * denom))
    else:
        out[0] = (kappa * A
                  + 0.5 * tilt * s2 * vol_load * A * A
                  + 0.5 * gamma * s2 * (alpha * L * L + ahat * H * H)
                  - num * num / (2.0 * denom))
    out[1] = (kappa * L
              - xi * pihat
              + beta0 * pihat * pihat
              + sigma * beta0 * pihat * (A + L)
              + s2 * vol_load * A * L)
    out[2] = (kappa * H
              - xi * pihat
              - beta0 * pihat * pihat
              - sigma * beta0 * pihat * (A + H)
              - s2 * vol_load * A * H)


def riccati_rhs(double A, double L, double H, double xi, double kappa, double sigma,
                double rho0, double alpha, double gamma, double beta0, double betaY,
                bint appendix):
    cdef double out[3]
    _rhs(A, L, H, xi, kappa, sigma, rho0, alpha, gamma, beta0, betaY, appendix, out)
    return out[0], out[1], out[2]


def riccati_backward(t, double xi, double kappa, double sigma, double rho0,
                     double alpha, double gamma, double beta0, double betaY,
                     bint appendix, double threshold):
    cdef double[::1] tv = np.ascontiguousarray(t, dtype=np.float64)
    cdef Py_ssize_t n = tv.shape[0] - 1
    values_arr = np.zeros((n + 1, 3))
    derivs_arr = np.zeros((n + 1, 3))
    cdef double[:, ::1] values = values_arr
    cdef double[:, ::1] derivs = derivs_arr
    cdef double A = 0.0, L = 0.0, H = 0.0
    cdef double h, hh
    cdef double k1[3]
    cdef double k2[3]
    cdef double k3[3]
    cdef double k4[3]
    cdef Py_ssize_t k
    cdef Py_ssize_t fail = -1
    with nogil:
        for k in range(n, 0, -1):
            h = tv[k] - tv[k - 1]
            hh = 0.5 * h
            _rhs(A, L, H, xi, kappa, sigma, rho0, alpha, gamma, beta0, betaY, appendix, k1)
            derivs[k, 0] = k1[0]
            derivs[k, 1] = k1[1]
            derivs[k, 2] = k1[2]
            _rhs(A - hh * k1[0], L - hh * k1[1], H - hh * k1[2],
                 xi, kappa, sigma, rho0, alpha, gamma, beta0, betaY, appendix, k2)
            _rhs(A - hh * k2[0], L - hh * k2[1], H - hh * k2[2],
                 xi, kappa, sigma, rho0, alpha, gamma, beta0, betaY, appendix, k3)
            _rhs(A - h * k3[0], L - h * k3[1], H - h * k3[2],
                 xi, kappa, sigma, rho0, alpha, gamma, beta0, betaY, appendix, k4)
            A = A - h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
            L = L - h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
            H = H - h / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
            values[k - 1, 0] = A
            values[k - 1, 1] = L
            values[k - 1, 2] = H
            if not (fabs(A) <= threshold and fabs(L) <= threshold and fabs(H) <= threshold):
                fail = k - 1
                break
        if fail < 0:
            _rhs(A, L, H, xi, kappa, sigma, rho0, alpha, gamma, beta0, betaY, appendix, k1)
            derivs[0, 0] = k1[0]
            derivs[0, 1] = k1[1]
            derivs[0, 2] = k1[2]
    return values_arr, derivs_arr, fail


cdef inline double _foc(double a0, double eta, double alpha, double gamma, double beta) noexcept nogil:
    cdef double s = beta * (a0 + 0.5 * gamma * a0 * a0)
    if s > EXP_LIMIT:
        return -INFINITY
    return (1.0 + eta) - (1.0 + gamma * a0) * (alpha * exp(s) + (1.0 - alpha) * exp(-s))


def retention_foc(double a0, double eta, double alpha, double gamma, double beta):
    return _foc(a0, eta, alpha, gamma, beta)


def solve_retention(double eta, double alpha, double gamma, double beta,
                    double abs_tol, double rel_tol):
    cdef double lo = 0.0, hi = 1.0, mid, flo, fhi, fmid
    cdef int i
    fhi = _foc(hi, eta, alpha, gamma, beta)
    while fhi >= 0.0:
        lo = hi
        hi *= 2.0
        if hi > 1e300:
            return NAN
        fhi = _foc(hi, eta, alpha, gamma, beta)
    flo = _foc(lo, eta, alpha, gamma, beta)
    for i in range(2000):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fmid = _foc(mid, eta, alpha, gamma, beta)
        if fmid == 0.0:
            return mid
        if fmid > 0.0:
            lo = mid
            flo = fmid
        else:
            hi = mid
            fhi = fmid
        if hi - lo <= rel_tol * lo and min(fabs(flo), fabs(fhi)) <= abs_tol:
            break
    return lo if fabs(flo) <= fabs(fhi) else hi
