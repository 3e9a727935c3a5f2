"""Shared numerical kernels.

* :func:`normal_cdf` - standard normal distribution function.
* :func:`integrate_claim` - ``int_lower^inf f(z) nu(dz)`` for a claim measure.
* :func:`integrate_backward` - fixed-step RK4 from a terminal condition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.special import ndtr

from .errors import BlowUpError, QuadratureError
from .model import ClaimMeasure, DiscreteAtoms, RayleighCompoundPoisson

__all__ = [
    "TimeGrid",
    "QuadratureResult",
    "normal_cdf",
    "integrate_claim",
    "integrate_interval",
    "integrate_backward",
    "hermite_interpolant",
    "BLOWUP_THRESHOLD",
]

BLOWUP_THRESHOLD = 1e8
_SQRT2 = math.sqrt(2.0)


def normal_cdf(x):
    """Standard normal CDF; scalars give a float, arrays an ndarray."""
    if np.ndim(x) == 0:
        return 0.5 * math.erfc(-float(x) / _SQRT2)
    return ndtr(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class TimeGrid:
    T: float
    n: int

    @cached_property
    def nodes(self) -> np.ndarray:
        # linspace pins both endpoints exactly
        return np.linspace(0.0, self.T, self.n + 1)

    @property
    def step(self) -> float:
        return self.T / self.n


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    truncation_point: float

    def __float__(self) -> float:
        return self.value


# Gauss-Kronrod 7/15 abscissae and weights on [-1, 1] (non-negative half).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])          # 15 points, ascending
_KW = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GW = np.zeros(15)
_GW[[1, 3, 5]] = _WG[:3]
_GW[[13, 11, 9]] = _WG[:3]
_GW[7] = _WG[3]

_MAX_PANELS = 20_000


def _gk15(f, centers: np.ndarray, halves: np.ndarray):
    x = centers[:, None] + halves[:, None] * _NODES[None, :]
    fx = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
    if not np.all(np.isfinite(fx)):
        raise QuadratureError("non-finite integrand", math.nan, math.inf)
    kron = halves * (fx @ _KW)
    gauss = halves * (fx @ _GW)
    return kron, np.abs(kron - gauss)


def integrate_interval(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    *,
    abs_tol: float = 1e-13,
    rel_tol: float = 1e-12,
    breaks: Sequence[float] = (),
) -> tuple[float, float]:
    """Adaptive Gauss-Kronrod (7/15) quadrature of a vectorised ``f`` on [a, b].

    Panels are refined in batches: every panel whose error estimate exceeds its
    width-proportional share of the tolerance is bisected.  Returns
    ``(value, error_estimate)``.
    """
    if b <= a:
        return 0.0, 0.0
    edges = np.unique(np.clip(np.asarray([a, *breaks, b], dtype=float), a, b))
    centers = 0.5 * (edges[1:] + edges[:-1])
    halves = 0.5 * (edges[1:] - edges[:-1])
    keep = halves > 0
    centers, halves = centers[keep], halves[keep]
    vals, errs = _gk15(f, centers, halves)
    half_total = 0.5 * (b - a)
    while True:
        total = float(np.sum(vals))
        err = float(np.sum(errs))
        if not math.isfinite(total):
            raise QuadratureError("non-finite integrand", total, err)
        tol = max(abs_tol, rel_tol * abs(total))
        if err <= tol:
            return total, err
        split = errs > tol * halves / half_total
        if not split.any():
            split = errs == errs.max()
        if centers.size + np.count_nonzero(split) > _MAX_PANELS or np.min(halves[split]) < 1e-13 * half_total:
            raise QuadratureError("adaptive quadrature did not converge", total, err)
        c, h = centers[split], 0.5 * halves[split]
        new_c = np.concatenate([c - h, c + h])
        new_h = np.concatenate([h, h])
        new_v, new_e = _gk15(f, new_c, new_h)
        order = np.argsort(np.concatenate([centers[~split], new_c]), kind="stable")
        centers = np.concatenate([centers[~split], new_c])[order]
        halves = np.concatenate([halves[~split], new_h])[order]
        vals = np.concatenate([vals[~split], new_v])[order]
        errs = np.concatenate([errs[~split], new_e])[order]


def integrate_claim(
    measure: ClaimMeasure,
    f: Callable[[np.ndarray], np.ndarray],
    lower: float = 0.0,
    *,
    abs_tol: float = 1e-13,
    rel_tol: float = 1e-12,
    tail_rel_tol: float = 1e-15,
    breaks: Sequence[float] = (),
) -> QuadratureResult:
    """Compute ``int_{[lower, inf)} f(z) nu(dz)``.

    ``f`` must accept and return numpy arrays.  Discrete measures are summed
    exactly over the atoms with ``z_i >= lower`` in their stored order.  For the
    Rayleigh measure the range is truncated at ``z_max``, chosen from the
    analytic tail ``lambda0 * exp(-z^2 / lambda^2)`` and pushed outward until
    ``max(1, |f(z_max)|)`` times the tail mass is below
    ``max(tail_rel_tol * |value|, abs_tol)``.  ``breaks`` lists points where
    ``f`` has a kink.
    """
    if isinstance(measure, DiscreteAtoms):
        zs = measure.sizes
        ws = measure.weights
        mask = zs >= lower
        if not mask.any():
            return QuadratureResult(0.0, 0.0, float(lower))
        fz = np.broadcast_to(np.asarray(f(zs[mask]), dtype=float), zs[mask].shape)
        total = 0.0
        for fv, w in zip(fz.tolist(), ws[mask].tolist()):
            total += w * fv
        return QuadratureResult(total, 0.0, float(zs[mask].max()))

    if not isinstance(measure, RayleighCompoundPoisson):
        raise TypeError(f"unsupported claim measure {type(measure).__name__}")

    lam = measure.lam
    lower = max(float(lower), 0.0)

    def weighted(z):
        return np.asarray(f(z), dtype=float) * measure.density(z)

    start = lam * math.sqrt(max(math.log(measure.lambda0 / tail_rel_tol), 1.0))
    z_max = max(start, lower + lam)
    for _ in range(200):
        value, err = integrate_interval(
            weighted, lower, z_max, abs_tol=abs_tol, rel_tol=rel_tol,
            breaks=[b for b in breaks if lower < b < z_max],
        )
        f_end = float(np.asarray(f(np.array([z_max])), dtype=float)[0])
        tail = max(1.0, abs(f_end)) * measure.tail_mass(z_max)
        if tail <= max(tail_rel_tol * abs(value), abs_tol):
            return QuadratureResult(value, err + tail, z_max)
        z_max += lam
    raise QuadratureError("tail truncation did not converge", value, err + tail)


def integrate_backward(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    terminal,
    grid: TimeGrid,
    *,
    threshold: float = BLOWUP_THRESHOLD,
) -> np.ndarray:
    """Classical RK4 from ``terminal`` at ``grid.T`` back to 0.

    Returns an ``(n + 1, d)`` array of states at the grid nodes (row ``k`` is
    time ``t_k``).  Raises :class:`BlowUpError` at the first node where a
    component's magnitude exceeds ``threshold``.
    """
    t = grid.nodes
    y = np.array(terminal, dtype=float, ndmin=1)
    out = np.empty((t.size, y.size))
    out[-1] = y
    for k in range(t.size - 1, 0, -1):
        h = t[k] - t[k - 1]
        k1 = np.asarray(rhs(t[k], y), dtype=float)
        k2 = np.asarray(rhs(t[k] - 0.5 * h, y - 0.5 * h * k1), dtype=float)
        k3 = np.asarray(rhs(t[k] - 0.5 * h, y - 0.5 * h * k2), dtype=float)
        k4 = np.asarray(rhs(t[k - 1], y - h * k3), dtype=float)
        y = y - h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[k - 1] = y
        if not np.all(np.abs(y) <= threshold):
            raise BlowUpError(float(t[k - 1]), threshold)
    return out


def hermite_interpolant(nodes: np.ndarray, values: np.ndarray, derivs: np.ndarray) -> CubicHermiteSpline:
    """Piecewise cubic Hermite interpolant through node values and slopes."""
    return CubicHermiteSpline(nodes, values, derivs, axis=0, extrapolate=False)
