"""Coupled Riccati systems for the value-function coefficients.

Each agent's value function is affine in wealth and variance; the variance
loadings ``A``, ``H_lo`` (worst-case auxiliary) and ``H_hi`` (best-case
auxiliary) solve an autonomous three-dimensional Riccati system with zero
terminal values.  The system is integrated backward with fixed-step RK4 on a
uniform grid by the backend kernel.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal

import numpy as np

from . import _kernels_py
from ._backend import kernels
from .errors import BlowUpError
from .model import InsurerPrefs, MarketParams, ModelBundle, ReinsurerPrefs, require_valid
from .numerics import BLOWUP_THRESHOLD, TimeGrid, hermite_interpolant

__all__ = [
    "RiccatiSolution",
    "ExistenceBound",
    "insurer_rhs",
    "reinsurer_rhs",
    "agent_coefficients",
    "solve_riccati",
    "existence_bound",
    "horizon_bound",
]

Agent = Literal["insurer", "reinsurer"]


def _coefficients(market: MarketParams, alpha, gamma, beta0, betaY, variant: str) -> tuple:
    return (
        market.xi, market.kappa, market.sigma, market.rho0,
        alpha, gamma, beta0, betaY, variant == "appendix",
    )


def agent_coefficients(agent: Agent, bundle: ModelBundle) -> tuple:
    """Packed kernel coefficients ``(xi, kappa, sigma, rho0, alpha, gamma, beta0, betaY, appendix)``."""
    m, variant = bundle.market, bundle.solver.riccati_variant
    if agent == "insurer":
        p = bundle.insurer
        return _coefficients(m, p.alpha, p.gamma, p.beta0, p.betaY, variant)
    if agent == "reinsurer":
        p = bundle.reinsurer
        return _coefficients(m, p.alphaR, p.gammaR, p.betaR0, p.betaRY, variant)
    raise ValueError(f"agent must be 'insurer' or 'reinsurer', got {agent!r}")


def insurer_rhs(t, state, market: MarketParams, prefs: InsurerPrefs, variant: str = "theorem"):
    """Right-hand side ``(A', H_lo', H_hi')`` of the insurer's system.

    Works elementwise on arrays.  ``t`` is accepted for interface symmetry; the
    system is autonomous.
    """
    A, L, H = state
    return _kernels_py.riccati_rhs(
        A, L, H, *_coefficients(market, prefs.alpha, prefs.gamma, prefs.beta0, prefs.betaY, variant)
    )


def reinsurer_rhs(t, state, market: MarketParams, prefs: ReinsurerPrefs, variant: str = "theorem"):
    """Reinsurer counterpart of :func:`insurer_rhs` (same structure, reinsurer preferences)."""
    A, L, H = state
    return _kernels_py.riccati_rhs(
        A, L, H, *_coefficients(market, prefs.alphaR, prefs.gammaR, prefs.betaR0, prefs.betaRY, variant)
    )


@dataclass(frozen=True, eq=False)
class RiccatiSolution:
    agent: str
    grid: TimeGrid
    A: np.ndarray
    Hlo: np.ndarray
    Hhi: np.ndarray
    derivs: np.ndarray = field(repr=False)
    max_fd_residual: float
    fingerprint: str = ""

    @cached_property
    def _spline(self):
        values = np.column_stack([self.A, self.Hlo, self.Hhi])
        return hermite_interpolant(self.grid.nodes, values, self.derivs)

    def __call__(self, t):
        """Interpolated ``(A, H_lo, H_hi)`` at time(s) ``t`` in [0, T]."""
        t_arr = np.asarray(t, dtype=float)
        if np.any((t_arr < 0.0) | (t_arr > self.grid.T)):
            raise ValueError(f"t must lie in [0, {self.grid.T}]")
        out = self._spline(t_arr)
        if t_arr.ndim == 0:
            return float(out[0]), float(out[1]), float(out[2])
        return out[..., 0], out[..., 1], out[..., 2]

    def rows(self):
        """Iterate ``(t, A, H_lo, H_hi)`` over the grid."""
        return zip(self.grid.nodes.tolist(), self.A.tolist(), self.Hlo.tolist(), self.Hhi.tolist())


def _fd_residual(grid: TimeGrid, values: np.ndarray, derivs: np.ndarray, coeffs: tuple) -> float:
    """Max |centred difference - rhs(Hermite midpoint)| over all grid cells."""
    if grid.n < 1:
        return 0.0
    h = np.diff(grid.nodes)[:, None]
    y0, y1 = values[:-1], values[1:]
    d0, d1 = derivs[:-1], derivs[1:]
    mid = 0.5 * (y0 + y1) + h * (d0 - d1) / 8.0
    slope = (y1 - y0) / h
    rhs = np.column_stack(_kernels_py.riccati_rhs(mid[:, 0], mid[:, 1], mid[:, 2], *coeffs))
    return float(np.max(np.abs(slope - rhs)))


def solve_riccati(agent: Agent, bundle: ModelBundle) -> RiccatiSolution:
    """Integrate the agent's Riccati system backward from zero at ``T``.

    Raises :class:`~reins.errors.BlowUpError` when a component exceeds 1e8;
    :func:`existence_bound` explains such failures.
    """
    require_valid(bundle)
    coeffs = agent_coefficients(agent, bundle)
    grid = TimeGrid(bundle.market.T, bundle.solver.ode_steps)
    values, derivs, fail = kernels.riccati_backward(grid.nodes, *coeffs, BLOWUP_THRESHOLD)
    if fail >= 0:
        raise BlowUpError(float(grid.nodes[fail]), BLOWUP_THRESHOLD)
    residual = _fd_residual(grid, values, derivs, coeffs)
    return RiccatiSolution(
        agent=agent,
        grid=grid,
        A=values[:, 0].copy(),
        Hlo=values[:, 1].copy(),
        Hhi=values[:, 2].copy(),
        derivs=derivs,
        max_fd_residual=residual,
        fingerprint=bundle.fingerprint(),
    )


# ---------------------------------------------------------------------------
# existence bound for the matrix form of the system


@dataclass(frozen=True)
class ExistenceBound:
    d: float
    k: float
    q: float
    Delta: float
    zeta1: complex | float | None
    zeta2: complex | float | None
    t_max: float
    case_tag: str
    T: float
    note: str = ""
    entries: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def holds(self) -> bool:
        """Whether the horizon satisfies the sufficient condition ``T < t_max``."""
        return self.T < self.t_max


def horizon_bound(d: float, k: float, q: float):
    """Three-case horizon bound from the sup-norm aggregates.

    Returns ``(Delta, zeta1, zeta2, t_max, case_tag, note)``.
    """
    Delta = d * d - 4.0 * k * q
    scale = max(d * d, abs(4.0 * k * q), 1e-300)
    if k == 0.0:
        return Delta, None, None, math.inf, "k=0", "no quadratic terms: linear system, global existence"
    if abs(Delta) <= 1e-14 * scale:
        z = -d / (2.0 * k)
        t_max = 2.0 / d if d > 0 else math.inf
        return 0.0, z, z, t_max, "Delta=0", ""
    if Delta > 0:
        root = math.sqrt(Delta)
        z1 = (-d + root) / (2.0 * k)
        z2 = (-d - root) / (2.0 * k)
        if z1 == 0.0 or z2 / z1 <= 0.0:
            return Delta, z1, z2, math.inf, "Delta>0", (
                "zeta2/zeta1 outside the logarithm's domain; no finite bound (global existence)"
            )
        return Delta, z1, z2, math.log(z2 / z1) / root, "Delta>0", ""
    root = math.sqrt(-Delta)
    z1 = complex(-d, root) / (2.0 * k)
    z2 = complex(-d, -root) / (2.0 * k)
    t_max = (math.pi + 2.0 * math.atan(z1.real / z1.imag)) / root
    return Delta, z1, z2, t_max, "Delta<0", ""


def _matrix_entries(market: MarketParams, alpha, gamma, beta0, betaY) -> dict[str, tuple[float, float, float]]:
    s, r0, xi, kap = market.sigma, market.rho0, market.xi, market.kappa
    rho2 = 1.0 - r0 * r0
    ah = 1.0 - alpha
    tl = 2.0 * alpha - 1.0
    c = gamma + tl * beta0
    s2 = s * s
    shared = s2 * ((r0 * r0 - r0) * beta0 + rho2 * betaY)
    return {
        "K": (
            0.5 * tl * s2 * (r0 * r0 * gamma * beta0 / c + rho2 * betaY),
            alpha * s2 * r0 * gamma * beta0 / c * (alpha * r0 * gamma / c - 1.0),
            ah * s2 * r0 * gamma * beta0 / c * (1.0 - ah * r0 * gamma / c),
        ),
        "K0": (
            -alpha * ah * s2 * r0 * r0 * gamma * gamma / c,
            ah * s2 * r0 * gamma * beta0 / c * (2.0 * tl * r0 * beta0 / c - 1.0),
            alpha * s2 * r0 * gamma * beta0 / c * (1.0 - 2.0 * alpha * r0 * gamma / c),
        ),
        "K1": (
            0.5 * alpha * s2 * gamma * (1.0 - alpha * r0 * gamma / c),
            tl * s2 * r0 * beta0 * beta0 / c * (tl * r0 * beta0 / c - 1.0),
            0.0,
        ),
        "K2": (
            0.5 * ah * s2 * gamma * (1.0 - ah * r0 * gamma / c),
            0.0,
            tl * s2 * r0 * beta0 * beta0 / c * (1.0 - tl * r0 * beta0 / c),
        ),
        "K3": (
            0.0,
            ah * ah * s2 * r0 * r0 * gamma * gamma * beta0 / (c * c),
            -alpha * alpha * s2 * r0 * r0 * gamma * gamma * beta0 / (c * c),
        ),
        "K12": (
            -alpha * tl * s2 * r0 * r0 * gamma * beta0 / c,
            s2 * r0 * gamma * beta0 / c * (2.0 * alpha * tl * r0 * beta0 / c + ah) + shared,
            0.0,
        ),
        "K13": (
            -ah * tl * s2 * r0 * r0 * gamma * beta0 / c,
            0.0,
            s2 * r0 * gamma * beta0 / c * (2.0 * ah * tl * r0 * beta0 / c + alpha) + shared,
        ),
        "K23": (
            0.0,
            ah * s2 * r0 * gamma * beta0 / c * (2.0 * alpha * r0 * gamma / c - 1.0),
            alpha * s2 * r0 * gamma * beta0 / c * (1.0 - 2.0 * ah * r0 * gamma / c),
        ),
        "D": (
            kap + tl * s * r0 * beta0 / c * xi,
            kap + s * (alpha * r0 * (1.0 - 2.0 * beta0 / c) * gamma + beta0) / c * xi,
            kap + s * (ah * r0 * (1.0 + 2.0 * beta0 / c) * gamma - beta0) / c * xi,
        ),
        "D1": (
            alpha * s * r0 * gamma / c * xi,
            (tl * r0 * (1.0 - 2.0 * beta0 / c) + 1.0) * s * beta0 / c * xi,
            0.0,
        ),
        "D2": (
            ah * s * r0 * gamma / c * xi,
            0.0,
            (tl * r0 * (1.0 + 2.0 * beta0 / c) - 1.0) * s * beta0 / c * xi,
        ),
        "D3": (
            0.0,
            ah * s * r0 * gamma / c * (1.0 - 2.0 * beta0 / c) * xi,
            alpha * s * r0 * gamma / c * (1.0 + 2.0 * beta0 / c) * xi,
        ),
        "Q": (
            -xi * xi / (2.0 * c),
            -(gamma - 2.0 * ah * beta0) / (c * c) * xi * xi,
            -(gamma + 2.0 * alpha * beta0) / (c * c) * xi * xi,
        ),
    }


def _sup(diag) -> float:
    return max(abs(v) for v in diag)


def existence_bound(bundle: ModelBundle, agent: Agent = "insurer") -> ExistenceBound:
    """Sufficient horizon condition for the matrix Riccati form of the system.

    The diagonal coefficient matrices are evaluated entry by entry; ``d``, ``k``
    and ``q`` are sums of their sup-norms.  The construction is derived for the
    insurer; for ``agent="reinsurer"`` the same construction is applied with the
    reinsurer's preferences substituted, which is an extrapolation.
    """
    m = bundle.market
    if agent == "insurer":
        p = bundle.insurer
        entries = _matrix_entries(m, p.alpha, p.gamma, p.beta0, p.betaY)
    elif agent == "reinsurer":
        p = bundle.reinsurer
        entries = _matrix_entries(m, p.alphaR, p.gammaR, p.betaR0, p.betaRY)
    else:
        raise ValueError(f"agent must be 'insurer' or 'reinsurer', got {agent!r}")
    d = sum(_sup(entries[name]) for name in ("D", "D1", "D2", "D3"))
    k = sum(_sup(entries[name]) for name in ("K", "K0", "K1", "K2", "K3", "K12", "K13", "K23"))
    q = _sup(entries["Q"])
    Delta, z1, z2, t_max, case, note = horizon_bound(d, k, q)
    if agent == "reinsurer":
        note = (note + "; " if note else "") + "bound derived for the insurer system, applied by analogy"
    return ExistenceBound(
        d=d, k=k, q=q, Delta=Delta, zeta1=z1, zeta2=z2, t_max=t_max,
        case_tag=case, T=m.T, note=note, entries=entries,
    )
