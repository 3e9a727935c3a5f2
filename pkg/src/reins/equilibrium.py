"""Stackelberg equilibrium between the reinsurer (leader) and insurer (follower).

The insurer answers a premium loading ``eta`` with an excess-of-loss cap
``a0(eta)``, the unique root of a strictly decreasing scalar condition.  The
reinsurer picks ``eta*`` as a root of ``M(eta)``, an integral over claims that
exceed the discounted cap.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from ._backend import kernels
from .errors import DomainError, RootFindingError
from .model import (
    DiscreteAtoms,
    InsurerPrefs,
    MarketParams,
    ModelBundle,
    RayleighCompoundPoisson,
    SolverConventions,
    require_valid,
)
from .numerics import integrate_claim, normal_cdf

__all__ = [
    "StackelbergEquilibrium",
    "retention_foc",
    "solve_retention",
    "retention_sensitivity",
    "retention_policy",
    "reinsurer_foc",
    "premium_scan",
    "rayleigh_foc_closed_form",
    "rayleigh_foc_derived",
    "rayleigh_foc_terms",
    "solve_premium",
    "solve_stackelberg",
]

_DEFAULT_SOLVER = SolverConventions()
_ETA_CEILING = 1e6
_SCAN_POINTS = 64


class MultipleRootsWarning(UserWarning):
    pass


# ---------------------------------------------------------------------------
# insurer side


def retention_foc(a0: float, eta: float, prefs: InsurerPrefs) -> float:
    """Residual of the insurer's retention condition; ``-inf`` once the exponent overflows."""
    if a0 < 0:
        raise DomainError(f"a0 must be >= 0 (got {a0!r})")
    return kernels.retention_foc(float(a0), float(eta), prefs.alpha, prefs.gamma, prefs.beta)


def solve_retention(eta: float, prefs: InsurerPrefs, solver: SolverConventions = _DEFAULT_SOLVER) -> float:
    """Unique root ``a0 >= 0`` of :func:`retention_foc` for loading ``eta > 0``."""
    if not eta > 0:
        raise DomainError(f"eta must be > 0 (got {eta!r})")
    a0 = kernels.solve_retention(
        float(eta), prefs.alpha, prefs.gamma, prefs.beta, solver.root_abs_tol, solver.root_rel_tol
    )
    # the residual is strictly decreasing from eta > 0, so a bracket always exists
    if not math.isfinite(a0):
        raise RootFindingError(f"retention root not bracketed for eta={eta!r}")
    return a0


def retention_sensitivity(a0: float, prefs: InsurerPrefs) -> float:
    """Derivative of the retention root with respect to the loading, by implicit differentiation."""
    s = prefs.beta * (a0 + 0.5 * prefs.gamma * a0 * a0)
    up = prefs.alpha * math.exp(s)
    down = prefs.alpha_hat * math.exp(-s)
    lin = 1.0 + prefs.gamma * a0
    return 1.0 / (prefs.gamma * (up + down) + prefs.beta * lin * lin * (up - down))


def retention_policy(a0: float, t, z, market: MarketParams, convention: str = "negative"):
    """Retained part of a claim ``z`` at time ``t``: ``min(a0 * exp(-+r(T-t)), z)``."""
    if convention not in ("negative", "positive"):
        raise ValueError(f"unknown retention convention {convention!r}")
    sign = -1.0 if convention == "negative" else 1.0
    cap = a0 * np.exp(sign * market.r * (market.T - np.asarray(t, dtype=float)))
    out = np.minimum(cap, np.asarray(z, dtype=float))
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# reinsurer first-order condition


def _foc_integrand(eta, a0, a0p, growth, re):
    def f(z):
        w = z * growth - a0
        g = w + 0.5 * re.gammaR * w * w
        lin = 1.0 + re.gammaR * w
        return (w - (1.0 + eta) * a0p) + a0p * lin * (
            re.alphaR * np.exp(re.betaR * g) + re.alpha_hat * np.exp(-re.betaR * g)
        )
    return f


def _foc_parts(eta: float, bundle: ModelBundle, t: float):
    m = bundle.market
    if not 0.0 <= t <= m.T:
        raise DomainError(f"t must lie in [0, {m.T}] (got {t!r})")
    a0 = solve_retention(eta, bundle.insurer, bundle.solver)
    a0p = retention_sensitivity(a0, bundle.insurer)
    growth = math.exp(m.r * (m.T - t))
    return a0, a0p, growth


def reinsurer_foc(eta: float, bundle: ModelBundle, t: float = 5.0) -> float:
    """Premium first-order condition ``M(eta)`` at evaluation time ``t``, by quadrature."""
    a0, a0p, growth = _foc_parts(eta, bundle, t)
    s = bundle.solver
    res = integrate_claim(
        bundle.claims,
        _foc_integrand(eta, a0, a0p, growth, bundle.reinsurer),
        a0 / growth,
        abs_tol=s.quad_abs_tol,
        rel_tol=s.quad_rel_tol,
        tail_rel_tol=s.tail_rel_tol,
    )
    return res.value


def _foc_magnitude(eta: float, bundle: ModelBundle, t: float) -> float:
    """Integral of the absolute values of the condition's terms; the scale for residuals."""
    a0, a0p, growth = _foc_parts(eta, bundle, t)
    re = bundle.reinsurer

    def f(z):
        w = z * growth - a0
        g = w + 0.5 * re.gammaR * w * w
        lin = 1.0 + re.gammaR * w
        return np.abs(w - (1.0 + eta) * a0p) + a0p * np.abs(lin) * (
            re.alphaR * np.exp(re.betaR * g) + re.alpha_hat * np.exp(-re.betaR * g)
        )

    s = bundle.solver
    return integrate_claim(
        bundle.claims, f, a0 / growth,
        abs_tol=s.quad_abs_tol, rel_tol=s.quad_rel_tol, tail_rel_tol=s.tail_rel_tol,
    ).value


def _rayleigh(bundle: ModelBundle) -> RayleighCompoundPoisson:
    if not isinstance(bundle.claims, RayleighCompoundPoisson):
        raise DomainError("closed form requires a Rayleigh claim measure")
    return bundle.claims


def _drift_term(eta, a0, a0p, growth, lam):
    # integral of [z e^{r tau} - a0 - (1+eta) a0'] over z >= a0 e^{-r tau}, per unit intensity
    return (
        math.sqrt(math.pi) * lam * growth * normal_cdf(-math.sqrt(2.0) * a0 / (lam * growth))
        - (1.0 + eta) * a0p * math.exp(-(a0 * a0) / (growth * growth * lam * lam))
    )


def rayleigh_foc_terms(eta: float, bundle: ModelBundle, t: float = 5.0, form: str = "printed") -> dict:
    """Closed-form pieces ``I0``, ``I_minus``, ``I_plus`` (per unit Poisson intensity).

    ``form="printed"`` evaluates the published expressions literally;
    ``form="derived"`` uses Gaussian moments of the exact integrand.  ``I_plus``
    carries the ``alphaR`` weight and ``I_minus`` the ``1 - alphaR`` weight.
    """
    nu = _rayleigh(bundle)
    a0, a0p, growth = _foc_parts(eta, bundle, t)
    re = bundle.reinsurer
    lam, br, gr = nu.lam, re.betaR, re.gammaR
    out = {"I0": _drift_term(eta, a0, a0p, growth, lam)}
    if form == "printed":
        e2 = growth * growth
        u = 1.0 - gr * a0
        for name, sgn in (("I_plus", 1.0), ("I_minus", -1.0)):
            inv_s2 = 2.0 * e2 / (lam * lam) + sgn * br * gr
            if not inv_s2 > 0:
                raise DomainError(
                    f"2 e^(2r(T-t)) / lambda^2 = {2.0 * e2 / lam**2:.6g} must exceed "
                    f"betaR * gammaR = {br * gr:.6g}"
                )
            s2 = 1.0 / inv_s2
            sd = math.sqrt(s2)
            weight = 0.5 * (1.0 + sgn * (2.0 * re.alphaR - 1.0))
            pref = weight * a0p * math.exp(sgn * 0.5 * br * u * a0 + 0.5 * s2 * br * br * u * u)
            head = (
                2.0 * s2 * e2 / (lam * lam)
                * (1.0 - sgn * s2 * br * gr * (1.0 - a0))
                * math.exp(-((a0 + sgn * s2 * br * u) ** 2) / (2.0 * s2))
            )
            tail = (
                2.0 * math.sqrt(2.0 * math.pi) * sd**3 * e2 / (lam * lam)
                * (gr - sgn * br * (1.0 - sgn * s2 * br * gr) * u * u)
                * normal_cdf(-sgn * s2 * br * u - a0 / s2)
            )
            out[name] = pref * (head + tail)
        return out
    if form == "derived":
        scale = 1.0 / (lam * lam * growth * growth)
        c0 = -a0 * a0 * scale
        for name, sgn, weight in (("I_plus", 1.0, re.alphaR), ("I_minus", -1.0, re.alpha_hat)):
            a = scale - sgn * 0.5 * br * gr
            if not a > 0:
                raise DomainError(
                    f"1 / (lambda e^(r(T-t)))^2 = {scale:.6g} must exceed betaR * gammaR / 2 = {0.5 * br * gr:.6g}"
                )
            b = sgn * br - 2.0 * a0 * scale
            mu = b / (2.0 * a)
            s2 = 1.0 / (2.0 * a)
            sd = math.sqrt(s2)
            gauss = math.exp(c0 + b * b / (4.0 * a))
            j0 = math.sqrt(2.0 * math.pi) * sd * normal_cdf(mu / sd) * gauss
            edge = s2 * math.exp(c0)
            j1 = mu * j0 + edge
            j2 = (mu * mu + s2) * j0 + mu * edge
            poly = gr * j2 + (1.0 + gr * a0) * j1 + a0 * j0
            out[name] = weight * a0p * 2.0 * scale * poly
        return out
    raise ValueError(f"form must be 'printed' or 'derived', got {form!r}")


def rayleigh_foc_closed_form(eta: float, bundle: ModelBundle, t: float = 5.0) -> float:
    """Closed-form premium condition for Rayleigh claims, as published.

    The published expression is normalised to unit Poisson intensity; it is
    multiplied by ``lambda0`` here so that it is directly comparable with
    :func:`reinsurer_foc`.
    """
    terms = rayleigh_foc_terms(eta, bundle, t, "printed")
    return bundle.claims.lambda0 * (terms["I0"] + terms["I_minus"] + terms["I_plus"])


def rayleigh_foc_derived(eta: float, bundle: ModelBundle, t: float = 5.0) -> float:
    """Closed-form premium condition for Rayleigh claims from exact Gaussian moments."""
    terms = rayleigh_foc_terms(eta, bundle, t, "derived")
    return bundle.claims.lambda0 * (terms["I0"] + terms["I_minus"] + terms["I_plus"])


# ---------------------------------------------------------------------------
# premium root and the combined game


def _premium_bracket(bundle: ModelBundle, t: float) -> tuple[float, float, float]:
    lo = bundle.insurer.theta + bundle.solver.root_abs_tol
    m_lo = reinsurer_foc(lo, bundle, t)
    if m_lo <= 0.0:
        raise RootFindingError(
            f"premium condition is not positive at the lower bracket eta={lo!r} (M={m_lo!r})"
        )
    width = 1.0
    while True:
        hi = lo + width
        if hi > _ETA_CEILING:
            raise RootFindingError(f"premium condition never changes sign below eta={_ETA_CEILING:g}")
        if reinsurer_foc(hi, bundle, t) < 0.0:
            return lo, hi, m_lo
        width *= 2.0


def premium_scan(bundle: ModelBundle, t: float = 5.0, n: int = _SCAN_POINTS):
    """Values of ``M`` on ``n`` equally spaced loadings spanning the premium bracket."""
    lo, hi, _ = _premium_bracket(bundle, t)
    etas = np.linspace(lo, hi, n)
    values = np.array([reinsurer_foc(float(e), bundle, t) for e in etas])
    return etas, values


def _solve_premium(bundle: ModelBundle, t: float) -> tuple[float, tuple[str, ...]]:
    etas, values = premium_scan(bundle, t)
    notes: list[str] = []
    changes = np.flatnonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0)
    hits = np.flatnonzero(values == 0.0)
    if hits.size:
        return float(etas[hits[0]]), ()
    if changes.size > 1:
        notes.append(f"premium condition changes sign {changes.size} times on the scan; smallest root taken")
    i = int(changes[0]) if changes.size else len(etas) - 2
    s = bundle.solver
    eta = brentq(
        lambda e: reinsurer_foc(e, bundle, t),
        float(etas[i]), float(etas[i + 1]),
        xtol=s.root_abs_tol, rtol=max(s.root_rel_tol, 4.0 * np.finfo(float).eps), maxiter=500,
    )
    return float(eta), tuple(notes)


def solve_premium(bundle: ModelBundle, t: float = 5.0) -> float:
    """Equilibrium loading: the smallest root of ``M`` above ``theta``."""
    require_valid(bundle)
    eta, notes = _solve_premium(bundle, t)
    for note in notes:
        warnings.warn(note, MultipleRootsWarning, stacklevel=2)
    return eta


@dataclass(frozen=True)
class StackelbergEquilibrium:
    eta_star: float
    a0_star: float
    da0_deta: float
    retention_residual: float
    premium_residual: float
    t_eval: float
    warnings: tuple[str, ...] = ()
    fingerprint: str = field(default="", compare=False)

    def discounted_retention(self, market: MarketParams, convention: str = "negative") -> float:
        """Retention cap at ``t_eval`` for an arbitrarily large claim."""
        return retention_policy(self.a0_star, self.t_eval, math.inf, market, convention)


def solve_stackelberg(bundle: ModelBundle, t: float = 5.0) -> StackelbergEquilibrium:
    """Solve the premium condition, then the retention condition at ``eta*``.

    ``premium_residual`` is ``|M(eta*)|`` divided by the integral of the absolute
    values of its terms.
    """
    require_valid(bundle)
    eta, notes = _solve_premium(bundle, t)
    a0 = solve_retention(eta, bundle.insurer, bundle.solver)
    m_val = reinsurer_foc(eta, bundle, t)
    scale = _foc_magnitude(eta, bundle, t)
    return StackelbergEquilibrium(
        eta_star=eta,
        a0_star=a0,
        da0_deta=retention_sensitivity(a0, bundle.insurer),
        retention_residual=abs(retention_foc(a0, eta, bundle.insurer)),
        premium_residual=abs(m_val) / scale if scale > 0 else abs(m_val),
        t_eval=float(t),
        warnings=notes,
        fingerprint=bundle.fingerprint(),
    )
