"""Equilibrium strategies, probability distortions and value functions.

A :class:`StrategyProfile` bundles both agents' Riccati solutions with the
Stackelberg equilibrium of one configuration.  Functions here are read-only
evaluations of that profile and accept scalar or array ``t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from .equilibrium import StackelbergEquilibrium, retention_policy, solve_stackelberg
from .errors import DomainError
from .model import (
    ClaimMeasure,
    DiscreteAtoms,
    InsurerPrefs,
    MarketParams,
    ModelBundle,
    RayleighCompoundPoisson,
)
from .numerics import integrate_claim, integrate_interval
from .riccati import RiccatiSolution, solve_riccati

__all__ = [
    "StrategyProfile",
    "Distortions",
    "build_profile",
    "investment",
    "pi_insurer",
    "pi_reinsurer",
    "pi_no_sv",
    "pi_tilde",
    "distortions_insurer",
    "distortions_reinsurer",
    "penalty_rate",
    "value_intercept",
    "value_function",
]


@dataclass(frozen=True, eq=False)
class StrategyProfile:
    bundle: ModelBundle
    riccati_insurer: RiccatiSolution
    riccati_reinsurer: RiccatiSolution
    equilibrium: StackelbergEquilibrium

    def __post_init__(self):
        expected = self.bundle.fingerprint()
        for name in ("riccati_insurer", "riccati_reinsurer", "equilibrium"):
            got = getattr(self, name).fingerprint
            if got != expected:
                raise ValueError(f"{name} was computed for a different configuration ({got} != {expected})")


def build_profile(bundle: ModelBundle, t_eval: float = 5.0) -> StrategyProfile:
    return StrategyProfile(
        bundle=bundle,
        riccati_insurer=solve_riccati("insurer", bundle),
        riccati_reinsurer=solve_riccati("reinsurer", bundle),
        equilibrium=solve_stackelberg(bundle, t_eval),
    )


def _check_t(t, T: float) -> np.ndarray:
    arr = np.asarray(t, dtype=float)
    if np.any((arr < 0.0) | (arr > T)):
        raise DomainError(f"t must lie in [0, {T}]")
    return arr


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def _insurer_pihat(m: MarketParams, p: InsurerPrefs, A, L, H):
    tilt = 2.0 * p.alpha - 1.0
    num = m.xi - tilt * p.beta0 * m.rho0 * m.sigma * A - p.gamma * m.sigma * m.rho0 * (p.alpha * L + p.alpha_hat * H)
    return num / (p.gamma + tilt * p.beta0)


def _reinsurer_pihat(m: MarketParams, b: ModelBundle, A, L, H, form: str):
    re = b.reinsurer
    tilt = 2.0 * re.alphaR - 1.0
    if form == "printed":
        equity = tilt * re.betaRY * m.sigma * A
    elif form == "mirror":
        equity = tilt * re.betaR0 * m.rho0 * m.sigma * A
    else:
        raise ValueError(f"unknown reinsurer strategy form {form!r}")
    num = m.xi - equity - re.gammaR * m.sigma * m.rho0 * (re.alphaR * L + re.alpha_hat * H)
    return num / (re.gammaR + tilt * re.betaR0)


def investment(agent: str, t, bundle: ModelBundle, solution: RiccatiSolution, form: str | None = None):
    """Equilibrium amount in the stock from an agent's Riccati solution alone."""
    m = bundle.market
    t = _check_t(t, m.T)
    A, L, H = solution(t)
    if agent == "insurer":
        pihat = _insurer_pihat(m, bundle.insurer, A, L, H)
    elif agent == "reinsurer":
        pihat = _reinsurer_pihat(m, bundle, A, L, H, form or bundle.solver.reinsurer_pi_form)
    else:
        raise ValueError(f"agent must be 'insurer' or 'reinsurer', got {agent!r}")
    return _scalar(pihat * np.exp(-m.r * (m.T - t)))


def pi_insurer(t, profile: StrategyProfile):
    """Insurer's equilibrium amount in the stock at time ``t``."""
    return investment("insurer", t, profile.bundle, profile.riccati_insurer)


def pi_reinsurer(t, profile: StrategyProfile, form: str | None = None):
    """Reinsurer's equilibrium amount in the stock; ``form`` overrides the configured reading."""
    return investment("reinsurer", t, profile.bundle, profile.riccati_reinsurer, form)


def pi_no_sv(t, mu: float, sigma0: float, market: MarketParams, prefs: InsurerPrefs):
    """Equilibrium stock holding when the stock is a geometric Brownian motion."""
    if not sigma0 > 0:
        raise DomainError(f"sigma0 must be > 0 (got {sigma0!r})")
    t = np.asarray(t, dtype=float)
    c = prefs.gamma + (2.0 * prefs.alpha - 1.0) * prefs.beta0
    return _scalar((mu - market.r) * np.exp(-market.r * (market.T - t)) / (sigma0 * sigma0 * c))


def pi_tilde(t, profile: StrategyProfile):
    """Constant-volatility benchmark with ``(mu - r) / sigma0^2`` tied to ``xi``."""
    m = profile.bundle.market
    t = _check_t(t, m.T)
    return pi_no_sv(t, m.r + m.xi, 1.0, m, profile.bundle.insurer)


# ---------------------------------------------------------------------------
# distortions and penalty


class Distortions(NamedTuple):
    phi0_lo: float
    phiY_lo: float
    phiZ_lo: float
    phi0_hi: float
    phiY_hi: float
    phiZ_hi: float


def _claim_exponent(a0, t, z, r, T, gamma):
    capped = np.minimum(a0, np.asarray(z, dtype=float) * np.exp(r * (T - t)))
    return capped + 0.5 * gamma * capped * capped


def distortions_insurer(t, z, profile: StrategyProfile, y: float | None = None) -> Distortions:
    """Worst-case (``_lo``) and best-case (``_hi``) distortions for the insurer."""
    b = profile.bundle
    m, p = b.market, b.insurer
    y = m.delta if y is None else y
    if y < 0:
        raise DomainError(f"y must be >= 0 (got {y!r})")
    t = float(_check_t(t, m.T))
    A, L, H = profile.riccati_insurer(t)
    root_y = math.sqrt(y)
    phi0 = p.beta0 * root_y * (_insurer_pihat(m, p, A, L, H) + m.sigma * m.rho0 * A)
    phiY = m.sigma * p.betaY * m.rho * A * root_y
    q = _claim_exponent(profile.equilibrium.a0_star, t, z, m.r, m.T, p.gamma)
    return Distortions(
        phi0, phiY, _scalar(-np.expm1(p.beta * q)),
        -phi0, -phiY, _scalar(-np.expm1(-p.beta * q)),
    )


def distortions_reinsurer(t, z, profile: StrategyProfile, y: float | None = None) -> Distortions:
    """Worst-case (``_lo``) and best-case (``_hi``) distortions for the reinsurer."""
    b = profile.bundle
    m, re = b.market, b.reinsurer
    y = m.delta if y is None else y
    if y < 0:
        raise DomainError(f"y must be >= 0 (got {y!r})")
    t = float(_check_t(t, m.T))
    A, L, H = profile.riccati_reinsurer(t)
    root_y = math.sqrt(y)
    phi0 = re.betaR0 * root_y * (_reinsurer_pihat(m, b, A, L, H, "mirror") + m.sigma * m.rho0 * A)
    phiY = m.sigma * re.betaRY * m.rho * A * root_y
    q = _claim_exponent(profile.equilibrium.a0_star, t, z, m.r, m.T, re.gammaR)
    return Distortions(
        phi0, phiY, _scalar(-np.expm1(re.betaR * q)),
        -phi0, -phiY, _scalar(-np.expm1(-re.betaR * q)),
    )


def penalty_rate(
    phi0: float,
    phiY: float,
    phiZ: Callable[[np.ndarray], np.ndarray] | float,
    b: tuple[float, float, float],
    measure: ClaimMeasure,
) -> float:
    """Entropy-type penalty per unit time for distortions ``(phi0, phiY, phiZ)``.

    ``b`` is the ambiguity triple ``(beta, beta0, betaY)``; ``phiZ`` is a
    vectorised function of claim size or a constant.
    """
    beta, beta0, betaY = b
    fn = phiZ if callable(phiZ) else (lambda z: np.full_like(np.asarray(z, dtype=float), float(phiZ)))

    def integrand(z):
        phi = np.asarray(fn(z), dtype=float)
        if np.any(phi >= 1.0):
            raise DomainError("claim distortion must stay below 1")
        keep = 1.0 - phi
        return keep * np.log1p(-phi) + phi

    jump = integrate_claim(measure, integrand).value
    return jump / beta + phi0 * phi0 / (2.0 * beta0) + phiY * phiY / (2.0 * betaY)


# ---------------------------------------------------------------------------
# value functions


def _capped_integral(measure: ClaimMeasure, h, cap: float, scale: float) -> float:
    """``int h(min(cap, z * scale)) nu(dz)`` with ``h`` vectorised."""
    if isinstance(measure, DiscreteAtoms):
        return integrate_claim(measure, lambda z: h(np.minimum(cap, z * scale))).value
    if not isinstance(measure, RayleighCompoundPoisson):
        raise TypeError(f"unsupported claim measure {type(measure).__name__}")
    knot = cap / scale
    body, _ = integrate_interval(lambda z: h(z * scale) * measure.density(z), 0.0, knot)
    return body + float(h(np.array([cap]))[0]) * measure.tail_mass(knot)


def _panels(t: float, T: float, kinks) -> list[tuple[float, float]]:
    # unit-length panels, split further at integrand kinks
    cuts = {float(c) for c in np.arange(t, T, 1.0)} | {T} | {k for k in kinks if t < k < T}
    cuts = sorted(cuts)
    return [(a, b) for a, b in zip(cuts[:-1], cuts[1:]) if b > a]


def _kink_times(measure: ClaimMeasure, a0: float, r: float, T: float) -> list[float]:
    # times where a0 = z_i e^{r(T-s)} for a discrete atom z_i
    if not isinstance(measure, DiscreteAtoms) or r <= 0 or a0 <= 0:
        return []
    return [T - math.log(a0 / z) / r for z in measure.sizes.tolist() if z < a0]


_GL_X, _GL_W = leggauss(16)


def value_intercept(agent: str, profile: StrategyProfile, t: float) -> float:
    """Wealth- and variance-free part ``B(t)`` of the agent's value function."""
    b = profile.bundle
    m, nu = b.market, b.claims
    t = float(_check_t(t, m.T))
    if t == m.T:
        return 0.0
    eq = profile.equilibrium
    eta, a0 = eq.eta_star, eq.a0_star
    level = m.delta if b.solver.intercept_level == "delta" else getattr(nu, "lam", math.nan)
    mean = nu.first_moment()

    if agent == "insurer":
        p = b.insurer
        riccati = profile.riccati_insurer
        alpha, ahat, beta, gamma = p.alpha, p.alpha_hat, p.beta, p.gamma

        def inner(s: float) -> float:
            growth = math.exp(m.r * (m.T - s))

            def h(cap):
                q = cap + 0.5 * gamma * cap * cap
                return (1.0 + eta) * cap - alpha / beta * np.expm1(beta * q) + ahat / beta * np.expm1(-beta * q)

            return (p.theta - eta) * growth * mean + _capped_integral(nu, h, a0, growth)

    elif agent == "reinsurer":
        re = b.reinsurer
        riccati = profile.riccati_reinsurer
        alpha, ahat, beta, gamma = re.alphaR, re.alpha_hat, re.betaR, re.gammaR
        convention = b.solver.retention_discount_sign

        def inner(s: float) -> float:
            growth = math.exp(m.r * (m.T - s))
            cap = retention_policy(a0, s, math.inf, m, convention)
            ceded = mean - _capped_integral(nu, lambda c: c, cap, 1.0)

            def h(capped):
                q = capped + 0.5 * gamma * capped * capped
                return -alpha / beta * np.expm1(beta * q) + ahat / beta * np.expm1(-beta * q)

            return (1.0 + eta) * growth * ceded + _capped_integral(nu, h, a0, growth)

    else:
        raise ValueError(f"agent must be 'insurer' or 'reinsurer', got {agent!r}")

    total = 0.0
    for lo, hi in _panels(t, m.T, _kink_times(nu, a0, m.r, m.T)):
        half = 0.5 * (hi - lo)
        nodes = lo + half * (_GL_X + 1.0)
        A = riccati(nodes)[0]
        vals = np.array([inner(float(s)) for s in nodes]) + m.kappa * level * A
        total += half * float(vals @ _GL_W)
    return total


def value_function(agent: str, t: float, x: float, y: float, profile: StrategyProfile) -> float:
    """``e^{r(T-t)} x + A(t) y + B(t)``."""
    m = profile.bundle.market
    riccati = profile.riccati_insurer if agent == "insurer" else profile.riccati_reinsurer
    A = riccati(float(t))[0]
    return math.exp(m.r * (m.T - t)) * x + A * y + value_intercept(agent, profile, t)
