import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from oracles import riccati_reference
from reins import (
    DiscreteAtoms,
    InsurerPrefs,
    MarketParams,
    ModelBundle,
    ReinsurerPrefs,
    build_profile,
    distortions_insurer,
    distortions_reinsurer,
    penalty_rate,
    pi_insurer,
    pi_no_sv,
    pi_reinsurer,
    pi_tilde,
    value_function,
    value_intercept,
)
from reins.errors import DomainError
from reins.model import SolverConventions, with_value
from reins.strategies import StrategyProfile


@pytest.fixture(scope="module")
def profile():
    return build_profile(ModelBundle())


@pytest.fixture(scope="module")
def flat_profile():
    return build_profile(with_value(ModelBundle(), "market.xi", 0.0))


class TestInvestment:
    def test_baseline_values(self, profile):
        assert pi_insurer(5.0, profile) == pytest.approx(0.258752, abs=5e-7)
        assert pi_tilde(5.0, profile) == pytest.approx(0.268552, abs=5e-7)
        assert pi_reinsurer(5.0, profile) == pytest.approx(0.250287, abs=5e-7)

    def test_zero_field(self, flat_profile):
        t = np.linspace(0, 10, 101)
        assert np.all(pi_insurer(t, flat_profile) == 0.0)
        assert np.all(pi_reinsurer(t, flat_profile) == 0.0)
        assert np.all(pi_reinsurer(t, flat_profile, "mirror") == 0.0)

    def test_no_vol_of_vol(self):
        prof = build_profile(with_value(ModelBundle(), "market.sigma", 0.0))
        assert pi_insurer(0.0, prof) == pytest.approx(math.exp(-0.5) / 2.9, rel=1e-14)
        assert abs(pi_insurer(0.0, prof) - 0.2091485) < 5e-8

    def test_uncorrelated_matches_benchmark(self):
        prof = build_profile(with_value(ModelBundle(), "market.rho0", 0.0))
        t = prof.riccati_insurer.grid.nodes
        assert np.max(np.abs(pi_insurer(t, prof) - pi_tilde(t, prof))) <= 1e-14

    def test_decomposition_identity(self, profile):
        m, p = profile.bundle.market, profile.bundle.insurer
        sol = profile.riccati_insurer
        t = sol.grid.nodes
        c = p.gamma + (2 * p.alpha - 1) * p.beta0
        corr = m.rho0 * m.sigma * np.exp(-m.r * (m.T - t)) * (
            p.gamma * (p.alpha * sol.Hlo + p.alpha_hat * sol.Hhi) + (2 * p.alpha - 1) * p.beta0 * sol.A
        ) / c
        assert np.max(np.abs(pi_insurer(t, profile) - (pi_tilde(t, profile) - corr))) <= 1e-12

    def test_mirror_symmetry(self):
        b = ModelBundle(
            insurer=InsurerPrefs(alpha=0.7, gamma=0.8, beta0=3.0, betaY=2.0),
            reinsurer=ReinsurerPrefs(alphaR=0.7, gammaR=0.8, betaR0=3.0, betaRY=2.0),
            solver=SolverConventions(reinsurer_pi_form="mirror"),
        )
        prof = build_profile(b)
        t = np.linspace(0, 10, 41)
        assert np.array_equal(pi_insurer(t, prof), pi_reinsurer(t, prof))

    def test_reinsurer_against_reference(self, profile):
        m, re = profile.bundle.market, profile.bundle.reinsurer
        t = np.array([0.0, 3.0, 5.0, 8.0])
        A, L, H = riccati_reference(m, re.alphaR, re.gammaR, re.betaR0, re.betaRY, t).T
        w = 2 * re.alphaR - 1
        num = m.xi - w * re.betaRY * m.sigma * A - re.gammaR * m.sigma * m.rho0 * (re.alphaR * L + (1 - re.alphaR) * H)
        ref = num / (re.gammaR + w * re.betaR0) * np.exp(-m.r * (m.T - t))
        assert np.max(np.abs(pi_reinsurer(t, profile) - ref)) <= 1e-9

    def test_outside_horizon(self, profile):
        with pytest.raises(DomainError):
            pi_insurer(-0.1, profile)

    def test_unknown_form(self, profile):
        with pytest.raises(ValueError):
            pi_reinsurer(1.0, profile, "guess")


class TestNoSv:
    def test_terminal(self):
        assert pi_no_sv(10.0, 1.05, 1.0, MarketParams(), InsurerPrefs()) == pytest.approx(1 / 2.9, rel=1e-15)

    def test_extreme_risk_aversion(self):
        assert abs(pi_no_sv(0.0, 1.05, 1.0, MarketParams(), InsurerPrefs(gamma=1e6))) < 1e-6

    @pytest.mark.parametrize("s0", [0.0, -1.0])
    def test_bad_volatility(self, s0):
        with pytest.raises(DomainError):
            pi_no_sv(0.0, 1.0, s0, MarketParams(), InsurerPrefs())

    def test_volatility_tie(self):
        # mu and sigma0 enter only through (mu - r) / sigma0^2
        m, p = MarketParams(), InsurerPrefs()
        assert pi_no_sv(2.0, m.r + 0.25, 0.5, m, p) == pytest.approx(pi_no_sv(2.0, m.r + 1.0, 1.0, m, p), rel=1e-15)


class TestDistortions:
    @given(st.floats(0, 10), st.floats(0, 5), st.floats(0, 1))
    def test_symmetry(self, t, z, y):
        prof = _PROFILE
        for fn in (distortions_insurer, distortions_reinsurer):
            d = fn(t, z, prof, y)
            assert d.phi0_hi == -d.phi0_lo and d.phiY_hi == -d.phiY_lo

    def test_zero_field(self, flat_profile):
        for fn in (distortions_insurer, distortions_reinsurer):
            d = fn(4.0, 1.0, flat_profile)
            assert d.phi0_lo == 0.0 and d.phiY_lo == 0.0

    def test_zero_claim(self, profile):
        for fn in (distortions_insurer, distortions_reinsurer):
            d = fn(4.0, 0.0, profile)
            assert d.phiZ_lo == 0.0 and d.phiZ_hi == 0.0

    def test_claim_admissible(self, profile):
        z = np.linspace(0, 20, 2001)
        for fn in (distortions_insurer, distortions_reinsurer):
            for t in (0.0, 5.0, 10.0):
                d = fn(t, z, profile)
                assert np.all(d.phiZ_lo < 1) and np.all(1 - d.phiZ_lo > 0)
                assert np.all(d.phiZ_lo <= 0) and np.all((d.phiZ_hi >= 0) & (d.phiZ_hi < 1))

    def test_claim_values(self, profile):
        p, a0 = profile.bundle.insurer, profile.equilibrium.a0_star
        d = distortions_insurer(10.0, 5.0, profile)
        q = a0 + 0.5 * p.gamma * a0 * a0
        assert d.phiZ_lo == pytest.approx(1 - math.exp(p.beta * q), rel=1e-14)
        assert d.phiZ_hi == pytest.approx(1 - math.exp(-p.beta * q), rel=1e-14)

    def test_variance_scaling(self, profile):
        d1 = distortions_insurer(2.0, 1.0, profile, 0.04)
        d2 = distortions_insurer(2.0, 1.0, profile, 0.16)
        assert d2.phi0_lo == pytest.approx(2 * d1.phi0_lo, rel=1e-14)
        assert d2.phiY_lo == pytest.approx(2 * d1.phiY_lo, rel=1e-14)

    def test_negative_variance(self, profile):
        with pytest.raises(DomainError):
            distortions_insurer(1.0, 1.0, profile, -0.1)


_PROFILE = build_profile(ModelBundle())


class TestPenalty:
    def test_zero(self):
        assert penalty_rate(0.0, 0.0, 0.0, (0.1, 4.0, 4.0), DiscreteAtoms(((1.0, 2.0),))) == 0.0

    def test_quadratic_term(self):
        assert penalty_rate(1.0, 0.0, 0.0, (0.1, 4.0, 4.0), DiscreteAtoms(((1.0, 2.0),))) == 0.125

    def test_claim_term(self):
        val = penalty_rate(0.0, 0.0, 0.5, (0.1, 4.0, 4.0), DiscreteAtoms(((1.0, 2.0),)))
        assert val == pytest.approx(10 * 2 * (0.5 * math.log(0.5) + 0.5), rel=1e-14)
        assert abs(val - 3.0685) < 5e-5

    def test_callable_on_rayleigh(self, profile):
        d = lambda z: distortions_insurer(5.0, z, profile).phiZ_lo  # noqa: E731
        val = penalty_rate(0.0, 0.0, d, (0.1, 4.0, 4.0), profile.bundle.claims)
        f = lambda z: (lambda p: (1 - p) * math.log(1 - p) + p)(float(d(z))) * 2 * z * math.exp(-z * z)  # noqa: E731
        kink = profile.equilibrium.a0_star * math.exp(-0.25)
        ref = quad(f, 0, kink, epsabs=1e-15, epsrel=1e-14)[0] + quad(f, kink, 40, epsabs=1e-15, epsrel=1e-14)[0]
        assert val == pytest.approx(ref / 0.1, rel=1e-12)

    def test_inadmissible(self):
        with pytest.raises(DomainError):
            penalty_rate(0.0, 0.0, 1.0, (0.1, 4.0, 4.0), DiscreteAtoms(((1.0, 2.0),)))

    @given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-5, 0.99))
    def test_non_negative(self, a, b, c):
        # tiny claim distortions must not cancel to a negative rate
        assert penalty_rate(a, b, c, (0.1, 4.0, 4.0), DiscreteAtoms(((1.0, 1.0),))) >= 0.0


def _series_intercept(agent, prof, t):
    """Small-ambiguity expansion of the intercept with no equity premium, by scipy quadrature."""
    b = prof.bundle
    m, nu = b.market, b.claims
    eta, a0 = prof.equilibrium.eta_star, prof.equilibrium.a0_star
    if agent == "insurer":
        al, be, ga = b.insurer.alpha, b.insurer.beta, b.insurer.gamma
    else:
        al, be, ga = b.reinsurer.alphaR, b.reinsurer.betaR, b.reinsurer.gammaR

    def h_series(c):
        q = c + 0.5 * ga * c * c
        return -q - (2 * al - 1) * be * q * q / 2 - be * be * q**3 / 6

    def inner(s):
        E = math.exp(m.r * (m.T - s))
        total = 0.0
        for z, w in nu.atoms:
            c = min(a0, z * E)
            if agent == "insurer":
                total += w * ((b.insurer.theta - eta) * E * z + (1 + eta) * c + h_series(c))
            else:
                cap = a0 * math.exp(-m.r * (m.T - s))
                total += w * ((1 + eta) * E * (z - min(cap, z)) + h_series(c))
        return total

    kinks = [m.T - math.log(a0 / z) / m.r for z, _ in nu.atoms if z < a0]
    return quad(inner, t, m.T, points=[k for k in kinks if t < k < m.T] or None, epsabs=1e-14, epsrel=1e-13, limit=200)[0]


class TestIntercept:
    def test_terminal(self, profile):
        assert value_intercept("insurer", profile, 10.0) == 0.0
        assert value_intercept("reinsurer", profile, 10.0) == 0.0

    def test_baseline_values(self, profile):
        assert value_intercept("insurer", profile, 0.0) == pytest.approx(-2.0698, abs=5e-5)
        assert value_intercept("reinsurer", profile, 0.0) == pytest.approx(-6.8947, abs=5e-5)

    def test_small_ambiguity_series(self):
        b = ModelBundle(
            market=MarketParams(xi=0.0),
            insurer=InsurerPrefs(beta=1e-5),
            reinsurer=ReinsurerPrefs(betaR=1e-5),
            claims=DiscreteAtoms(((0.5, 1.0), (2.0, 0.5))),
        )
        prof = build_profile(b)
        assert 0.5 < prof.equilibrium.a0_star < 2.0
        for agent in ("insurer", "reinsurer"):
            for t in (0.0, 3.3, 7.0):
                got = value_intercept(agent, prof, t)
                assert got == pytest.approx(_series_intercept(agent, prof, t), rel=1e-10, abs=1e-12)

    def test_continuity(self, profile):
        t = np.linspace(0, 10, 51)
        for agent in ("insurer", "reinsurer"):
            B = np.array([value_intercept(agent, profile, float(s)) for s in t])
            slopes = np.abs(np.diff(B)) / np.diff(t)
            assert np.all(np.isfinite(B)) and slopes.max() <= 2.0

    def test_level_flag(self, profile):
        alt = build_profile(profile.bundle.replace(solver=SolverConventions(intercept_level="lambda")))
        # claims.lambda = 1 and delta = 0.09 differ, so the A-term changes
        diff = value_intercept("insurer", alt, 0.0) - value_intercept("insurer", profile, 0.0)
        A = profile.riccati_insurer
        ref = quad(lambda s: A(s)[0], 0, 10, epsabs=1e-13)[0] * 3.0 * (1.0 - 0.09)
        assert diff == pytest.approx(ref, rel=1e-8)


class TestValueFunction:
    def test_terminal(self, profile):
        assert value_function("insurer", 10.0, 1.7, 0.2, profile) == 1.7

    def test_linear_in_wealth(self, profile):
        v1 = value_function("insurer", 3.0, 2.5, 0.1, profile)
        v2 = value_function("insurer", 3.0, 1.0, 0.1, profile)
        assert v1 - v2 == pytest.approx(1.5 * math.exp(0.05 * 7), rel=1e-12)

    def test_zero_field(self, flat_profile):
        assert value_function("reinsurer", 2.0, 0.0, 0.3, flat_profile) == value_intercept("reinsurer", flat_profile, 2.0)


def test_profile_rejects_mixed_configurations(profile):
    other = with_value(ModelBundle(), "market.r", 0.04)
    with pytest.raises(ValueError):
        StrategyProfile(other, profile.riccati_insurer, profile.riccati_reinsurer, profile.equilibrium)
