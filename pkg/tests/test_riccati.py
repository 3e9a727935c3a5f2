import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import mp_existence, riccati_reference
from reins import (
    DiscreteAtoms,
    InsurerPrefs,
    MarketParams,
    ModelBundle,
    ReinsurerPrefs,
    existence_bound,
    horizon_bound,
    insurer_rhs,
    reinsurer_rhs,
    solve_riccati,
)
from reins.errors import BlowUpError, InvalidBundleError
from reins.model import SolverConventions, with_value

states = st.tuples(*[st.floats(-2, 2)] * 3)


def _c(p: InsurerPrefs) -> float:
    return p.gamma + (2 * p.alpha - 1) * p.beta0


class TestRhs:
    def test_zero_field(self):
        m = MarketParams(xi=0.0)
        assert insurer_rhs(0.0, (0.0, 0.0, 0.0), m, InsurerPrefs()) == (0.0, 0.0, 0.0)
        assert reinsurer_rhs(0.0, (0.0, 0.0, 0.0), m, ReinsurerPrefs()) == (0.0, 0.0, 0.0)

    @given(states)
    def test_no_vol_of_vol(self, state):
        m, p = MarketParams(sigma=0.0), InsurerPrefs()
        dA = insurer_rhs(0.0, state, m, p)[0]
        assert abs(dA - (m.kappa * state[0] - m.xi**2 / (2 * _c(p)))) <= 1e-13

    def test_no_vol_of_vol_reinsurer(self):
        m, q = MarketParams(sigma=0.0), ReinsurerPrefs(alphaR=0.7, gammaR=0.9, betaR0=2.0)
        dA = reinsurer_rhs(0.0, (0.3, 1.0, -1.0), m, q)[0]
        assert abs(dA - (3.0 * 0.3 - 1.0 / (2 * (0.9 + 0.4 * 2.0)))) <= 1e-15

    def test_terminal_slope(self):
        dA = insurer_rhs(10.0, (0.0, 0.0, 0.0), MarketParams(), InsurerPrefs())[0]
        assert abs(dA - (-1.0 / (2 * (0.5 + 0.6 * 4)))) <= 1e-15
        assert abs(dA + 0.17241) < 5e-6

    @given(states)
    def test_symmetric_agents(self, state):
        m = MarketParams()
        p = InsurerPrefs(alpha=0.7, gamma=0.8, beta0=3.0, betaY=2.0)
        q = ReinsurerPrefs(alphaR=0.7, gammaR=0.8, betaR0=3.0, betaRY=2.0)
        for variant in ("theorem", "appendix"):
            assert insurer_rhs(0, state, m, p, variant) == reinsurer_rhs(0, state, m, q, variant)

    @given(states)
    def test_variant_difference(self, state):
        # the two readings differ only in the A^2 sign and a gamma on the H^2 term
        m, p = MarketParams(), InsurerPrefs()
        A, L, H = state
        th = insurer_rhs(0, state, m, p, "theorem")
        ap = insurer_rhs(0, state, m, p, "appendix")
        load = p.beta0 * m.rho0**2 + p.betaY * m.rho**2
        quad = (2 * p.alpha - 1) * m.sigma**2 * load * A * A
        hsq = m.sigma**2 * (p.alpha * L * L + p.alpha_hat * H * H)
        assert abs((th[0] - ap[0]) - (quad + (p.gamma - 1) / 2 * hsq)) <= 1e-12
        assert th[1:] == ap[1:]


class TestSolve:
    def test_terminal_condition(self, baseline):
        sol = solve_riccati("insurer", baseline)
        assert sol.A[-1] == sol.Hlo[-1] == sol.Hhi[-1] == 0.0

    def test_zero_field(self):
        b = with_value(ModelBundle(), "market.xi", 0.0)
        for agent in ("insurer", "reinsurer"):
            sol = solve_riccati(agent, b)
            assert max(np.abs(sol.A).max(), np.abs(sol.Hlo).max(), np.abs(sol.Hhi).max()) <= 1e-14

    def test_no_vol_of_vol_closed_form(self):
        b = with_value(ModelBundle(), "market.sigma", 0.0)
        sol = solve_riccati("insurer", b)
        m, c = b.market, _c(b.insurer)
        exact = m.xi**2 / (2 * c * m.kappa) * (1 - np.exp(-m.kappa * (m.T - sol.grid.nodes)))
        assert np.max(np.abs(sol.A - exact)) <= 1e-8

    def test_baseline_residual(self, baseline):
        sol = solve_riccati("insurer", baseline)
        assert np.all(np.isfinite(sol.A))
        assert sol.max_fd_residual <= 1e-6

    def test_residual_order(self):
        res = []
        for n in (2500, 5000, 10_000):
            b = ModelBundle(solver=SolverConventions(ode_steps=n))
            res.append(solve_riccati("insurer", b).max_fd_residual)
        assert 3.5 <= res[0] / res[1] <= 4.5 and 3.5 <= res[1] / res[2] <= 4.5

    def test_against_adaptive_reference(self, baseline):
        sol = solve_riccati("insurer", baseline)
        ts = np.array([0.0, 2.5, 5.0, 7.5, 9.9])
        ref = riccati_reference(baseline.market, 0.8, 0.5, 4.0, 4.0, ts)
        got = np.column_stack(sol(ts))
        assert np.max(np.abs(got - ref)) <= 1e-9

    def test_interpolation_matches_nodes(self, baseline):
        sol = solve_riccati("insurer", baseline)
        k = 1234
        assert sol(float(sol.grid.nodes[k])) == pytest.approx((sol.A[k], sol.Hlo[k], sol.Hhi[k]), abs=1e-15)
        with pytest.raises(ValueError):
            sol(11.0)

    def test_symmetry(self):
        b = ModelBundle(
            insurer=InsurerPrefs(alpha=0.7, gamma=0.8, beta0=3.0, betaY=2.0),
            reinsurer=ReinsurerPrefs(alphaR=0.7, gammaR=0.8, betaR0=3.0, betaRY=2.0),
        )
        a, r = solve_riccati("insurer", b), solve_riccati("reinsurer", b)
        assert np.array_equal(a.A, r.A) and np.array_equal(a.Hlo, r.Hlo) and np.array_equal(a.Hhi, r.Hhi)

    def test_variants_coincide_at_zero_field(self):
        b = ModelBundle(market=MarketParams(xi=0.0), insurer=InsurerPrefs(alpha=0.5))
        th = solve_riccati("insurer", b)
        ap = solve_riccati("insurer", b.replace(solver=SolverConventions(riccati_variant="appendix")))
        assert np.array_equal(th.A, ap.A) and np.array_equal(th.Hhi, ap.Hhi)

    def test_blow_up_reported(self):
        # strong ambiguity seeking on the variance loading makes A explode
        b = ModelBundle(
            market=MarketParams(kappa=0.5, delta=4.0, sigma=2.0, xi=5.0, T=50.0),
            solver=SolverConventions(riccati_variant="theorem"),
            insurer=InsurerPrefs(alpha=1.0, betaY=40.0, beta0=40.0),
            claims=DiscreteAtoms(((1.0, 1.0),)),
        )
        with pytest.raises(BlowUpError) as exc:
            solve_riccati("insurer", b)
        assert 0 <= exc.value.time <= 50.0

    def test_invalid_bundle(self):
        with pytest.raises(InvalidBundleError):
            solve_riccati("insurer", ModelBundle(market=MarketParams(sigma=5.0)))


class TestExistenceBound:
    def test_zero_field_infinite(self):
        eb = existence_bound(with_value(ModelBundle(), "market.xi", 0.0))
        assert eb.q == 0.0 and eb.Delta == eb.d**2 and eb.zeta1 == 0.0
        assert eb.t_max == math.inf and eb.holds and eb.note

    def test_double_root(self):
        Delta, z1, z2, t_max, case, _ = horizon_bound(2.0, 1.0, 1.0)
        assert Delta == 0.0 and t_max == 1.0 and case == "Delta=0"

    def test_complex_case(self):
        Delta, z1, z2, t_max, case, _ = horizon_bound(1.0, 1.0, 1.0)
        assert case == "Delta<0" and Delta == -3.0
        # blow-up time of p' = p^2 + p + 1 from p = 0
        ref = float(mp.quad(lambda p: 1 / (p * p + p + 1), [0, mp.inf]))
        assert abs(t_max - ref) <= 1e-14

    def test_real_case_matches_quadratic_blow_up(self):
        Delta, z1, z2, t_max, case, _ = horizon_bound(5.0, 2.0, 1.0)
        ref = float(mp.quad(lambda p: 1 / (2 * p * p + 5 * p + 1), [0, mp.inf]))
        assert case == "Delta>0" and abs(t_max - ref) <= 1e-14

    def test_baseline_against_sheet(self, baseline):
        eb = existence_bound(baseline)
        sheet = mp_existence(baseline.market, 0.8, 0.5, 4.0, 4.0)
        for name, row in sheet["sheet"].items():
            assert eb.entries[name] == pytest.approx([float(v) for v in row], rel=1e-14, abs=1e-15)
        # frozen from the 40-digit sheet
        assert abs(eb.d - 4.1724137931034482759) <= 1e-14
        assert abs(eb.k - 2.0114149821640903686) <= 1e-14
        assert abs(eb.q - 0.82045184304399524376) <= 1e-14
        assert abs(eb.Delta - 10.80796034390857382) <= 1e-13
        assert abs(eb.t_max - 0.64846764417348753523) <= 1e-14
        assert eb.case_tag == "Delta>0" and not eb.holds

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0.5, 1.0), st.floats(0.1, 3.0), st.floats(0.5, 8.0), st.floats(-1, 1))
    def test_root_relations(self, alpha, gamma, beta0, rho0):
        b = ModelBundle(market=MarketParams(rho0=rho0), insurer=InsurerPrefs(alpha=alpha, gamma=gamma, beta0=beta0))
        eb = existence_bound(b)
        assert eb.Delta == eb.d**2 - 4 * eb.k * eb.q
        if eb.case_tag == "Delta>0" and eb.k > 0:
            assert eb.zeta1 * eb.zeta2 == pytest.approx(eb.q / eb.k, rel=1e-12, abs=1e-300)
            assert eb.zeta1 + eb.zeta2 == pytest.approx(-eb.d / eb.k, rel=1e-12)

    def test_reinsurer_caveat(self, baseline):
        assert "insurer" in existence_bound(baseline, "reinsurer").note
