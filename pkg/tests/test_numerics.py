import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reins import DiscreteAtoms, RayleighCompoundPoisson, TimeGrid, integrate_backward, integrate_claim, normal_cdf
from reins.errors import BlowUpError, QuadratureError
from reins.numerics import _GW, _KW, _NODES, integrate_interval


class TestNormalCdf:
    def test_zero(self):
        assert normal_cdf(0.0) == 0.5

    def test_far_tail(self):
        assert normal_cdf(40.0) == 1.0

    def test_one_matches_high_precision(self):
        # frozen from a 20-digit evaluation; re-checked live below
        assert abs(normal_cdf(1.0) - 0.84134474606854292578) <= 1e-15
        assert abs(normal_cdf(1.0) - float(mp.ncdf(1))) <= 1e-15

    @given(st.floats(-30, 30))
    def test_symmetry(self, x):
        assert abs(normal_cdf(x) + normal_cdf(-x) - 1.0) <= 1e-15

    @settings(max_examples=40)
    @given(st.floats(-8, 8))
    def test_absolute_error(self, x):
        with mp.workdps(30):
            ref = mp.ncdf(mp.mpf(x))
        assert abs(normal_cdf(x) - float(ref)) <= 1e-14

    def test_monotone_on_grid(self):
        xs = np.linspace(-10, 10, 10_000)
        assert np.all(np.diff(normal_cdf(xs)) >= 0)


class TestTimeGrid:
    def test_endpoints_and_spacing(self):
        g = TimeGrid(10.0, 10_000)
        assert g.nodes[0] == 0.0 and g.nodes[-1] == 10.0
        assert len(g.nodes) == 10_001
        assert np.all(np.diff(g.nodes) > 0)
        assert np.allclose(np.diff(g.nodes), g.step, rtol=1e-9)


class TestGaussKronrod:
    def test_weights_sum_to_two(self):
        assert abs(_KW.sum() - 2.0) < 1e-15
        assert abs(_GW.sum() - 2.0) < 1e-15

    def test_polynomial_exactness(self):
        # the 15-point Kronrod rule integrates degree <= 22 exactly, the 7-point Gauss rule <= 13
        for k in range(0, 23):
            exact = 0.0 if k % 2 else 2.0 / (k + 1)
            assert abs(float(_NODES**k @ _KW) - exact) < 1e-14
            if k <= 13:
                assert abs(float(_NODES**k @ _GW) - exact) < 1e-14

    def test_interval_against_mpmath(self):
        f = lambda x: np.exp(-x) * np.sin(3 * x)  # noqa: E731
        val, err = integrate_interval(f, 0.0, 5.0)
        ref = float(mp.quad(lambda x: mp.e**(-x) * mp.sin(3 * x), [0, 5]))
        assert abs(val - ref) <= 1e-13
        assert err >= 0

    def test_kink_with_breaks(self):
        val, _ = integrate_interval(lambda x: np.abs(x - 0.3), 0.0, 1.0, breaks=[0.3])
        assert abs(val - (0.3**2 + 0.7**2) / 2) < 1e-15

    def test_non_finite_raises(self):
        with pytest.raises(QuadratureError):
            integrate_interval(lambda x: np.full_like(x, np.inf), 0.0, 1.0)


class TestIntegrateClaim:
    def test_discrete_sum(self):
        nu = DiscreteAtoms(((1.0, 2.0), (3.0, 1.0)))
        r = integrate_claim(nu, lambda z: z)
        assert r.value == 5.0 and r.error_estimate == 0.0

    def test_discrete_lower(self):
        nu = DiscreteAtoms(((1.0, 2.0), (3.0, 1.0)))
        assert integrate_claim(nu, lambda z: z, lower=2.0).value == 3.0

    def test_discrete_empty_range(self):
        nu = DiscreteAtoms(((1.0, 2.0),))
        assert integrate_claim(nu, lambda z: z, lower=5.0).value == 0.0

    def test_rayleigh_second_moment(self):
        nu = RayleighCompoundPoisson(1.0, 1.0)
        r = integrate_claim(nu, lambda z: z * z)
        assert abs(r.value - 1.0) <= 1e-12
        # oracle: fine-grid midpoint sum
        z = (np.arange(2_000_000) + 0.5) * (12.0 / 2_000_000)
        ref = float(np.sum(z * z * nu.density(z)) * (12.0 / 2_000_000))
        assert abs(r.value - ref) <= 1e-10

    def test_rayleigh_tail_certified(self):
        nu = RayleighCompoundPoisson(2.0, 1.5)
        r = integrate_claim(nu, lambda z: z, tail_rel_tol=1e-15)
        assert nu.tail_mass(r.truncation_point) <= 1e-15 * abs(r.value)

    @settings(max_examples=25, deadline=None)
    @given(st.floats(0.1, 5.0), st.floats(0.2, 3.0))
    def test_rayleigh_mean_matches_moment(self, lambda0, lam):
        nu = RayleighCompoundPoisson(lambda0, lam)
        r = integrate_claim(nu, lambda z: z)
        assert abs(r.value - nu.first_moment()) <= 1e-12 * nu.first_moment()

    def test_rayleigh_lower_limit(self):
        nu = RayleighCompoundPoisson(1.0, 1.0)
        r = integrate_claim(nu, lambda z: np.ones_like(z), lower=0.7)
        assert abs(r.value - math.exp(-0.49)) <= 1e-13


class TestIntegrateBackward:
    def test_linear(self):
        out = integrate_backward(lambda t, y: y, [1.0], TimeGrid(1.0, 10_000))
        assert abs(out[0, 0] - math.exp(-1.0)) <= 1e-10
        assert out[-1, 0] == 1.0

    def test_zero_rhs(self):
        v = np.array([1.5, -2.0])
        out = integrate_backward(lambda t, y: np.zeros_like(y), v, TimeGrid(3.0, 100))
        assert np.all(out == v)

    def test_time_dependent(self):
        out = integrate_backward(lambda t, y: -2 * t * y, [1.0], TimeGrid(1.0, 10_000))
        assert abs(out[0, 0] - math.e) <= 1e-10

    def test_fourth_order(self):
        # y' = 10 y keeps the truncation error well above rounding at these step counts
        errs = []
        for n in (500, 1000, 2000):
            out = integrate_backward(lambda t, y: 10.0 * y, [1.0], TimeGrid(1.0, n))
            errs.append(abs(out[0, 0] / math.exp(-10.0) - 1.0))
        assert errs[0] / errs[1] >= 14 and errs[1] / errs[2] >= 14

    def test_blow_up(self):
        # y' = y^2 backward from y(1) = -2 gives y(t) = -1/(t - 1/2)
        with pytest.raises(BlowUpError) as exc:
            integrate_backward(lambda t, y: y * y, [-2.0], TimeGrid(1.0, 10_000))
        assert 0.49 <= exc.value.time <= 0.51
