import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, stats

from cirlab.experiments import mean_estimate
from cirlab.model import (
    BesselParams,
    CirParams,
    FellerClass,
    chi_moment,
    delta_of,
    feller_class,
    from_bessel,
    hitting_tail_bound,
    hitting_tail_shape,
    l1_distance_exact,
    mean_at,
    mean_at_cir,
    to_bessel,
)

pos = st.floats(min_value=1e-3, max_value=50, allow_nan=False)
nonneg = st.floats(min_value=0, max_value=50, allow_nan=False)


def chi_moment_quadrature(delta):
    """Independent oracle: integrate x^(1 - delta/2) against the chi-square density."""
    nu = 1 - delta / 2
    f = lambda x: x**nu * stats.chi2(delta).pdf(x)
    lo = integrate.quad(f, 0, 1, epsabs=1e-13, epsrel=1e-13, limit=500)[0]
    hi = integrate.quad(f, 1, np.inf, epsabs=1e-13, epsrel=1e-13, limit=500)[0]
    return lo + hi


def tail_shape_direct(z, r, delta):
    """Oracle in the original variable t, no substitution."""
    nu = 1 - delta / 2
    return z**nu * integrate.quad(lambda t: t ** (-nu - 1) * math.exp(-z / (2 * t)), r, np.inf, epsabs=1e-13)[0]


class TestParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            CirParams(a=0, b=0, sigma=1, x0=0)
        with pytest.raises(ValueError):
            CirParams(a=1, b=-1, sigma=1, x0=0)
        with pytest.raises(ValueError):
            CirParams(a=1, b=0, sigma=1, x0=0, T=0)
        with pytest.raises(ValueError):
            BesselParams(delta=0, b=0, z0=0)
        with pytest.raises(ValueError):
            BesselParams(delta=1, b=0, z0=-1)
        # slow-rate regime is allowed
        CirParams(a=0.1, b=0, sigma=3, x0=0)

    @pytest.mark.parametrize("a,sigma,expected", [(1, 2, 1.0), (0.5, 2, 0.5), (1, 1, 4.0)])
    def test_delta_of(self, a, sigma, expected):
        cir = CirParams(a=a, b=0, sigma=sigma, x0=0)
        assert delta_of(cir) == expected

    def test_delta_4_never_hits(self):
        assert feller_class(delta_of(CirParams(a=1, b=0, sigma=1, x0=0))) is FellerClass.NeverHitsZero

    def test_to_bessel_trivial(self):
        bes, rho, ts = to_bessel(CirParams(a=1, b=0, sigma=2, x0=0, T=1))
        assert bes == BesselParams(1.0, 0.0, 0.0)
        assert rho == 1.0 and ts == 1.0

    def test_to_bessel_scaled(self):
        bes, rho, ts = to_bessel(CirParams(a=1, b=1, sigma=2, x0=2, T=4))
        assert rho == 0.25
        assert (bes.delta, bes.b, bes.z0) == (1.0, 4.0, 0.5)
        assert ts == 4

    @pytest.mark.slow
    def test_to_bessel_scaled_monte_carlo(self):
        cir = CirParams(a=1, b=1, sigma=2, x0=2, T=4)
        bes, rho, _ = to_bessel(cir)
        m, se = mean_estimate(bes, 1.0, 200_000, seed=11)
        assert abs(m - rho * mean_at_cir(cir, cir.T)) <= 3 * se

    @given(a=pos, b=nonneg, sigma=pos, x0=nonneg, T=pos)
    def test_round_trip(self, a, b, sigma, x0, T):
        cir = CirParams(a=a, b=b, sigma=sigma, x0=x0, T=T)
        back = from_bessel(to_bessel(cir)[0], sigma, T)
        for f in ("a", "b", "sigma", "x0", "T"):
            assert getattr(back, f) == pytest.approx(getattr(cir, f), rel=1e-12, abs=1e-300)

    @given(a=pos, b=nonneg, sigma=pos, x0=nonneg, T=pos)
    def test_mean_transport(self, a, b, sigma, x0, T):
        cir = CirParams(a=a, b=b, sigma=sigma, x0=x0, T=T)
        bes, rho, _ = to_bessel(cir)
        assert rho * mean_at_cir(cir, T) == pytest.approx(mean_at(bes, 1.0), rel=1e-12, abs=1e-300)


class TestMean:
    def test_b_zero_branch(self):
        assert mean_at(BesselParams(1, 0, 1), 1) == 2

    def test_values(self):
        assert mean_at(BesselParams(1, 1, 0), 1) == pytest.approx(0.6321205588285577, rel=1e-14)
        assert mean_at(BesselParams(0.5, 1, 2), 1) == pytest.approx(1.0518191617571635, rel=1e-14)

    @pytest.mark.parametrize("p", [BesselParams(1, 1, 0), BesselParams(0.5, 1, 2)])
    def test_monte_carlo(self, p):
        m, se = mean_estimate(p, 1.0, 1_000_000, seed=5)
        assert abs(m - mean_at(p, 1.0)) <= 3 * se

    @given(d=pos, b=nonneg, z=nonneg)
    def test_time_zero(self, d, b, z):
        assert mean_at(BesselParams(d, b, z), 0.0) == z

    @pytest.mark.parametrize("b", [1e-12, 1e-8])
    @pytest.mark.parametrize("d,z,t", [(1, 1, 1), (0.5, 3, 2), (2, 0, 0.5)])
    def test_continuous_at_zero_rate(self, b, d, z, t):
        assert mean_at(BesselParams(d, b, z), t) == pytest.approx(z + d * t, rel=1e-6)

    def test_negative_time(self):
        with pytest.raises(ValueError):
            mean_at(BesselParams(1, 0, 0), -1)


class TestL1:
    def test_values(self):
        assert l1_distance_exact(5, 5, 3, 2) == 0
        assert l1_distance_exact(1, 0, 0, 7) == 1
        assert l1_distance_exact(3, 1, 1, 1) == pytest.approx(0.7357588823428847, rel=1e-14)

    @given(z1=nonneg, z2=nonneg, z3=nonneg, b=nonneg, t=nonneg)
    def test_metric(self, z1, z2, z3, b, t):
        assert l1_distance_exact(z1, z2, b, t) == l1_distance_exact(z2, z1, b, t)
        lhs = l1_distance_exact(z1, z3, b, t)
        rhs = l1_distance_exact(z1, z2, b, t) + l1_distance_exact(z2, z3, b, t)
        assert lhs <= rhs * (1 + 1e-12) + 1e-300


class TestFellerAndHitting:
    @pytest.mark.parametrize(
        "d,cls",
        [(0.5, FellerClass.HitsZeroAlmostSurely), (2.0, FellerClass.NeverHitsZero), (3.0, FellerClass.NeverHitsZero)],
    )
    def test_feller(self, d, cls):
        assert feller_class(d) is cls

    @pytest.mark.parametrize("d", [0.25, 0.5, 1.0, 1.5, 1.9])
    def test_chi_moment_against_quadrature(self, d):
        assert chi_moment(d) == pytest.approx(chi_moment_quadrature(d), abs=1e-8)

    def test_chi_moment_frozen(self):
        # quadrature oracle values
        assert chi_moment(1.0) == pytest.approx(0.7978845608028655, abs=1e-12)
        assert chi_moment(0.5) == pytest.approx(0.4638648042895005, abs=1e-12)
        assert chi_moment(2 - 1e-12) == pytest.approx(1.0, abs=1e-9)

    def test_chi_moment_rejects(self):
        with pytest.raises(ValueError):
            chi_moment(2.0)

    def test_tail_shape_value(self):
        # integral of t^(-3/2) exp(-1/2t) over [1, inf), frozen from the direct quadrature oracle
        assert hitting_tail_shape(1, 1, 1) == pytest.approx(1.7112487837842971, abs=1e-9)

    @pytest.mark.parametrize("z,r,d", [(0.3, 0.1, 0.5), (2.0, 1.0, 1.5), (1e-3, 1e-2, 0.25), (5.0, 0.01, 1.0)])
    def test_tail_shape_direct(self, z, r, d):
        assert hitting_tail_shape(z, r, d) == pytest.approx(tail_shape_direct(z, r, d), rel=1e-8)

    def test_tail_shape_small_z(self):
        assert hitting_tail_shape(0, 1, 1) == 0
        assert hitting_tail_shape(1e-12, 1, 1) < 1e-5

    @given(
        z=st.floats(0.01, 10), r=st.floats(0.01, 10), dr=st.floats(0.01, 5), d=st.floats(0.1, 1.9), dz=st.floats(0.01, 5)
    )
    def test_tail_shape_monotone_and_bounded(self, z, r, dr, d, dz):
        v = hitting_tail_shape(z, r, d)
        assert hitting_tail_shape(z, r + dr, d) <= v * (1 + 1e-9)
        assert hitting_tail_shape(z + dz, r, d) >= v * (1 - 1e-9)
        assert v <= hitting_tail_bound(z, r, d) * (1 + 1e-9)

    def test_tail_shape_rejects(self):
        with pytest.raises(ValueError):
            hitting_tail_shape(1, 1, 2.5)
