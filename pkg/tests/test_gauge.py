import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from certfp.gauge import (
    CertifiedModulus,
    CustomGauge,
    DomainError,
    Geometric,
    GaugeTail,
    LinearDefect,
    ModulusMethod,
    N_GAUGE_CAP,
    NotCertifiable,
    certify_modulus,
    eval_gauge,
    gauge_orbit,
    n_gauge,
    n_geo,
    phi_gauge,
    phi_gauge_series,
    phi_geo,
    power_defect,
)

kappas = st.floats(0.0, 0.999)
deltas = st.floats(1e-6, 1e3)
epss = st.floats(1e-12, 1e2)


def quadratic(q, R):
    return CustomGauge(lambda r: q * r * r / R, ratio="nondecreasing", theta=(q,))


class TestModulus:
    def test_geometric_is_analytic(self):
        m = certify_modulus(Geometric(0.5), 3.0)
        assert m.kappa == 0.5 and m.radius == 3.0 and m.method is ModulusMethod.ANALYTIC

    def test_linear_defect(self):
        assert certify_modulus(LinearDefect(0.25), 1.0).kappa == 0.75

    def test_monotone_ratio_sup_at_radius(self):
        m = certify_modulus(quadratic(0.6, 2.0), 2.0)
        assert m.method is ModulusMethod.GRID_SUP_MONOTONE_RATIO
        assert 0.6 <= m.kappa <= 0.6 * (1 + 1e-11)

    def test_power_defect_refused(self):
        with pytest.raises(NotCertifiable, match="sup ratio reaches 1"):
            certify_modulus(power_defect(0.3, 3.0), 0.5)

    def test_undeclared_ratio_refused(self):
        with pytest.raises(NotCertifiable, match="undeclared"):
            certify_modulus(CustomGauge(lambda r: r / 2), 1.0)

    def test_analytic_routine_takes_precedence(self):
        g = CustomGauge(lambda r: r / (1 + r), ratio="nonincreasing",
                        modulus_fn=lambda R: 0.9)
        assert certify_modulus(g, 1.0).kappa == 0.9

    def test_nonincreasing_without_routine_refused(self):
        g = CustomGauge(lambda r: 0.5 * r / (1 + r), ratio="nonincreasing")
        with pytest.raises(NotCertifiable, match="analytic modulus"):
            certify_modulus(g, 1.0)

    def test_ratio_one_refused(self):
        with pytest.raises(NotCertifiable):
            certify_modulus(CustomGauge(lambda r: r, ratio="nondecreasing"), 1.0)

    @pytest.mark.parametrize("radius", [0.0, -1.0])
    def test_bad_radius(self, radius):
        with pytest.raises(DomainError):
            certify_modulus(Geometric(0.5), radius)

    def test_certified_modulus_validates(self):
        with pytest.raises(NotCertifiable):
            CertifiedModulus(1.0, 1.0)

    @pytest.mark.parametrize("q", [-0.1, 1.0])
    def test_geometric_domain(self, q):
        with pytest.raises(DomainError):
            Geometric(q)

    @pytest.mark.parametrize("c", [0.0, 1.5])
    def test_defect_domain(self, c):
        with pytest.raises(DomainError):
            LinearDefect(c)


class TestOrbit:
    def test_eval_gauge_at_zero(self):
        assert eval_gauge(Geometric(0.5), 0.0) == 0.0

    def test_eval_gauge_negative(self):
        with pytest.raises(DomainError):
            eval_gauge(Geometric(0.5), -1.0)

    def test_orbit_values(self):
        assert gauge_orbit(Geometric(0.5), 1.0, 3) == [1.0, 0.5, 0.25, 0.125]


class TestPhiGeo:
    def test_closed_form(self):
        assert phi_geo(0, 0.5, 1.0) == 2.0
        assert phi_geo(3, 0.5, 1.0) == 0.25

    def test_kappa_out_of_range(self):
        with pytest.raises(DomainError):
            phi_geo(1, 1.0, 1.0)

    @given(kappas, deltas, st.integers(0, 300))
    def test_monotone_in_n(self, kappa, delta0, n):
        assert phi_geo(n + 1, kappa, delta0) <= phi_geo(n, kappa, delta0)


class TestPhiGauge:
    def test_geometric_matches_closed_form(self):
        m = certify_modulus(Geometric(0.5), 1.0)
        for n in range(30):
            assert math.isclose(phi_gauge(Geometric(0.5), n, 1.0, m), phi_geo(n, 0.5, 1.0),
                                rel_tol=1e-12)

    def test_strictly_sharper_for_superlinear_gauge(self):
        g = quadratic(0.9, 1.0)
        m = certify_modulus(g, 1.0)
        assert phi_gauge(g, 5, 0.5, m) < 0.1 * phi_geo(5, m.kappa, 0.5)

    def test_delta0_beyond_radius(self):
        with pytest.raises(DomainError):
            phi_gauge(Geometric(0.5), 0, 2.0, certify_modulus(Geometric(0.5), 1.0))

    @settings(max_examples=200, deadline=None)
    @given(st.floats(0.05, 0.99), st.floats(0.1, 10.0), st.floats(0.0, 1.0),
           st.integers(0, 40))
    def test_sound_upper_bound_of_orbit_tail(self, q, R, frac, n):
        # oracle: explicit partial sum of the gauge orbit
        g = quadratic(q, R)
        m = certify_modulus(g, R)
        orbit = gauge_orbit(g, frac * R, n + 400)
        assert phi_gauge(g, n, frac * R, m) >= sum(orbit[n:]) * (1 - 1e-12)

    def test_series_matches_pointwise(self):
        g = LinearDefect(0.3)
        m = certify_modulus(g, 2.0)
        series = phi_gauge_series(g, 1.5, m, 10)
        assert series == [phi_gauge(g, n, 1.5, m) for n in range(11)]

    def test_tail_object_reuses_orbit(self):
        g = quadratic(0.5, 1.0)
        tail = GaugeTail(g, 1.0, certify_modulus(g, 1.0))
        assert tail(3) == phi_gauge(g, 3, 1.0, certify_modulus(g, 1.0))
        with pytest.raises(DomainError):
            tail(-1)


def _scan(eps, kappa, delta0):
    n = 0
    while phi_geo(n, kappa, delta0) > eps:
        n += 1
    return n


class TestStoppingIndices:
    def test_reference_value(self):
        assert n_geo(1e-6, 0.5, 1.0) == 21

    def test_zero_when_already_small(self):
        assert n_geo(10.0, 0.5, 1.0) == 0

    def test_kappa_zero(self):
        assert n_geo(1e-3, 0.0, 1.0) == 1

    @given(epss, kappas, deltas)
    @settings(max_examples=300)
    def test_closed_form_equals_scan(self, eps, kappa, delta0):
        assert n_geo(eps, kappa, delta0) == _scan(eps, kappa, delta0)

    @given(epss, st.floats(0.01, 0.95), st.floats(0.0, 1.0))
    @settings(max_examples=100, deadline=None)
    def test_gauge_index_minimal_and_not_later(self, eps, kappa, frac):
        g = Geometric(kappa)
        m = certify_modulus(g, 1.0)
        n = n_gauge(g, eps, frac, m)
        assert phi_gauge(g, n, frac, m) <= eps
        assert n == 0 or phi_gauge(g, n - 1, frac, m) > eps
        assert n <= n_geo(eps, kappa, frac) + 1

    def test_bad_eps(self):
        with pytest.raises(DomainError):
            n_geo(0.0, 0.5, 1.0)
        with pytest.raises(DomainError):
            n_gauge(Geometric(0.5), -1.0, 1.0, certify_modulus(Geometric(0.5), 1.0))

    def test_cap_constant(self):
        assert N_GAUGE_CAP == 10**7
