import math

import numpy as np
import pytest

from acminmax.potential import (
    EnergyConstant,
    Potential,
    PotentialError,
    coarea_constant,
    energy_constant,
    f_transform,
    heteroclinic_profile,
    make_standard_potential,
    polynomial_potential,
    profile_energy_1d,
    ramp_profile,
    transition_density_sup,
    truncated_profile,
    validate_potential,
)

SIGMA_CLOSED = math.sqrt(2.0) / 3.0


def gauss_legendre_integral(f, a, b, order=200):
    """Independent high-order quadrature oracle."""
    x, w = np.polynomial.legendre.leggauss(order)
    xm = 0.5 * (b - a) * x + 0.5 * (a + b)
    return 0.5 * (b - a) * float(np.sum(w * f(xm)))


def rk4_profile_oracle(p, t_end, n_steps=200_000):
    """Integrate q' = sqrt(2 W(q)) from q(0)=0 by classical RK4."""
    h = t_end / n_steps
    q = 0.0

    def f(v):
        return math.sqrt(max(2.0 * float(p.eval(v)), 0.0))

    for _ in range(n_steps):
        k1 = f(q)
        k2 = f(q + 0.5 * h * k1)
        k3 = f(q + 0.5 * h * k2)
        k4 = f(q + h * k3)
        q += (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return q


class TestStandardPotential:
    def test_well_values(self):
        p = make_standard_potential()
        assert p.eval(1.0) == 0.0
        assert p.eval(0.0) == 0.25
        assert p.eval(0.5) == pytest.approx(0.140625, abs=0)

    def test_validates(self):
        validate_potential(make_standard_potential())

    def test_derivatives_consistent(self):
        p = make_standard_potential()
        ts = np.linspace(-1, 1, 101)
        h = 1e-6
        fd1 = (p.eval(ts + h) - p.eval(ts - h)) / (2 * h)
        fd2 = (p.d1(ts + h) - p.d1(ts - h)) / (2 * h)
        assert np.max(np.abs(fd1 - p.d1(ts))) < 1e-9
        assert np.max(np.abs(fd2 - p.d2(ts))) < 1e-9


class TestEnergyConstant:
    def test_standard_matches_closed_form(self):
        ec = energy_constant(make_standard_potential(), tol=1e-12)
        assert abs(ec.sigma - SIGMA_CLOSED) < 1e-10
        assert ec.two_sigma == 2.0 * ec.sigma

    def test_standard_matches_independent_quadrature(self):
        p = make_standard_potential()
        oracle = gauss_legendre_integral(lambda s: np.sqrt(p.eval(s) / 2.0), -1.0, 1.0)
        ec = energy_constant(p)
        assert abs(ec.sigma - oracle) < 1e-12

    def test_scaling_by_four_doubles_sigma(self):
        p = make_standard_potential()
        p4 = Potential(eval=lambda t: 4.0 * p.eval(t), d1=lambda t: 4.0 * p.d1(t),
                       d2=lambda t: 4.0 * p.d2(t), sup_norm=1.0, name="scaled")
        assert energy_constant(p4).sigma == pytest.approx(2.0 * SIGMA_CLOSED, rel=1e-10)

    def test_degenerate_well_rejected(self):
        flat = Potential(eval=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
                         d1=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
                         d2=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
                         sup_norm=0.0, name="flat")
        with pytest.raises(PotentialError):
            energy_constant(flat)


class TestFTransform:
    def test_zero(self):
        assert f_transform(make_standard_potential(), 0.0) == 0.0

    def test_endpoints_are_half_sigma(self):
        p = make_standard_potential()
        assert f_transform(p, 1.0) == pytest.approx(SIGMA_CLOSED / 2.0, abs=1e-10)
        assert f_transform(p, -1.0) == pytest.approx(-SIGMA_CLOSED / 2.0, abs=1e-10)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            f_transform(make_standard_potential(), 1.5)

    def test_oddness(self):
        p = make_standard_potential()
        for t in (0.3, 0.77):
            assert f_transform(p, -t) == pytest.approx(-f_transform(p, t), abs=1e-12)


class TestHeteroclinicProfile:
    def test_initial_condition(self):
        prof = heteroclinic_profile(make_standard_potential())
        assert float(prof.q(0.0)) == 0.0

    def test_value_at_one_against_rk4(self):
        p = make_standard_potential()
        prof = heteroclinic_profile(p)
        oracle = rk4_profile_oracle(p, 1.0, n_steps=20_000)
        assert float(prof.q(1.0)) == pytest.approx(oracle, abs=1e-9)
        assert float(prof.q(1.0)) == pytest.approx(math.tanh(1.0 / math.sqrt(2.0)), abs=1e-12)

    def test_monotone_increasing_to_one(self):
        prof = heteroclinic_profile(make_standard_potential())
        ts = np.linspace(0.0, 14.0, 400)
        vals = prof.q(ts)
        assert np.all(np.diff(vals) >= -1e-15)
        assert vals[-1] < 1.0
        assert vals[-1] > 1.0 - 1e-8

    def test_ode_residual_on_grid(self):
        p = make_standard_potential()
        prof = heteroclinic_profile(p)
        ts = np.linspace(-8.0, 8.0, 1000)
        res = prof.derivative(ts) - np.sqrt(2.0 * p.eval(prof.q(ts)))
        assert np.max(np.abs(res)) <= 1e-8

    def test_numerical_path_matches_closed_form(self):
        # force the generic ODE route with a potential equal to the standard one
        p = make_standard_potential()
        generic = Potential(eval=p.eval, d1=p.d1, d2=p.d2, sup_norm=0.25, name="quartic-generic")
        prof = heteroclinic_profile(generic, tol=1e-12)
        ts = np.linspace(-12.0, 12.0, 201)
        assert np.max(np.abs(prof.q(ts) - np.tanh(ts / math.sqrt(2.0)))) < 1e-8


class TestTruncatedProfile:
    def test_zero_at_zero(self):
        prof = heteroclinic_profile(make_standard_potential())
        assert float(truncated_profile(prof, 0.04, 0.0)) == 0.0

    def test_exact_saturation(self):
        prof = heteroclinic_profile(make_standard_potential())
        eps = 0.04
        assert float(truncated_profile(prof, eps, 2.0 * math.sqrt(eps))) == 1.0
        assert float(truncated_profile(prof, eps, 5.0)) == 1.0
        assert float(truncated_profile(prof, eps, -0.9)) == -1.0

    def test_ramp_segment_against_hand_formula(self):
        prof = heteroclinic_profile(make_standard_potential())
        eps, t = 0.01, 0.15
        se = math.sqrt(eps)
        q_se = math.tanh((se / eps) / math.sqrt(2.0))
        expected = q_se + (t / se - 1.0) * (1.0 - q_se)
        got = float(truncated_profile(prof, eps, t))
        assert got == pytest.approx(expected, abs=1e-14)
        assert q_se < got < 1.0

    def test_odd_and_monotone(self):
        prof = heteroclinic_profile(make_standard_potential())
        eps = 0.09
        ts = np.linspace(-1.0, 1.0, 801)
        vals = truncated_profile(prof, eps, ts)
        assert np.max(np.abs(vals + truncated_profile(prof, eps, -ts))) < 1e-14
        assert np.all(np.diff(vals) >= -1e-15)


class TestRampProfile:
    def test_midpoint(self):
        assert float(ramp_profile(0.5, 0.25)) == 0.5

    def test_kink_and_saturation(self):
        assert float(ramp_profile(0.5, 0.5)) == 1.0
        assert float(ramp_profile(0.5, -1.0)) == -1.0

    def test_rejects_bad_rho(self):
        with pytest.raises(ValueError):
            ramp_profile(0.0, 0.1)


class TestProfileEnergy:
    def test_untruncated_equals_two_sigma(self):
        prof = heteroclinic_profile(make_standard_potential())
        e = profile_energy_1d(prof, 1.0)
        assert e == pytest.approx(2.0 * SIGMA_CLOSED, abs=1e-9)

    def test_eps_invariance(self):
        prof = heteroclinic_profile(make_standard_potential())
        vals = [profile_energy_1d(prof, e) for e in (1.0, 0.1, 0.01)]
        assert max(vals) - min(vals) < 1e-6

    def test_truncated_excess_small(self):
        prof = heteroclinic_profile(make_standard_potential())
        e = profile_energy_1d(prof, 0.01, truncated=True)
        assert 2.0 * SIGMA_CLOSED <= e <= 2.0 * SIGMA_CLOSED + 0.01


class TestConstants:
    def test_coarea_constant_is_pure_arithmetic(self):
        eps, rho = 0.07, 0.31
        assert coarea_constant(eps, rho, 0.25) == eps / (2 * rho * rho) + 0.25 / eps

    def test_transition_density_bounded(self):
        prof = heteroclinic_profile(make_standard_potential())
        for eps in (0.1, 0.02):
            c0 = transition_density_sup(prof, eps)
            # on the inner branch the density collapses to sqrt(2 W(q)) <= sqrt(2)*sqrt(sup W)
            assert 0.0 < c0 < 1.0

    def test_polynomial_potential_roundtrip(self):
        # (1-t^2)^2/4 = 1/4 - t^2/2 + t^4/4
        p = polynomial_potential([0.25, 0.0, -0.5, 0.0, 0.25])
        assert energy_constant(p).sigma == pytest.approx(SIGMA_CLOSED, abs=1e-9)

    def test_polynomial_potential_rejects_single_well(self):
        with pytest.raises(PotentialError):
            polynomial_potential([0.0, 0.0, 1.0])
