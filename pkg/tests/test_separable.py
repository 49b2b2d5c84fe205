import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hypocopula import (BuildOptions, independence, l_from_omega, linear_l, power_copula, power_g,
                        quadratic_l, separable_from_G, separable_from_L, sine_copula, sine_g)
from hypocopula.errors import DomainError, PositivityViolated
from hypocopula.separable import separable_from_dict

units = st.floats(min_value=1e-4, max_value=1 - 1e-4)
PROBES = np.linspace(0.0, 1.0, 1002)[1:-1]


def _fd_density(c, u, v, h=1e-5):
    return (c.cdf(u + h, v + h) - c.cdf(u + h, v - h) - c.cdf(u - h, v + h)
            + c.cdf(u - h, v - h)) / (4 * h * h)


def test_independence_values():
    c = independence()
    assert float(c.cdf(0.3, 0.7)) == pytest.approx(0.21, abs=1e-15)
    assert float(c.density(0.2, 0.9)) == pytest.approx(1.0, abs=1e-15)


def test_sine_values():
    c = sine_copula()
    assert float(c.cdf(0.5, 0.5)) == pytest.approx(1 / math.pi, abs=1e-14)
    # F'(u) G'(v) = cos(pi u/2) (pi/2) cos(pi v/2)
    want = 0.5 * math.pi * math.cos(math.pi / 8) ** 2
    assert float(c.density(0.25, 0.25)) == pytest.approx(want, abs=1e-12)
    assert float(_fd_density(c, 0.25, 0.25)) == pytest.approx(want, rel=1e-4)


@pytest.mark.parametrize("k", [1.0, 1.5, 2.0, 4.0, 8.0])
def test_power_closed_form_matches_quadrature(k):
    closed = power_copula(k)
    built = separable_from_G(power_g(k))
    err = np.abs(built.F(PROBES) - closed.F(PROBES)) / np.maximum(1.0, np.abs(closed.F(PROBES)))
    assert np.max(err) < 1e-8
    assert np.all(built.dF(PROBES) >= 0)


def test_power_closed_form_formula():
    c = power_copula(2.0)
    u = PROBES
    assert np.allclose(c.F(u), ((1 - u) ** -1 - (1 - u) ** 2) / 3, rtol=1e-14)
    assert float(separable_from_G(power_g(2.0)).F(0.5)) == pytest.approx(7 / 12, abs=1e-10)


def test_sine_quadrature_matches_closed_form():
    built = separable_from_G(sine_g())
    assert np.max(np.abs(built.F(PROBES) - 2 * np.sin(np.pi * PROBES / 2) / np.pi)) < 1e-8


def test_from_L_linear_equals_power():
    a = separable_from_L(linear_l(2.0))
    b = power_copula(2.0)
    u = np.linspace(0.01, 0.99, 99)
    assert np.allclose(a.cdf(u, 0.4), b.cdf(u, 0.4), atol=1e-9)


def test_positivity_rejected_below_one():
    with pytest.raises(PositivityViolated):
        separable_from_G(power_g(0.75))


QUAD = separable_from_L(quadratic_l(0.5))


@given(units, units)
def test_fd_density_oracle(u, v):
    if abs(u + v - 1) < 1e-3 or max(u, v) > 0.99:
        return
    for c in (power_copula(2.0), QUAD):
        assert float(_fd_density(c, u, v)) == pytest.approx(float(c.density(u, v)), rel=1e-4, abs=1e-5)


@given(units, units)
def test_cdf_within_frechet_bounds(u, v):
    for c in (power_copula(3.0), sine_copula()):
        x = float(c.cdf(u, v))
        assert max(u + v - 1, 0) - 1e-15 <= x <= min(u, v) + 1e-15


def test_tau_direct_values():
    assert independence().kendall_tau_direct() == pytest.approx(0.0, abs=1e-8)
    assert power_copula(2.0).kendall_tau_direct() == pytest.approx(-0.4, abs=1e-8)
    assert independence().kendall_tau_paper() == pytest.approx(1 / 3, abs=1e-8)


def test_tau_decreases_with_power():
    # G(v) = v**k concentrates mass on the anti-diagonal as k grows
    taus = [power_copula(k).kendall_tau_direct() for k in (1.0, 2.0, 4.0, 8.0)]
    assert all(a > b for a, b in zip(taus, taus[1:]))
    assert -1 < taus[-1] and taus[0] <= 1e-8


def test_l_from_omega_round_trip():
    c = separable_from_L(quadratic_l(0.5))
    u = np.linspace(0.05, 0.95, 91)
    got = l_from_omega(c.opposite_diagonal, c.opposite_diagonal_slope, u)
    assert np.max(np.abs(got - (1 - u) * (1 - 0.5 * u))) < 1e-9


def test_quadratic_rejects_bad_a():
    with pytest.raises(DomainError):
        quadratic_l(1.0)


def test_serialization_is_bit_exact():
    c = separable_from_L(quadratic_l(0.5), options=BuildOptions(knots=200, per_decade=50))
    back = separable_from_dict(c.to_dict())
    u, v = np.meshgrid(np.linspace(0.001, 0.999, 41), np.linspace(0.001, 0.999, 41))
    assert np.array_equal(back.cdf(u.ravel(), v.ravel()), c.cdf(u.ravel(), v.ravel()))
    assert np.array_equal(back.density(u.ravel(), v.ravel()), c.density(u.ravel(), v.ravel()))
