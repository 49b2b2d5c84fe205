import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from hypocopula.errors import DomainError
from hypocopula.support import (custom_h, gap_integral, gaussian_shift_h, piecewise_linear_h,
                                support_from_dict, validate_support)

deltas = st.floats(min_value=0.05, max_value=5.0)
units = st.floats(min_value=1e-6, max_value=1 - 1e-6)


@given(deltas)
def test_gaussian_u0_is_fixed_point(delta):
    h = gaussian_shift_h(delta)
    assert h.u0 == pytest.approx(stats.norm.cdf(-delta / 2), abs=1e-15)
    assert float(h.eval(h.u0)) == pytest.approx(1 - h.u0, abs=1e-14)


@given(deltas, units)
def test_gaussian_symmetry_and_gap(delta, u):
    h = gaussian_shift_h(delta)
    if 1e-3 < u < 1 - 1e-3:
        # rounding of 1 - u is amplified by the slope of H^-1 closer to the ends
        assert float(h.eval(u) + h.inverse(1 - u)) == pytest.approx(1.0, abs=1e-13)
    assert float(h.gap(u)) > 0
    s = 1 - u
    direct = s - stats.norm.cdf(stats.norm.ppf(s) - delta)
    assert float(h.gap_s(s)) == pytest.approx(direct, rel=1e-9, abs=1e-16)


def test_valid_families_pass():
    for h in (gaussian_shift_h(1.0), gaussian_shift_h(0.3), piecewise_linear_h(0.25)):
        assert validate_support(h) == []


def test_piecewise_values():
    h = piecewise_linear_h(0.25)
    assert float(h.eval(0.25)) == pytest.approx(0.75)
    assert float(h.eval(0.1)) == pytest.approx(0.3)
    assert float(h.inverse(0.3)) == pytest.approx(0.1)
    assert float(h.derivative(0.6)) == pytest.approx(1 / 3)


def test_bad_parameters():
    with pytest.raises(DomainError):
        gaussian_shift_h(-1.0)
    with pytest.raises(DomainError):
        gaussian_shift_h(0.0)
    with pytest.raises(DomainError):
        piecewise_linear_h(0.5)
    with pytest.raises(DomainError):
        support_from_dict({"family": "cubic"})


def test_diagonal_is_degenerate():
    h = custom_h(lambda u: u, lambda v: v, lambda u: 1.0, u0=0.25)
    assert any("degenerate" in p or "u0" in p for p in validate_support(h))


def test_wrong_derivative_detected():
    g = gaussian_shift_h(1.0)
    h = custom_h(g.eval, g.inverse, lambda u: 2 * g.derivative(u), u0=g.u0)
    assert any("finite differences" in p for p in validate_support(h))


def test_gap_integral_diverges_slowly():
    h = gaussian_shift_h(1.0)
    a, b = gap_integral(h, 1 - 1e-4), gap_integral(h, 1 - 1e-8)
    assert math.isfinite(a) and b > a + 1


def test_round_trip_dict():
    for h in (gaussian_shift_h(0.7), piecewise_linear_h(0.2)):
        h2 = support_from_dict(h.to_dict())
        u = np.linspace(0.01, 0.99, 7)
        assert np.array_equal(h.eval(u), h2.eval(u))
