import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import special

from hypocopula.errors import DomainError, NoBracket
from hypocopula.numerics import (LogTable, QuadratureConfig, TabulatedMonotone, cumulative_integral,
                                 distance_grid, find_root, integrate, integrate_2d, integrate_batch,
                                 normal_cdf, normal_quantile, normal_sf)


def test_integrate_smooth_and_singular():
    assert integrate(np.sin, 0.0, math.pi) == pytest.approx(2.0, abs=1e-12)
    # integrable endpoint singularity, never evaluated at 0
    assert integrate(lambda x: 1 / np.sqrt(x), 0.0, 1.0) == pytest.approx(2.0, rel=1e-9)


def test_integrate_rejects_reversed_limits():
    with pytest.raises(DomainError):
        integrate(np.sin, 1.0, 0.0)
    with pytest.raises(DomainError):
        QuadratureConfig(rel_tol=0.0)


def test_batched_owners_are_independent():
    a = np.array([0.0, 0.0, 1.0])
    b = np.array([1.0, 2.0, 3.0])
    owner = np.arange(3)
    got = integrate_batch(lambda x, o: x ** (o + 1), a, b, owner, 3)
    assert np.allclose(got, [0.5, 8 / 3, (81 - 1) / 4], rtol=1e-12)


def test_cumulative_integral_matches_antiderivative():
    x = np.linspace(0, 2, 21)
    assert np.allclose(cumulative_integral(np.exp, x), np.exp(x) - 1, rtol=1e-12, atol=1e-14)


def test_integrate_2d_triangle_area():
    area = integrate_2d(lambda u, v: np.where(v <= 1 - u, 1.0, 0.0), [0.0, 1.0],
                        lambda u: np.atleast_1d(1 - u)[:, None], QuadratureConfig(), QuadratureConfig())
    assert area == pytest.approx(0.5, abs=1e-12)


@given(st.floats(min_value=-37.0, max_value=8.0))
def test_normal_cdf_matches_scipy(x):
    # both sit within ~1e-13 of the true value deep in the tail
    assert normal_cdf(x) == pytest.approx(special.ndtr(x), rel=3e-13, abs=1e-300)
    assert normal_sf(x) == pytest.approx(special.ndtr(-x), rel=3e-13, abs=1e-300)


@given(st.floats(min_value=1e-300, max_value=1 - 1e-16))
def test_normal_quantile_round_trip(p):
    x = normal_quantile(p)
    assert normal_cdf(x) == pytest.approx(p, rel=1e-12)


def test_normal_quantile_centre():
    assert normal_quantile(0.5) == 0.0
    assert normal_cdf(0.0) == 0.5


def test_find_root_and_missing_bracket():
    assert find_root(lambda x: x * x - 2, 0.0, 2.0) == pytest.approx(math.sqrt(2), abs=1e-14)
    with pytest.raises(NoBracket):
        find_root(lambda x: x * x + 1, -1.0, 1.0)


@given(st.floats(min_value=0.0, max_value=1.0))
def test_monotone_table_inverse(y):
    x = np.linspace(0.0, 1.0, 41)
    t = TabulatedMonotone.from_knots(x, x ** 3 + x, 3 * x ** 2 + 1)
    assert float(t(t.inverse(y))) == pytest.approx(y, abs=1e-13)


def test_monotone_table_rejects_bumps():
    with pytest.raises(Exception):
        TabulatedMonotone.from_knots([0.0, 1.0, 2.0], [0.0, 1.0, 0.5])


def test_log_table_power_tail_and_round_trip():
    s = np.geomspace(1e-11, 1.0, 2201)  # 200 knots per decade
    y = s ** -1.5
    t = LogTable.from_knots(s, y, -1.5 * s ** -2.5)
    probe = np.geomspace(2e-11, 0.9, 333)
    assert np.max(np.abs(t(probe) / probe ** -1.5 - 1)) < 1e-10
    back = LogTable.from_dict(t.to_dict())
    assert np.array_equal(back(probe), t(probe))


def test_distance_grid_shape():
    g = distance_grid(0.7, n_uniform=100, per_decade=20, eps=1e-11)
    assert g[0] == pytest.approx(1e-11) and g[-1] == pytest.approx(0.7)
    assert np.all(np.diff(g) > 0)
