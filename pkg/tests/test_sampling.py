import numpy as np
import pytest
from hypothesis import example, given, strategies as st
from scipy import stats

from hypocopula import (build_main, example_5_3, gaussian_shift_h, independence,
                        invert_conditional, power_copula, sample_pairs, sine_copula,
                        to_normal_pairs)
from hypocopula.errors import DomainError
from hypocopula.sampling import SampleBatch, format_pairs_csv, read_pairs_csv, write_pairs_csv

_MAIN = build_main(gaussian_shift_h(1.0))


def test_independence_margins():
    b = sample_pairs(independence(), 20_000, 11)
    assert stats.kstest(b.v, "uniform").pvalue > 1e-3
    assert stats.kstest(b.u, "uniform").pvalue > 1e-3


def test_deterministic_and_parallel_invariant(main1):
    a = sample_pairs(main1, 40_000, 5)
    b = sample_pairs(main1, 40_000, 5, workers=3)
    assert np.array_equal(a.pairs, b.pairs)
    assert not np.array_equal(a.pairs, sample_pairs(main1, 40_000, 6).pairs)


def test_support_and_open_square(main1):
    b = sample_pairs(main1, 20_000, 1)
    assert np.all((b.pairs > 0) & (b.pairs < 1))
    assert np.all(b.v <= main1.h.eval(b.u))
    xy = to_normal_pairs(b)
    assert np.all(xy[:, 1] - xy[:, 0] <= 1.0)


def test_piecewise_support():
    c = example_5_3()
    b = sample_pairs(c, 10_000, 2)
    assert np.all(b.v <= c.h.eval(b.u))


@given(st.floats(min_value=1e-6, max_value=1 - 1e-6), st.floats(min_value=0.0, max_value=1.0))
@example(u=1e-6, t=1e-8)
@example(u=0.999999, t=0.999999)
@example(u=0.999999, t=1.0)
def test_inversion_round_trip(u, t):
    for c in (power_copula(3.0), sine_copula(), _MAIN):
        v = invert_conditional(c, u, t)
        got = float(c.conditional_cdf(u, v[0]))
        assert got == pytest.approx(t, abs=1e-8)


def test_bad_arguments(main1):
    with pytest.raises(DomainError):
        sample_pairs(main1, 0, 1)
    with pytest.raises(DomainError):
        invert_conditional(main1, [0.0], [0.5])


def test_normal_pairs_centre():
    b = SampleBatch(np.array([[0.5, 0.5]]), 0)
    assert np.array_equal(to_normal_pairs(b), [[0.0, 0.0]])


def test_csv_round_trip(tmp_path):
    arr = np.array([[0.1, 1 / 3], [np.nextafter(0.5, 1), 1e-300]])
    path = tmp_path / "p.csv"
    write_pairs_csv(path, arr, ("x", "y"))
    header, back = read_pairs_csv(path)
    assert header == ("x", "y")
    assert np.array_equal(back, arr)
    assert format_pairs_csv(arr).splitlines()[0] == "u,v"

