import pytest
from hypothesis import settings

from hypocopula import (build_main, example_5_3, example_5_4, gaussian_shift_h, independence,
                        power_copula, quadratic_l, separable_from_L, sine_copula)

settings.register_profile("default", max_examples=50, deadline=None)
settings.load_profile("default")


def _corpus():
    out = {
        "independence": independence(),
        "power_k2": power_copula(2.0),
        "power_k4": power_copula(4.0),
        "sine": sine_copula(),
        "quadratic_a0.5": separable_from_L(quadratic_l(0.5)),
        "example_5_3": example_5_3(0.25, 2.0),
        "example_5_4": example_5_4(1.0, 2.0),
    }
    for d in (0.5, 1.0, 2.0):
        out[f"main_delta{d:g}"] = build_main(gaussian_shift_h(d))
    return out


@pytest.fixture(scope="session")
def corpus():
    return _corpus()


@pytest.fixture(scope="session")
def main1(corpus):
    return corpus["main_delta1"]
