"""Support curves ``v <= H(u)`` for copulas with prescribed density support."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, IntegralDiverged, NonConvergence, NonFinite, NoBracket
from .numerics import (EPS, QuadratureConfig, _ret, as_vectorized, find_root, integrate,
                       normal_cdf, normal_quantile, normal_sf)


@dataclass(frozen=True, eq=False)
class SupportFunction:
    """Strictly increasing bijection H of [0, 1] whose hypograph carries the density.

    ``gap(u)`` returns ``H(u) - u`` and ``co_eval(u)`` returns ``1 - H(u)``;
    families override them with cancellation-free formulas.
    """

    eval: Callable
    inverse: Callable
    derivative: Callable
    u0: float
    family_tag: str = "custom"
    params: dict = field(default_factory=dict)
    gap_fn: Callable | None = None
    co_eval_fn: Callable | None = None
    gap_s_fn: Callable | None = None
    dh_s_fn: Callable | None = None

    def __call__(self, u):
        return self.eval(u)

    def gap(self, u):
        if self.gap_fn is not None:
            return self.gap_fn(u)
        return self.eval(u) - np.asarray(u, dtype=float)

    def co_eval(self, u):
        if self.co_eval_fn is not None:
            return self.co_eval_fn(u)
        return 1.0 - self.eval(u)

    def gap_s(self, s):
        """H(1 - s) - (1 - s) = s - H^-1(s), accurate for small s."""
        if self.gap_s_fn is not None:
            return self.gap_s_fn(s)
        s = np.asarray(s, dtype=float)
        return _ret(s, s - as_vectorized(self.inverse)(np.atleast_1d(s)).reshape(s.shape))

    def dh_s(self, s):
        """H'(1 - s)."""
        if self.dh_s_fn is not None:
            return self.dh_s_fn(s)
        s = np.asarray(s, dtype=float)
        return _ret(s, as_vectorized(self.derivative)(np.atleast_1d(1.0 - s)).reshape(s.shape))

    @property
    def delta(self) -> float | None:
        return self.params.get("delta")

    def to_dict(self) -> dict:
        if self.family_tag == "custom":
            raise DomainError("custom support functions cannot be serialized")
        return {"family": self.family_tag, **self.params}


_TINY = 1e-300
_BELOW_ONE = 1.0 - 1e-16


def _gaussian_parts(delta: float):
    def _scores(u):
        return normal_quantile(np.clip(u, _TINY, _BELOW_ONE))

    def h(u):
        u = np.asarray(u, dtype=float)
        out = np.where(u <= 0, 0.0, np.where(u >= 1, 1.0, normal_cdf(_scores(u) + delta)))
        return _ret(u, out)

    def h_inv(v):
        v = np.asarray(v, dtype=float)
        out = np.where(v <= 0, 0.0, np.where(v >= 1, 1.0, normal_cdf(_scores(v) - delta)))
        return _ret(v, out)

    def dh(u):
        # density ratio phi(x + delta) / phi(x) at x = Phi^-1(u)
        u = np.asarray(u, dtype=float)
        return _ret(u, np.exp(-delta * (_scores(u) + 0.5 * delta)))

    def gap(u):
        u = np.asarray(u, dtype=float)
        uc = np.clip(u, _TINY, _BELOW_ONE)
        x = _scores(uc)
        # above 1/2 use (1 - u) - (1 - H(u)); 1 - u is exact there
        out = np.where(uc > 0.5, (1.0 - uc) - normal_sf(x + delta), normal_cdf(x + delta) - uc)
        return _ret(u, out)

    def co_eval(u):
        u = np.asarray(u, dtype=float)
        return _ret(u, normal_sf(_scores(u) + delta))

    def gap_s(s):
        s = np.asarray(s, dtype=float)
        return _ret(s, s - normal_cdf(_scores(s) - delta))

    def dh_s(s):
        s = np.asarray(s, dtype=float)
        return _ret(s, np.exp(-delta * (0.5 * delta - _scores(s))))

    return h, h_inv, dh, gap, co_eval, gap_s, dh_s


def gaussian_shift_h(delta: float) -> SupportFunction:
    """H(u) = Phi(Phi^-1(u) + delta): the half-plane y <= x + delta in normal scores."""
    if not (delta > 0 and math.isfinite(delta)):
        raise DomainError(f"delta must be positive, got {delta!r}")
    h, h_inv, dh, gap, co, gap_s, dh_s = _gaussian_parts(float(delta))
    return SupportFunction(h, h_inv, dh, float(normal_cdf(-0.5 * delta)), "gaussian_shift",
                           {"delta": float(delta)}, gap, co, gap_s, dh_s)


def piecewise_linear_h(u0: float) -> SupportFunction:
    """Two-segment H through (0, 0), (u0, 1 - u0) and (1, 1)."""
    if not (0 < u0 < 0.5):
        raise DomainError(f"u0 must lie in (0, 1/2), got {u0!r}")
    u0 = float(u0)
    lo_slope = (1 - u0) / u0
    hi_slope = u0 / (1 - u0)

    def h(u):
        u = np.asarray(u, dtype=float)
        out = np.where(u <= u0, lo_slope * u, 1.0 - hi_slope * (1.0 - u))
        return _ret(u, out)

    def h_inv(v):
        v = np.asarray(v, dtype=float)
        out = np.where(v <= 1 - u0, v / lo_slope, 1.0 - (1.0 - v) / hi_slope)
        return _ret(v, out)

    def dh(u):
        u = np.asarray(u, dtype=float)
        out = np.where(u <= u0, lo_slope, hi_slope)
        return _ret(u, out)

    def co(u):
        u = np.asarray(u, dtype=float)
        out = np.where(u <= u0, 1.0 - lo_slope * u, hi_slope * (1.0 - u))
        return _ret(u, out)

    def gap_s(s):
        s = np.asarray(s, dtype=float)
        return _ret(s, np.where(s <= 1 - u0, s * (1.0 - hi_slope), s - h_inv(s)))

    def dh_s(s):
        # right-hand slope at the kink u = u0, where tables on [u0, 1) start
        s = np.asarray(s, dtype=float)
        return _ret(s, np.where(s <= 1 - u0, hi_slope, lo_slope))

    return SupportFunction(h, h_inv, dh, u0, "piecewise_linear", {"u0": u0}, co_eval_fn=co,
                           gap_s_fn=gap_s, dh_s_fn=dh_s)


def custom_h(eval: Callable, inverse: Callable, derivative: Callable,
             u0: float | None = None) -> SupportFunction:
    """Wrap user callables; u0 is located by root finding when omitted."""
    if u0 is None:
        try:
            u0 = find_root(lambda u: float(eval(u)) - (1.0 - u), EPS, 0.5)
        except NoBracket:
            u0 = float("nan")
    return SupportFunction(eval, inverse, derivative, float(u0), "custom")


def support_from_dict(d: dict) -> SupportFunction:
    family = d.get("family")
    if family == "gaussian_shift":
        return gaussian_shift_h(float(d["delta"]))
    if family == "piecewise_linear":
        return piecewise_linear_h(float(d["u0"]))
    raise DomainError(f"unknown support family {family!r}")


def gap_integral(h: SupportFunction, u: float, cfg: QuadratureConfig | None = None) -> float:
    """int_{u0}^{u} dz / (H(z) - z), integrated in the distance 1 - z."""
    cfg = cfg or QuadratureConfig(rel_tol=1e-10, abs_tol=1e-12, max_subdivisions=4000)
    return integrate(lambda y: 1.0 / h.gap_s(y), 1.0 - u, 1.0 - h.u0, cfg)


def validate_support(h: SupportFunction, n_probe: int = 1000) -> list[str]:
    """Check the hypotheses a support curve must satisfy; returns violations."""
    if n_probe < 100:
        raise DomainError("n_probe must be >= 100")
    out: list[str] = []
    u0 = h.u0
    if not (math.isfinite(u0) and 0 < u0 < 0.5):
        out.append(f"u0 undefined or outside (0, 1/2): {u0!r}")
    u = np.linspace(0.0, 1.0, n_probe + 2)[1:-1]
    hv = as_vectorized(h.eval)(u)
    if not np.all(np.isfinite(hv)):
        out.append("H is not finite on the probe grid")
        return out
    gap = hv - u
    if np.any(gap < -1e-12):
        i = int(np.argmin(gap))
        out.append(f"H(u) >= u fails at u={u[i]:.6g} (H-u={gap[i]:.3e})")
    elif np.max(gap) <= 1e-12:
        out.append("H coincides with the diagonal (degenerate support)")
    if np.any(np.diff(hv) <= 0):
        out.append("H is not strictly increasing on the probe grid")
    if any(v.startswith(("H(u) >= u", "H coincides", "u0")) for v in out):
        return out
    hinv = as_vectorized(h.inverse)
    sym = np.abs(hv + hinv(1.0 - u) - 1.0)
    if np.max(sym) > 1e-8:
        out.append(f"symmetry residual H(u)+H^-1(1-u)-1 reaches {np.max(sym):.3e}")
    roundtrip = np.abs(as_vectorized(h.eval)(hinv(u)) - u)
    if np.max(roundtrip) > 1e-9:
        out.append(f"inverse round trip error {np.max(roundtrip):.3e}")
    fix = abs(float(h.eval(u0)) - (1.0 - u0))
    if fix > 1e-12:
        out.append(f"H(u0) != 1 - u0 (residual {fix:.3e})")
    step = 1e-6
    ui = u[(u > 2e-3) & (u < 1 - 2e-3)]
    # skip probes straddling a kink of a piecewise H
    ui = ui[np.abs(ui - u0) > 10 * step]
    ui = ui[np.abs(ui - (1 - u0)) > 10 * step]
    fd = (as_vectorized(h.eval)(ui + step) - as_vectorized(h.eval)(ui - step)) / (2 * step)
    dh = as_vectorized(h.derivative)(ui)
    err = np.abs(fd - dh) / np.maximum(1.0, np.abs(dh))
    if np.max(err) > 1e-5:
        out.append(f"derivative disagrees with finite differences by {np.max(err):.3e}")
    try:
        near = gap_integral(h, 1 - 1e-6)
        far = near + integrate(lambda y: 1.0 / h.gap_s(y), 1e-9, 1e-6)
        if not math.isfinite(near):
            out.append("int dz/(H(z)-z) is infinite before u = 1")
        elif far - near < 1.0:
            out.append("int dz/(H(z)-z) does not appear to diverge as u -> 1")
    except (NonConvergence, NonFinite, IntegralDiverged, ZeroDivisionError, FloatingPointError) as exc:
        out.append(f"int dz/(H(z)-z) could not be evaluated: {exc}")
    return out
