"""Generator functions G and L, and the tabulated profile of G shared by
both copula families.

Everything singular lives at v -> 0 (equivalently u -> 1), so functions of
``u`` near 1 are expressed through the distance ``s = 1 - u``; small floats
are exact while ``1 - s`` is not.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, IntegralDiverged, LNotPositive, ModelFormatError, NonFinite
from .numerics import (EPS, QuadratureConfig, TabulatedMonotone, _ret, as_vectorized,
                       bisect_increasing, distance_grid, integrate_pieces)
from .support import SupportFunction


@dataclass(frozen=True, eq=False)
class GFunction:
    """Increasing G on [0, 1] with G(0) = 0, together with G' and G''."""

    eval: Callable
    derivative: Callable
    second: Callable
    inverse: Callable | None = None
    family: str = "custom"
    params: dict = field(default_factory=dict)

    def __call__(self, v):
        return self.eval(v)

    def to_dict(self) -> dict:
        if self.family == "custom":
            raise DomainError("custom G functions cannot be serialized")
        return {"family": self.family, **self.params}


def power_g(k: float) -> GFunction:
    """G(v) = v**k."""
    k = float(k)
    if not (k > 0 and math.isfinite(k)):
        raise DomainError(f"power exponent must be positive, got {k!r}")

    def g(v):
        v = np.asarray(v, dtype=float)
        return _ret(v, np.power(np.maximum(v, 0.0), k))

    def dg(v):
        v = np.asarray(v, dtype=float)
        return _ret(v, k * np.power(np.maximum(v, 0.0), k - 1))

    def d2g(v):
        v = np.asarray(v, dtype=float)
        return _ret(v, k * (k - 1) * np.power(np.maximum(v, 0.0), k - 2))

    def ginv(y):
        y = np.asarray(y, dtype=float)
        return _ret(y, np.power(np.maximum(y, 0.0), 1.0 / k))

    return GFunction(g, dg, d2g, ginv, "power", {"k": k})


def sine_g() -> GFunction:
    """G(v) = sin(pi v / 2)."""
    c = 0.5 * math.pi

    def g(v):
        v = np.asarray(v, dtype=float)
        return _ret(v, np.sin(c * v))

    def dg(v):
        v = np.asarray(v, dtype=float)
        return _ret(v, c * np.cos(c * v))

    def d2g(v):
        v = np.asarray(v, dtype=float)
        return _ret(v, -c * c * np.sin(c * v))

    def ginv(y):
        y = np.asarray(y, dtype=float)
        return _ret(y, np.arcsin(np.clip(y, 0.0, 1.0)) / c)

    return GFunction(g, dg, d2g, ginv, "sine", {})


def g_from_dict(d: dict) -> GFunction:
    family = d.get("family")
    if family == "power":
        return power_g(float(d["k"]))
    if family == "sine":
        return sine_g()
    raise ModelFormatError(f"unknown G family {family!r}")


@dataclass(frozen=True, eq=False)
class LFunction:
    """L(u) = G(1-u)/G'(1-u), stored through the distance ``s = 1 - u``.

    ``of_s(s)`` returns L(1 - s) and ``deriv_s(s)`` returns L'(1 - s), the
    derivative with respect to u.
    """

    of_s: Callable
    deriv_s: Callable
    family: str = "custom"
    params: dict = field(default_factory=dict)
    one_plus_deriv_s: Callable | None = None

    def phi0_s(self, s):
        """1 + L'(1 - s), formed without cancellation when a family knows how."""
        if self.one_plus_deriv_s is not None:
            return self.one_plus_deriv_s(s)
        return 1.0 + np.asarray(self.deriv_s(s), dtype=float)

    def eval(self, u):
        u = np.asarray(u, dtype=float)
        return _ret(u, np.asarray(self.of_s(1.0 - u), dtype=float))

    __call__ = eval

    def derivative(self, u):
        u = np.asarray(u, dtype=float)
        return _ret(u, np.asarray(self.deriv_s(1.0 - u), dtype=float))

    def to_dict(self) -> dict:
        if self.family == "custom":
            raise DomainError("custom L functions cannot be serialized")
        return {"family": self.family, **self.params}


def linear_l(k: float) -> LFunction:
    """L(u) = (1 - u)/k, which generates G(v) proportional to v**k."""
    k = float(k)
    if not (k > 0 and math.isfinite(k)):
        raise DomainError(f"k must be positive, got {k!r}")

    def of_s(s):
        s = np.asarray(s, dtype=float)
        return _ret(s, s / k)

    def deriv_s(s):
        s = np.asarray(s, dtype=float)
        return _ret(s, np.full(s.shape, -1.0 / k))

    def phi0(s):
        s = np.asarray(s, dtype=float)
        return _ret(s, np.full(s.shape, (k - 1.0) / k))

    return LFunction(of_s, deriv_s, "linear", {"k": k}, phi0)


def quadratic_l(a: float) -> LFunction:
    """L(u) = (1 - u)(1 - a u)."""
    a = float(a)
    if not (0 <= a < 1):
        raise DomainError(f"a must lie in [0, 1), got {a!r}")

    def of_s(s):
        s = np.asarray(s, dtype=float)
        return _ret(s, s * (1.0 - a + a * s))

    def deriv_s(s):
        s = np.asarray(s, dtype=float)
        return _ret(s, -1.0 + a - 2.0 * a * s)

    def phi0(s):
        s = np.asarray(s, dtype=float)
        return _ret(s, a - 2.0 * a * s)

    return LFunction(of_s, deriv_s, "quadratic", {"a": a}, phi0)


def gap_l(h: SupportFunction) -> LFunction:
    """L(u) = H(u) - u, the choice that makes 1 + L' - H' vanish."""

    def deriv_s(s):
        return np.asarray(h.dh_s(s), dtype=float) - 1.0

    return LFunction(h.gap_s, deriv_s, "gap", {"H": h.to_dict()} if h.family_tag != "custom" else {},
                     h.dh_s)


def l_from_dict(d: dict) -> LFunction:
    family = d.get("family")
    if family == "linear":
        return linear_l(float(d["k"]))
    if family == "quadratic":
        return quadratic_l(float(d["a"]))
    raise ModelFormatError(f"unknown L family {family!r}")


# --------------------------------------------------------------------------
# profiles: G on (0, v_max] with log form lam = -log G
# --------------------------------------------------------------------------

class GProfile:
    """Common interface of closed-form and tabulated G.

    ``lam(v) = -log G(v)`` is the primary quantity; ratios ``G(a)/G(b)`` are
    formed as ``exp(lam(b) - lam(a))`` so they never overflow.
    """

    v_max: float

    def lam(self, v):
        raise NotImplementedError

    def lam_inv(self, y):
        raise NotImplementedError

    def L_s(self, s):
        """L(1 - s) = G(s)/G'(s)."""
        raise NotImplementedError

    def dL_s(self, s):
        """L'(1 - s)."""
        raise NotImplementedError

    def phi0_s(self, s):
        """1 + L'(1 - s)."""
        return 1.0 + np.asarray(self.dL_s(s), dtype=float)

    def G(self, v):
        v = np.asarray(v, dtype=float)
        with np.errstate(over="ignore"):
            return _ret(v, np.exp(-np.asarray(self.lam(v), dtype=float)))

    def dG(self, v):
        v = np.asarray(v, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.asarray(self.G(v), dtype=float) / np.asarray(self.L_s(v), dtype=float)
        return _ret(v, np.where(np.isfinite(out), out, 0.0))

    def ratio(self, a, b):
        """G(a)/G(b)."""
        la = np.asarray(self.lam(a), dtype=float)
        lb = np.asarray(self.lam(b), dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            return np.exp(lb - la)


class ClosedGProfile(GProfile):
    def __init__(self, g: GFunction, v_max: float = 1.0):
        self.g = g
        self.v_max = float(v_max)

    def _clip(self, v):
        return np.clip(np.asarray(v, dtype=float), 0.0, self.v_max)

    def G(self, v):
        return self.g.eval(self._clip(v))

    def dG(self, v):
        return self.g.derivative(self._clip(v))

    def lam(self, v):
        with np.errstate(divide="ignore"):
            return -np.log(np.asarray(self.G(v), dtype=float))

    def lam_inv(self, y):
        y = np.asarray(y, dtype=float)
        if self.g.inverse is not None:
            return _ret(y, np.minimum(self.g.inverse(np.exp(-y)), self.v_max))
        target = np.atleast_1d(y).ravel()
        out = bisect_increasing(lambda v: -np.asarray(self.lam(v)) + target, 0.0, self.v_max)
        return _ret(y, out.reshape(np.shape(y)))

    def L_s(self, s):
        s = self._clip(s)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.asarray(self.g.eval(s), dtype=float) / np.asarray(self.g.derivative(s), dtype=float)

    def dL_s(self, s):
        return -1.0 + self.phi0_s(s)

    def phi0_s(self, s):
        # 1 + L' = G G'' / G'^2 at v = s
        s = self._clip(s)
        g, dg, d2g = (np.asarray(f(s), dtype=float) for f in (self.g.eval, self.g.derivative, self.g.second))
        with np.errstate(divide="ignore", invalid="ignore"):
            return g * d2g / (dg * dg)

    def to_dict(self) -> dict:
        return {"kind": "closed", "G": self.g.to_dict(), "v_max": self.v_max}


class TabulatedGProfile(GProfile):
    """G(v) = exp(-int_v^{v_max} dy / L(1 - y)), tabulated in v.

    Below the first knot the profile continues as a power law with the
    local exponent ``v_eps / L(1 - v_eps)``, matching value and slope.
    """

    def __init__(self, table: TabulatedMonotone, l_fn: LFunction | None = None):
        self.table = table
        self.l_fn = l_fn
        self.v_max = table.x_hi
        v0 = table.x_lo
        self._v0 = v0
        self._lam0 = float(table.knots_y[0])
        self._kappa = float(-table.slopes[0] * v0)

    @classmethod
    def build(cls, l_fn: LFunction, v_max: float, knots: int = 400, per_decade: int = 200,
              eps: float = EPS, cfg: QuadratureConfig | None = None) -> "TabulatedGProfile":
        cfg = cfg or QuadratureConfig()
        v = distance_grid(v_max, n_uniform=knots, per_decade=per_decade, eps=eps)
        lv = np.asarray(l_fn.of_s(v), dtype=float)
        if not np.all(np.isfinite(lv)) or np.any(lv <= 0):
            i = int(np.argmax(~(np.isfinite(lv) & (lv > 0))))
            raise LNotPositive(f"L must be positive on [lo, 1); fails at u={1 - v[i]!r}")
        inv_l = as_vectorized(lambda y: 1.0 / np.asarray(l_fn.of_s(y), dtype=float))
        try:
            pieces = integrate_pieces(inv_l, v, cfg)
        except NonFinite as exc:
            raise IntegralDiverged(f"int dz/L(z) is not finite before u = 1: {exc}") from exc
        lam = np.concatenate([np.cumsum(pieces[::-1])[::-1], [0.0]])
        table = TabulatedMonotone.from_knots(v, lam, -1.0 / lv)
        return cls(table, l_fn)

    def lam(self, v):
        v = np.asarray(v, dtype=float)
        inside = np.asarray(self.table(v), dtype=float)
        with np.errstate(divide="ignore"):
            tail = self._lam0 + self._kappa * np.log(self._v0 / np.maximum(v, 0.0))
        return _ret(v, np.where(v < self._v0, tail, inside))

    def lam_slope(self, v):
        """d lam / dv of the interpolant (for consistency checks)."""
        v = np.asarray(v, dtype=float)
        inside = np.asarray(self.table.derivative(v), dtype=float)
        with np.errstate(divide="ignore"):
            tail = -self._kappa / v
        return _ret(v, np.where(v < self._v0, tail, inside))

    def lam_inv(self, y):
        y = np.asarray(y, dtype=float)
        inside = np.asarray(self.table.inverse(y), dtype=float)
        with np.errstate(over="ignore"):
            tail = self._v0 * np.exp(-(y - self._lam0) / self._kappa)
        return _ret(y, np.where(y > self._lam0, tail, inside))

    def L_s(self, s):
        s = np.asarray(s, dtype=float)
        if self.l_fn is not None:
            return _ret(s, np.asarray(self.l_fn.of_s(np.clip(s, 0.0, self.v_max)), dtype=float))
        return _ret(s, -1.0 / np.asarray(self.lam_slope(s), dtype=float))

    def dL_s(self, s):
        if self.l_fn is None:
            raise DomainError("L' is unavailable for a profile without an L function")
        return self.l_fn.deriv_s(np.clip(np.asarray(s, dtype=float), 0.0, self.v_max))

    def phi0_s(self, s):
        if self.l_fn is None:
            raise DomainError("L' is unavailable for a profile without an L function")
        return self.l_fn.phi0_s(np.clip(np.asarray(s, dtype=float), 0.0, self.v_max))

    def to_dict(self) -> dict:
        d = {"kind": "tabulated", "table": self.table.to_dict()}
        if self.l_fn is not None and self.l_fn.family != "custom":
            d["L"] = self.l_fn.to_dict()
        return d


def profile_from_dict(d: dict, l_fn: LFunction | None = None) -> GProfile:
    kind = d.get("kind")
    if kind == "closed":
        return ClosedGProfile(g_from_dict(d["G"]), float(d["v_max"]))
    if kind == "tabulated":
        if l_fn is None and "L" in d:
            l_fn = l_from_dict(d["L"])
        return TabulatedGProfile(TabulatedMonotone.from_dict(d["table"]), l_fn)
    raise ModelFormatError(f"unknown profile kind {kind!r}")
