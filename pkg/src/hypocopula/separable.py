"""Opposite-symmetric copulas whose density is F'(u) G'(v) below the
anti-diagonal u + v = 1.

``F`` solves ``G(1-u) F'(u) + G'(1-u) F(u) = 1`` with F(0) = 0, i.e.

    F(u) = G(1-u) * int_0^u dz / G(1-z)^2,

and the upper triangle follows from ``C(u, v) = C(1-v, 1-u) + u + v - 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .base import Copula, unit_pair
from .construction import BuildOptions, Components, PositivityResult, build_components
from .errors import ModelFormatError
from .generators import (ClosedGProfile, GFunction, GProfile, LFunction, TabulatedGProfile,
                         g_from_dict, l_from_dict, power_g, profile_from_dict, sine_g)
from .numerics import _ret


class PowerComponents:
    """Closed forms for G(v) = v**k."""

    def __init__(self, k: float):
        self.k = float(k)

    def F(self, s):
        s = np.asarray(s, dtype=float)
        k = self.k
        with np.errstate(divide="ignore", over="ignore"):
            return _ret(s, (np.power(s, 1.0 - k) - np.power(s, k)) / (2.0 * k - 1.0))

    def fp(self, s):
        s = np.asarray(s, dtype=float)
        k = self.k
        with np.errstate(divide="ignore", over="ignore"):
            return _ret(s, ((k - 1.0) * np.power(s, -k) + k * np.power(s, k - 1.0)) / (2.0 * k - 1.0))

    dF_interp = fp

    def K(self, s):
        return _ret(s, np.zeros(np.shape(s)))

    def to_dict(self) -> dict:
        return {"kind": "closed_power", "k": self.k}


class SineComponents:
    """Closed forms for G(v) = sin(pi v / 2): F(u) = 2 sin(pi u / 2) / pi."""

    def F(self, s):
        s = np.asarray(s, dtype=float)
        return _ret(s, 2.0 * np.cos(0.5 * math.pi * s) / math.pi)

    def fp(self, s):
        s = np.asarray(s, dtype=float)
        return _ret(s, np.sin(0.5 * math.pi * s))

    dF_interp = fp

    def K(self, s):
        return _ret(s, np.zeros(np.shape(s)))

    def to_dict(self) -> dict:
        return {"kind": "closed_sine"}


@dataclass(frozen=True, eq=False)
class SeparableCopula(Copula):
    """Copula with density F'(u) G'(v) on u + v <= 1 and its reflection above.

    ``provenance`` is one of ``from_G``, ``from_L`` or ``closed_form``.
    """

    profile: GProfile
    comps: object
    provenance: str
    spec: dict = field(default_factory=dict)
    positivity: PositivityResult | None = None

    kind = "separable"

    # generator views in the natural variables
    def F(self, u):
        u = np.asarray(u, dtype=float)
        return self.comps.F(1.0 - u)

    def dF(self, u):
        u = np.asarray(u, dtype=float)
        return self.comps.fp(1.0 - u)

    def G(self, v):
        return self.profile.G(v)

    def dG(self, v):
        return self.profile.dG(v)

    def ode_residual(self, u):
        """|G(1-u) F'(u) + G'(1-u) F(u) - 1| using the derivative of the stored F."""
        s = 1.0 - np.asarray(u, dtype=float)
        p = self.profile
        r = (np.asarray(p.G(s)) * np.asarray(self.comps.dF_interp(s))
             + np.asarray(p.dG(s)) * np.asarray(self.comps.F(s)) - 1.0)
        return _ret(s, np.abs(r))

    def _lower(self, u, v):
        # F(u) G(v) on u + v <= 1; zero when v = 0 (F may be infinite at u = 1)
        with np.errstate(all="ignore"):
            out = np.asarray(self.comps.F(1.0 - u)) * np.asarray(self.profile.G(v))
        return np.where(v <= 0, 0.0, out)

    def cdf(self, u, v):
        u, v = unit_pair(u, v)
        low = u + v <= 1.0
        out = np.where(low, self._lower(u, v), self._lower(1.0 - v, 1.0 - u) + u + v - 1.0)
        return _ret(u, np.clip(out, np.maximum(u + v - 1.0, 0.0), np.minimum(u, v)))

    def density(self, u, v):
        u, v = unit_pair(u, v)
        p, c = self.profile, self.comps
        with np.errstate(all="ignore"):
            lo = np.asarray(c.fp(1.0 - u)) * np.asarray(p.dG(v))
            hi = np.asarray(c.fp(v)) * np.asarray(p.dG(1.0 - u))
        out = np.where(u + v <= 1.0, lo, hi)
        return _ret(u, np.where(np.isfinite(out), out, np.inf))

    def conditional_cdf(self, u, v):
        u, v = unit_pair(u, v)
        p, c = self.profile, self.comps
        with np.errstate(all="ignore"):
            lo = np.asarray(c.fp(1.0 - u)) * np.asarray(p.G(v))
            lo = np.where(v <= 0, 0.0, lo)
            hi = 1.0 - np.asarray(p.dG(1.0 - u)) * np.asarray(c.F(v))
            hi = np.where(u >= 1, 1.0, hi)
        out = np.where(u + v <= 1.0, lo, hi)
        return _ret(u, np.clip(out, 0.0, 1.0))

    def to_dict(self) -> dict:
        return {"type": "separable", "provenance": self.provenance, "spec": self.spec,
                "profile": self.profile.to_dict(), "components": self.comps.to_dict()}


def _closed(g: GFunction, comps, spec: dict) -> SeparableCopula:
    return SeparableCopula(ClosedGProfile(g), comps, "closed_form", spec)


def independence() -> SeparableCopula:
    """C(u, v) = u v (G(v) = v)."""
    return _closed(power_g(1.0), PowerComponents(1.0), {"G": {"family": "power", "k": 1.0}})


def power_copula(k: float) -> SeparableCopula:
    """Closed form for G(v) = v**k: F(u) = ((1-u)**(1-k) - (1-u)**k) / (2k - 1)."""
    return _closed(power_g(k), PowerComponents(k), {"G": {"family": "power", "k": float(k)}})


def sine_copula() -> SeparableCopula:
    """Closed form for G(v) = sin(pi v / 2)."""
    return _closed(sine_g(), SineComponents(), {"G": {"family": "sine"}})


def separable_from_G(G: GFunction, u_star: float | None = None,
                     options: BuildOptions | None = None) -> SeparableCopula:
    """Build F by quadrature from G and check the positivity condition.

    ``u_star`` is where 1 + L' changes sign from - to +; when omitted it is
    located numerically.  Raises PositivityViolated or IntegralDiverged.
    """
    opts = options or BuildOptions()
    profile = ClosedGProfile(G, 1.0)
    comps, pos = build_components(profile, 0.0, None, opts, u_star)
    spec = {"G": G.to_dict()} if G.family != "custom" else {}
    return SeparableCopula(profile, comps, "from_G", spec, pos)


def separable_from_L(L: LFunction, u_star: float | None = None,
                     options: BuildOptions | None = None) -> SeparableCopula:
    """Tabulate G(v) = exp(-int_0^{1-v} dz / L(z)), then build F as above."""
    opts = options or BuildOptions()
    profile = TabulatedGProfile.build(L, 1.0, knots=opts.knots, per_decade=opts.per_decade,
                                      eps=opts.epsilon, cfg=opts.quadrature())
    comps, pos = build_components(profile, 0.0, None, opts, u_star)
    spec = {"L": L.to_dict()} if L.family != "custom" else {}
    return SeparableCopula(profile, comps, "from_L", spec, pos)


def separable_from_dict(d: dict) -> SeparableCopula:
    """Reload a serialized separable copula without re-running quadrature."""
    try:
        comps_d = d["components"]
        kind = comps_d["kind"]
        if kind == "closed_power":
            return power_copula(float(comps_d["k"]))
        if kind == "closed_sine":
            return sine_copula()
        profile = profile_from_dict(d["profile"])
        comps = Components.from_dict(comps_d, profile)
        return SeparableCopula(profile, comps, d["provenance"], d.get("spec", {}))
    except (KeyError, TypeError) as exc:
        raise ModelFormatError(f"malformed separable model: {exc}") from exc


def separable_cdf(c: SeparableCopula, u, v):
    return c.cdf(u, v)


def separable_density(c: SeparableCopula, u, v):
    return c.density(u, v)
