"""Opposite-symmetric copulas whose density vanishes above a support curve
``v = H(u)``.

Below the anti-diagonal the unit square splits at ``u0`` (where
``H(u0) = 1 - u0``) into

    1: u <= u0, v <= H(u)       density G'(v) / G(H(u))
    2: u <= u0, H(u) < v        density 0, C = u
    4: u > u0                   density F'(u) G'(v)

and the regions above it are reflections through ``u + v = 1``:

    3: u <= u0, v > 1 - u       (image of 2)
    5: u > u0, 1 - u < v < 1 - u0   (image of 4)
    6: u > u0, 1 - u0 <= v <= H(u)  (image of 1)
    7: u > u0, v > H(u)         (image of 2)

F and K solve ``F' G(1-u) + G'(1-u) (F + K) = 1`` with
``K(u) = int_{u0}^u H'(z) / G(1-z) dz``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .base import Copula, unit_pair
from .construction import BuildOptions, Components, PositivityResult, build_components
from .errors import ConsistencyError, ModelFormatError, SupportInvalid
from .generators import (ClosedGProfile, GFunction, GProfile, LFunction, TabulatedGProfile,
                         gap_l, linear_l, power_g, profile_from_dict)
from .numerics import _ret
from .support import (SupportFunction, gaussian_shift_h, piecewise_linear_h, support_from_dict,
                      validate_support)

REGION_NAMES = {
    1: "u <= u0, v <= H(u)",
    2: "u <= u0, H(u) < v <= 1-u",
    3: "u <= u0, v > 1-u",
    4: "u > u0, v <= 1-u",
    5: "u > u0, 1-u < v < 1-u0",
    6: "u > u0, 1-u0 <= v <= H(u)",
    7: "u > u0, v > H(u)",
}


class MainComponents:
    """Closed forms of the construction with L = H - u:

    K(u) = (H(u) - u) / G(1-u) - (1 - 2 u0),   F(u) = (1 - 2 u0)(1 - G(1-u)).
    """

    def __init__(self, profile: TabulatedGProfile, h: SupportFunction):
        self.profile = profile
        self.h = h
        self.c1 = 1.0 - 2.0 * h.u0

    def K(self, s):
        s = np.asarray(s, dtype=float)
        # (H - u)/G(1 - u) in log form
        with np.errstate(all="ignore"):
            out = np.exp(np.log(np.asarray(self.h.gap_s(s))) + np.asarray(self.profile.lam(s))) - self.c1
        return _ret(s, out)

    def F(self, s):
        s = np.asarray(s, dtype=float)
        return _ret(s, self.c1 * (1.0 - np.asarray(self.profile.G(s))))

    def fp(self, s):
        return _ret(s, self.c1 * np.asarray(self.profile.dG(s)))

    def dF_interp(self, s):
        s = np.asarray(s, dtype=float)
        p = self.profile
        return _ret(s, -self.c1 * np.asarray(p.G(s)) * np.asarray(p.lam_slope(s)))

    def kg(self, v):
        v = np.asarray(v, dtype=float)
        return _ret(v, np.asarray(self.h.gap_s(v)) - self.c1 * np.asarray(self.profile.G(v)))

    def to_dict(self) -> dict:
        return {"kind": "closed_main"}


@dataclass(frozen=True, eq=False)
class PrescribedCopula(Copula):
    """Absolutely continuous copula supported on ``v <= H(u)``.

    ``construction_tag`` is one of ``main_theorem``, ``from_L``, ``from_G``,
    ``example_5_3`` or ``example_5_4``.
    """

    h: SupportFunction
    profile: GProfile
    comps: object
    construction_tag: str
    spec: dict = field(default_factory=dict)
    positivity: PositivityResult | None = None

    kind = "prescribed"

    @property
    def u0(self) -> float:
        return self.h.u0

    # natural-variable views
    def G(self, v):
        return self.profile.G(v)

    def dG(self, v):
        return self.profile.dG(v)

    def F(self, u):
        return self.comps.F(1.0 - np.asarray(u, dtype=float))

    def dF(self, u):
        return self.comps.fp(1.0 - np.asarray(u, dtype=float))

    def K(self, u):
        return self.comps.K(1.0 - np.asarray(u, dtype=float))

    def ode_residual(self, u):
        """|F'(u) G(1-u) + G'(1-u)(F(u) + K(u)) - 1| with F' from the stored F."""
        s = 1.0 - np.asarray(u, dtype=float)
        p, c = self.profile, self.comps
        r = (np.asarray(c.dF_interp(s)) * np.asarray(p.G(s))
             + np.asarray(p.dG(s)) * (np.asarray(c.F(s)) + np.asarray(c.K(s))) - 1.0)
        return _ret(s, np.abs(r))

    def k_form_gap(self, u):
        """Relative gap between K(1 - H(u)) and K(H^-1(1 - u)), equal by symmetry of H."""
        u = np.asarray(u, dtype=float)
        a = np.asarray(self.comps.K(self.h.eval(u)), dtype=float)
        b = np.asarray(self.comps.K(1.0 - np.asarray(self.h.inverse(1.0 - u))), dtype=float)
        return _ret(u, np.abs(a - b) / np.maximum(1.0, np.abs(a)))

    # ------------------------------------------------------------------
    def classify(self, u, v):
        u, v = unit_pair(u, v)
        hu = np.asarray(self.h.eval(u), dtype=float)
        u0 = self.u0
        left = np.where(v <= hu, 1, np.where(v <= 1.0 - u, 2, 3))
        right = np.where(v <= 1.0 - u, 4, np.where(v < 1.0 - u0, 5, np.where(v <= hu, 6, 7)))
        out = np.where(u <= u0, left, right)
        return int(out) if out.ndim == 0 else out

    def _lower(self, u, v):
        """C on u + v <= 1."""
        p, c, h = self.profile, self.comps, self.h
        with np.errstate(all="ignore"):
            hu = np.asarray(h.eval(u), dtype=float)
            hinv = np.asarray(h.inverse(v), dtype=float)
            gv = np.asarray(p.G(v), dtype=float)
            kg = np.asarray(c.kg(v), dtype=float)
            r1 = hinv + kg - gv * np.asarray(c.K(hu), dtype=float)
            r4 = hinv + kg + np.asarray(c.F(1.0 - u), dtype=float) * gv
        out = np.where(u <= self.u0, np.where(v <= hu, r1, u), r4)
        return np.where(v <= 0, 0.0, out)

    def cdf(self, u, v):
        u, v = unit_pair(u, v)
        out = np.where(u + v <= 1.0, self._lower(u, v), self._lower(1.0 - v, 1.0 - u) + u + v - 1.0)
        return _ret(u, np.clip(out, np.maximum(u + v - 1.0, 0.0), np.minimum(u, v)))

    def conditional_cdf(self, u, v):
        u, v = unit_pair(u, v)
        p, c, h = self.profile, self.comps, self.h
        s = 1.0 - u
        with np.errstate(all="ignore"):
            hu = np.asarray(h.eval(u), dtype=float)
            c1 = np.asarray(p.ratio(v, hu), dtype=float)
            dgs = np.asarray(p.dG(s), dtype=float)
            ks = np.asarray(c.K(s), dtype=float)
            c3 = np.asarray(c.fp(s), dtype=float) * np.asarray(p.G(v), dtype=float)
            c4 = 1.0 - dgs * (ks + np.asarray(c.F(v), dtype=float))
            w = np.asarray(h.eval(1.0 - v), dtype=float)
            c5 = 1.0 - dgs * (ks - np.asarray(c.K(w), dtype=float))
        left = np.where(v < hu, c1, 1.0)
        right = np.where(v <= s, c3, np.where(v <= 1.0 - self.u0, c4, np.where(v < hu, c5, 1.0)))
        out = np.where(u <= self.u0, left, right)
        out = np.where(v <= 0, 0.0, out)
        return _ret(u, np.clip(out, 0.0, 1.0))

    def _density_lower(self, u, v):
        p, c, h = self.profile, self.comps, self.h
        with np.errstate(all="ignore"):
            hu = np.asarray(h.eval(u), dtype=float)
            r1 = np.asarray(p.ratio(v, hu), dtype=float) / np.asarray(p.L_s(v), dtype=float)
            r4 = np.asarray(c.fp(1.0 - u), dtype=float) * np.asarray(p.dG(v), dtype=float)
        return np.where(u <= self.u0, np.where(v <= hu, r1, 0.0), r4)

    def density(self, u, v):
        u, v = unit_pair(u, v)
        out = np.where(u + v <= 1.0, self._density_lower(u, v), self._density_lower(1.0 - v, 1.0 - u))
        return _ret(u, np.where(np.isnan(out), np.inf, out))

    def v_breaks(self, u) -> np.ndarray:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        hu = np.asarray(self.h.eval(u), dtype=float)
        return np.stack([1.0 - u, hu, np.full(u.shape, 1.0 - self.u0)], axis=1)

    def u_edges(self) -> np.ndarray:
        return np.array([0.0, self.u0, 0.5, 1.0 - self.u0, 1.0])

    def to_dict(self) -> dict:
        return {"type": "prescribed", "construction_tag": self.construction_tag, "spec": self.spec,
                "H": self.h.to_dict(), "u0": self.u0, "profile": self.profile.to_dict(),
                "components": self.comps.to_dict()}


# ----------------------------------------------------------------------
# constructors
# ----------------------------------------------------------------------

def _checked_support(h: SupportFunction) -> None:
    problems = validate_support(h)
    if problems:
        raise SupportInvalid("; ".join(problems))


def _finish(c: PrescribedCopula, n_probe: int = 1000) -> PrescribedCopula:
    u = np.linspace(0.0, c.u0, n_probe + 2)[1:-1]
    gap = float(np.max(c.k_form_gap(u)))
    if gap > 1e-8:
        raise ConsistencyError(f"K(1-H(u)) and K(H^-1(1-u)) disagree by {gap:.3e}")
    return c


def build_main(h: SupportFunction, options: BuildOptions | None = None) -> PrescribedCopula:
    """The construction with L(u) = H(u) - u: G from int dz / (H(z) - z), K and F closed."""
    _checked_support(h)
    opts = options or BuildOptions()
    profile = TabulatedGProfile.build(gap_l(h), 1.0 - h.u0, knots=opts.knots,
                                      per_decade=opts.per_decade, eps=opts.epsilon,
                                      cfg=opts.quadrature())
    c1 = 1.0 - 2.0 * h.u0
    pos = PositivityResult(h.u0, c1, 0.0, True)
    return _finish(PrescribedCopula(h, profile, MainComponents(profile, h), "main_theorem",
                                    {"construction": "main", "H": h.to_dict()}, pos))


def build_with_L(h: SupportFunction, L: LFunction, u_star: float | None = None,
                 options: BuildOptions | None = None, tag: str = "from_L") -> PrescribedCopula:
    """G from L (normalized so G(1 - u0) = 1), K and F by quadrature."""
    _checked_support(h)
    opts = options or BuildOptions()
    profile = TabulatedGProfile.build(L, 1.0 - h.u0, knots=opts.knots, per_decade=opts.per_decade,
                                      eps=opts.epsilon, cfg=opts.quadrature())
    comps, pos = build_components(profile, h.u0, h.dh_s, opts, u_star)
    spec = {"construction": "from_L", "H": h.to_dict(), "L": L.to_dict()}
    return _finish(PrescribedCopula(h, profile, comps, tag, spec, pos))


def build_with_G(h: SupportFunction, G: GFunction, u_star: float | None = None,
                 options: BuildOptions | None = None, tag: str = "from_G") -> PrescribedCopula:
    """Closed-form G on [0, 1 - u0], K and F by quadrature."""
    _checked_support(h)
    opts = options or BuildOptions()
    profile = ClosedGProfile(G, 1.0 - h.u0)
    comps, pos = build_components(profile, h.u0, h.dh_s, opts, u_star)
    spec = {"construction": "from_G", "H": h.to_dict(), "G": G.to_dict()}
    return _finish(PrescribedCopula(h, profile, comps, tag, spec, pos))


def example_5_3(u0: float = 0.25, k: float = 2.0, options: BuildOptions | None = None) -> PrescribedCopula:
    """Piecewise-linear H with G(v) = v**k; valid iff k >= (1-u0)/(1-2u0)."""
    return build_with_G(piecewise_linear_h(u0), power_g(k), options=options, tag="example_5_3")


def example_5_3_K(u, u0: float, k: float):
    """Closed form K(u) = ((1-u)^(1-k) - (1-u0)^(1-k)) u0 / ((1-u0)(k-1))."""
    u = np.asarray(u, dtype=float)
    return _ret(u, ((1 - u) ** (1 - k) - (1 - u0) ** (1 - k)) * u0 / ((1 - u0) * (k - 1)))


def example_5_3_F(u, u0: float, k: float):
    u = np.asarray(u, dtype=float)
    a = ((1 - 2 * u0) * k - (1 - u0)) / ((2 * k - 1) * (k - 1) * (1 - u0))
    b = (1 - u0) ** (1 - 2 * k) / ((2 * k - 1) * (1 - u0))
    c = (1 - u0) ** (1 - k) * u0 / ((k - 1) * (1 - u0))
    return _ret(u, a * (1 - u) ** (1 - k) - b * (1 - u) ** k + c)


def example_5_4(delta: float = 1.0, k: float = 2.0, options: BuildOptions | None = None) -> PrescribedCopula:
    """Gaussian-shift H with L(u) = (1-u)/k, so G(v) = (v / (1-u0))**k."""
    return build_with_L(gaussian_shift_h(delta), linear_l(k), options=options, tag="example_5_4")


def example_5_4_u_star(delta: float, k: float) -> float:
    """Solution of H'(u*) = 1 - 1/k for the Gaussian shift, H' = exp(-delta(x + delta/2))."""
    from .numerics import normal_cdf
    return float(normal_cdf(np.log(k / (k - 1.0)) / delta - 0.5 * delta))


def prescribed_from_dict(d: dict) -> PrescribedCopula:
    """Reload a serialized model without re-running quadrature."""
    try:
        h = support_from_dict(d["H"])
        comps_d = d["components"]
        profile = profile_from_dict(d["profile"], gap_l(h) if comps_d["kind"] == "closed_main" else None)
        if comps_d["kind"] == "closed_main":
            comps = MainComponents(profile, h)
        else:
            comps = Components.from_dict(comps_d, profile)
        return PrescribedCopula(h, profile, comps, d["construction_tag"], d.get("spec", {}))
    except (KeyError, TypeError) as exc:
        raise ModelFormatError(f"malformed prescribed model: {exc}") from exc


def classify(c: PrescribedCopula, u, v):
    return c.classify(u, v)


def prescribed_cdf(c: PrescribedCopula, u, v):
    return c.cdf(u, v)


def prescribed_density(c: PrescribedCopula, u, v):
    return c.density(u, v)


def conditional_cdf(c: Copula, u, v):
    return c.conditional_cdf(u, v)
