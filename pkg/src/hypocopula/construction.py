"""Shared machinery for building F (and K) from a G profile.

With ``g(u) = G(1-u)``, both families solve

    g F' - g' (F + K) = 1,    F(lo) = 0,

where K = 0 for the separable family (lo = 0) and
``K(u) = int_lo^u H'/g`` for a prescribed support (lo = u0).  Writing
``L = g / (-g')`` the solution has ``F' = G'(1-u) B(u)`` with

    B(u) = L(lo)/g(lo)^2 + int_lo^u (1 + L' - H') / g^2,

which is the quantity the positivity condition bounds from below.  F' is
evaluated from B rather than from the ODE because the latter cancels
catastrophically when F' is small compared with 1/g.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import IntegralDiverged, NonFinite, NotMonotone, PositivityViolated
from .generators import GProfile
from .numerics import (EPS, LogTable, QuadratureConfig, TabulatedCurve, _ret, as_vectorized,
                       distance_grid, find_root, integrate, integrate_pieces)

PHI_ZERO = 1e-12


@dataclass(frozen=True)
class BuildOptions:
    knots: int = 400
    per_decade: int = 200
    epsilon: float = EPS
    rel_tol: float = 1e-10

    def quadrature(self) -> QuadratureConfig:
        return QuadratureConfig(rel_tol=self.rel_tol, abs_tol=1e-300, max_subdivisions=200)

    def grid(self, top: float) -> np.ndarray:
        return distance_grid(top, n_uniform=self.knots, per_decade=self.per_decade,
                             eps=self.epsilon)

    def to_dict(self) -> dict:
        return {"knots": self.knots, "per_decade": self.per_decade,
                "epsilon": self.epsilon, "rel_tol": self.rel_tol}


def phi_s(profile: GProfile, dh_s: Callable | None) -> Callable:
    """s -> 1 + L'(1-s) - H'(1-s), with values at roundoff level set to 0."""

    def phi(s):
        s = np.asarray(s, dtype=float)
        p0 = np.asarray(profile.phi0_s(s), dtype=float)
        dh = np.zeros_like(p0) if dh_s is None else np.asarray(dh_s(s), dtype=float)
        out = p0 - dh
        scale = 1.0 + np.abs(p0) + np.abs(dh)
        return _ret(s, np.where(np.abs(out) <= PHI_ZERO * scale, 0.0, out))

    return phi


def _from_top(f: Callable, s: np.ndarray, cfg: QuadratureConfig) -> np.ndarray:
    """int_{s_i}^{s[-1]} f at every knot of the ascending grid ``s``."""
    try:
        pieces = integrate_pieces(f, s, cfg)
    except NonFinite as exc:
        raise IntegralDiverged(f"integral is not finite on [1 - {s[-1]!r}, 1 - {s[0]!r}]: {exc}") from exc
    return np.concatenate([np.cumsum(pieces[::-1])[::-1], [0.0]])


def find_u_star(phi: Callable, lo: float, grid: np.ndarray) -> list[float]:
    """Candidate minimizers of B: points where 1 + L' - H' turns from - to +.

    Returns ``[lo]`` when phi is nonnegative near lo and never turns, and the
    right end ``1 - eps`` when phi stays negative.
    """
    s = grid[::-1]  # u ascending
    ph = np.asarray(phi(s), dtype=float)
    sign = np.sign(ph)
    out: list[float] = []
    if sign[0] >= 0:
        out.append(lo)
    neg = np.flatnonzero(sign < 0)
    for i in neg:
        if i + 1 < s.size and sign[i + 1] >= 0:
            if sign[i + 1] == 0:
                out.append(1.0 - s[i + 1])
            else:
                sr = find_root(lambda x: float(phi(np.array([x]))[0]), s[i + 1], s[i])
                out.append(1.0 - sr)
    if sign[-1] < 0:
        out.append(1.0 - s[-1])
    return out or [lo]


@dataclass(frozen=True, eq=False)
class Components:
    """F, K and F' of a construction, as functions of the distance ``s = 1 - u``."""

    profile: GProfile
    lo: float
    F_table: LogTable
    K_table: LogTable | None
    B_table: LogTable
    s_c: float

    def F(self, s):
        return self.F_table(s)

    def K(self, s):
        if self.K_table is None:
            return _ret(s, np.zeros(np.shape(s)))
        return self.K_table(s)

    def kg(self, v):
        """G(v) K(1 - v), the term K carries into the CDF."""
        v = np.asarray(v, dtype=float)
        return _ret(v, np.asarray(self.profile.G(v)) * np.asarray(self.K(v)))

    def fp(self, s):
        """F'(1 - s)."""
        s = np.asarray(s, dtype=float)
        p = self.profile
        low = np.asarray(p.dG(s), dtype=float) * np.asarray(self.B_table(s), dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            ode = (1.0 - np.asarray(p.dG(s)) * (np.asarray(self.F(s)) + np.asarray(self.K(s)))) \
                / np.asarray(p.G(s))
        return _ret(s, np.where(s <= self.s_c, low, ode))

    def dF_interp(self, s):
        """Derivative in u of the stored F interpolant."""
        s = np.asarray(s, dtype=float)
        return _ret(s, -np.asarray(self.F_table.derivative(s), dtype=float))

    def B(self, s):
        return self.B_table(s)

    def to_dict(self) -> dict:
        d = {"kind": "tabulated", "lo": self.lo, "s_c": self.s_c,
             "F": self.F_table.to_dict(), "B": self.B_table.to_dict()}
        if self.K_table is not None:
            d["K"] = self.K_table.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict, profile: GProfile) -> "Components":
        k = LogTable.from_dict(d["K"]) if "K" in d else None
        return cls(profile, float(d["lo"]), LogTable.from_dict(d["F"]), k,
                   LogTable.from_dict(d["B"], monotone=False), float(d["s_c"]))


@dataclass(frozen=True)
class PositivityResult:
    u_star: float
    b_at_u_star: float
    min_fp: float
    ok: bool


def build_components(profile: GProfile, lo: float, dh_s: Callable | None,
                     opts: BuildOptions, u_star: float | None = None) -> tuple[Components, PositivityResult]:
    """Tabulate K, B and F for a construction and check positivity of F'."""
    top = profile.v_max
    cfg = opts.quadrature()
    s = opts.grid(top)
    G = np.asarray(profile.G(s), dtype=float)
    dG = np.asarray(profile.dG(s), dtype=float)
    if not (np.all(np.isfinite(G)) and np.all(G > 0)):
        raise IntegralDiverged("G underflows on the tabulation grid; reduce epsilon")
    phi = phi_s(profile, dh_s)

    def inv_g2(y):
        return 1.0 / np.asarray(profile.G(y), dtype=float) ** 2

    if dh_s is None:
        m_int = as_vectorized(inv_g2)
    else:
        m_int = as_vectorized(lambda y: (1.0 + np.asarray(dh_s(y))) * inv_g2(y))
    M = _from_top(m_int, s, cfg)
    if dh_s is None:
        K = np.zeros_like(s)
    else:
        K = _from_top(as_vectorized(lambda y: np.asarray(dh_s(y)) / np.asarray(profile.G(y))), s, cfg)

    # B is anchored mid-range: L(lo) may be infinite, or finite but so large
    # that integrating down from lo would cancel
    ic = int(np.searchsorted(s, 0.5 * top))
    b_ref = float(np.asarray(profile.L_s(s[ic:ic + 1]))[0]) / G[ic] ** 2 - M[ic]
    sb = s[: ic + 1]
    b_int = as_vectorized(lambda y: np.asarray(phi(y)) * inv_g2(y))
    B = b_ref + _from_top(b_int, sb, cfg)
    dB = -np.asarray(phi(sb)) * inv_g2(sb)

    fp = np.empty_like(s)
    fp[: ic + 1] = dG[: ic + 1] * B
    fp[ic + 1:] = (1.0 - dG[ic + 1:] * G[ic + 1:] * M[ic + 1:]) / G[ic + 1:]

    # positivity: B at the candidate minimizers, then F' on the grid
    cands = find_u_star(phi, lo, s) if u_star is None else [float(u_star)]
    b_curve = TabulatedCurve(sb, B, dB)
    b_vals = []
    for uc in cands:
        sc = 1.0 - uc
        if sc <= sb[-1]:
            b_vals.append(float(b_curve(max(sc, sb[0]))))
        elif float(profile.dG(sc)) <= 0:
            b_vals.append(math.inf)
        else:
            b_vals.append(b_ref - integrate(b_int, sb[-1], min(sc, top), cfg))
    j = int(np.argmin(b_vals))
    probe = s >= 1e-6
    min_fp = float(np.min(fp[probe] / np.maximum(1.0, np.abs(fp[probe]))))
    ok = b_vals[j] >= -1e-12 * max(1.0, abs(b_ref)) and min_fp >= -1e-8
    res = PositivityResult(cands[j], b_vals[j], min_fp, ok)
    if not ok:
        raise PositivityViolated(
            f"positivity condition fails: B(u*={cands[j]:.6g}) = {b_vals[j]:.6g}, "
            f"min F' = {min_fp:.3e}")

    # F = G M - K cancels where F' is small next to 1/G; below the anchor
    # integrate F' = G' B instead (positive integrand, monotone result)
    F = G * M - K
    F[-1] = 0.0
    B_table = LogTable.from_knots(sb, np.maximum(B, 0.0), dB, monotone=False)
    fp_int = as_vectorized(lambda y: np.asarray(profile.dG(y)) * np.asarray(B_table(y)))
    F[: ic + 1] = F[ic] + _from_top(fp_int, sb, cfg)
    # the top knot of F is 0 by construction; LogTable needs s > 0 only
    try:
        F_table = LogTable.from_knots(s, F, -fp)
        K_table = None if dh_s is None else LogTable.from_knots(s, K, -np.asarray(dh_s(s)) / G)
    except NotMonotone as exc:
        raise PositivityViolated(f"F is not monotone on the grid: {exc}") from exc
    return Components(profile, float(lo), F_table, K_table, B_table, float(s[ic])), res
