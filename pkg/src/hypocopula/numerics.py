"""Numerical kernel: adaptive quadrature, monotone interpolation, root finding
and the standard normal distribution.

Every routine accepts numpy arrays where that makes sense; integrands handed to
the quadrature routines are called with 1-D arrays of abscissae.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq
from scipy.special import erfc, ndtri

from .errors import DomainError, NoBracket, NonConvergence, NonFinite, NotMonotone

EPS = 1e-11
"""Endpoint clamp used for every evaluation on the unit square."""

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


# --------------------------------------------------------------------------
# quadrature
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise DomainError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be >= 1")


DEFAULT_QUADRATURE = QuadratureConfig()

# 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

GK_NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
GK_KRONROD_WEIGHTS = np.concatenate([_WK[:-1], _WK[::-1]])
GK_GAUSS_WEIGHTS = np.zeros(15)
# Gauss nodes are the odd-indexed Kronrod nodes (+-0.949, +-0.742, +-0.406, 0)
GK_GAUSS_WEIGHTS[[1, 3, 5]] = _WG[:3]
GK_GAUSS_WEIGHTS[[13, 11, 9]] = _WG[:3]
GK_GAUSS_WEIGHTS[7] = _WG[3]


def as_vectorized(f: Callable) -> Callable[[np.ndarray], np.ndarray]:
    """Wrap a callable so it maps 1-D arrays to 1-D arrays of the same shape.

    Functions written for scalars only are detected on first use and evaluated
    element by element.
    """
    state = {"vector": None}

    def g(x: np.ndarray) -> np.ndarray:
        if state["vector"] is not False:
            try:
                y = np.asarray(f(x), dtype=float)
                if y.shape == x.shape:
                    state["vector"] = True
                    return y
                if y.ndim == 0:
                    return np.full(x.shape, float(y))
            except (TypeError, ValueError):
                if state["vector"]:
                    raise
            state["vector"] = False
        return np.array([float(f(float(xi))) for xi in x], dtype=float)

    return g


def _gk15(f, a: np.ndarray, b: np.ndarray, owner: np.ndarray):
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    x = c[:, None] + h[:, None] * GK_NODES[None, :]
    o = np.repeat(owner, GK_NODES.size)
    y = np.asarray(f(x.ravel(), o), dtype=float).reshape(x.shape)
    if not np.all(np.isfinite(y)):
        bad = x[~np.isfinite(y)][0]
        raise NonFinite(f"integrand is not finite at x={bad!r}")
    kron = h * (y @ GK_KRONROD_WEIGHTS)
    gauss = h * (y @ GK_GAUSS_WEIGHTS)
    return kron, np.abs(kron - gauss)


def integrate_batch(f: Callable, a, b, owner=None, n_owners: int | None = None,
                    cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> np.ndarray:
    """Integrals of ``f(x, owner)`` over ``[a[j], b[j]]``, summed per owner.

    ``f`` receives flat arrays of abscissae and the owner index of each
    abscissa, so one call can serve many parametrized integrands. An owner
    is converged when its summed Gauss/Kronrod error estimate is below
    ``max(abs_tol, rel_tol * |I_owner|)``. Sub-intervals carrying more than
    their share of a failing owner's error are bisected, all owners in one
    vectorized pass. The integrand is never evaluated at an end point.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float)).copy()
    b = np.atleast_1d(np.asarray(b, dtype=float)).copy()
    if a.shape != b.shape or a.ndim != 1:
        raise DomainError("a and b must be 1-D arrays of equal length")
    if np.any(b < a) or not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise DomainError("need finite limits with a <= b")
    owner = np.arange(a.size) if owner is None else np.asarray(owner, dtype=np.intp)
    n = int(owner.max()) + 1 if n_owners is None else int(n_owners)
    keep = b > a
    a, b, owner = a[keep], b[keep], owner[keep]
    if a.size == 0:
        return np.zeros(n)
    val, err = _gk15(f, a, b, owner)
    budget = cfg.max_subdivisions * max(1, n) + a.size
    splits = 0
    while True:
        tot_val = np.bincount(owner, val, minlength=n)
        tot_err = np.bincount(owner, err, minlength=n)
        count = np.bincount(owner, minlength=n)
        tol = np.maximum(cfg.abs_tol, cfg.rel_tol * np.abs(tot_val))
        failing = tot_err > tol
        if not np.any(failing):
            return tot_val
        mid = 0.5 * (a + b)
        splittable = (mid > a) & (mid < b)
        share = tol[owner] / np.maximum(count[owner], 1)
        worst = np.zeros(n)
        np.maximum.at(worst, owner, err)
        pick = failing[owner] & (err > share) & (err >= 0.25 * worst[owner]) & splittable
        if not np.any(pick):
            # only unsplittable or within-share pieces remain: roundoff floor
            return tot_val
        splits += int(pick.sum())
        if splits > budget:
            raise NonConvergence(
                f"subdivision budget exhausted ({budget}); "
                f"worst owner error {np.max(tot_err[failing]):.3e}")
        pa, pb, pm, po = a[pick], b[pick], mid[pick], owner[pick]
        na = np.concatenate([pa, pm])
        nb = np.concatenate([pm, pb])
        no = np.concatenate([po, po])
        nv, ne = _gk15(f, na, nb, no)
        rest = ~pick
        a = np.concatenate([a[rest], na])
        b = np.concatenate([b[rest], nb])
        owner = np.concatenate([owner[rest], no])
        val = np.concatenate([val[rest], nv])
        err = np.concatenate([err[rest], ne])


def integrate_pieces(f: Callable, edges, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> np.ndarray:
    """Integrals of ``f`` over every interval ``[edges[i], edges[i+1]]``."""
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2:
        raise DomainError("need at least two edges")
    if np.any(np.diff(edges) < 0):
        raise DomainError("edges must be nondecreasing")
    fv = as_vectorized(f)
    return integrate_batch(lambda x, o: fv(x), edges[:-1], edges[1:], cfg=cfg)



def integrate_2d(f: Callable, u_edges, v_breaks: Callable, cfg_outer: QuadratureConfig,
                 cfg_inner: QuadratureConfig) -> float:
    """Iterated integral of ``f(u, v)`` over the unit square.

    The outer variable is split at ``u_edges``; for each outer abscissa the
    inner integral over ``v`` is split at ``v_breaks(u)`` (an ``(n, m)``
    array, entries outside (0, 1) ignored).  Inner integrals for all outer
    abscissae are computed in one batched call.
    """

    def inner(u):
        u = np.asarray(u, dtype=float)
        br = np.clip(np.asarray(v_breaks(u), dtype=float).reshape(u.size, -1), 0.0, 1.0)
        edges = np.sort(np.concatenate([np.zeros((u.size, 1)), br, np.ones((u.size, 1))], axis=1), axis=1)
        a = edges[:, :-1].ravel()
        b = edges[:, 1:].ravel()
        owner = np.repeat(np.arange(u.size), edges.shape[1] - 1)
        return integrate_batch(lambda x, o: f(u[o], x), a, b, owner, u.size, cfg_inner)

    return float(np.sum(integrate_batch(lambda x, o: inner(x), np.asarray(u_edges[:-1], dtype=float),
                                        np.asarray(u_edges[1:], dtype=float), cfg=cfg_outer)))

def integrate(f: Callable, a: float, b: float, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """Adaptive Gauss-Kronrod estimate of the integral of ``f`` over [a, b]."""
    if not (math.isfinite(a) and math.isfinite(b)):
        raise DomainError("integration limits must be finite")
    if a > b:
        raise DomainError(f"need a <= b, got a={a}, b={b}")
    return float(integrate_pieces(f, [a, b], cfg)[0])


def cumulative_integral(f: Callable, x, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> np.ndarray:
    """Running integral ``int_{x[0]}^{x[i]} f`` at every knot of ``x``."""
    pieces = integrate_pieces(f, x, cfg)
    return np.concatenate([[0.0], np.cumsum(pieces)])


# --------------------------------------------------------------------------
# standard normal
# --------------------------------------------------------------------------

def _ret(x, out):
    return float(out) if np.ndim(x) == 0 else out


def normal_pdf(x):
    x = np.asarray(x, dtype=float)
    return _ret(x, _INV_SQRT_2PI * np.exp(-0.5 * x * x))


def _upper_tail(ax):
    return 0.5 * erfc(ax / _SQRT2)


def normal_cdf(x):
    """Standard normal CDF.

    Evaluated through the upper tail at |x| so that ``normal_cdf(x) +
    normal_cdf(-x) == 1`` holds in floating point.
    """
    x = np.asarray(x, dtype=float)
    q = _upper_tail(np.abs(x))
    return _ret(x, np.where(x < 0, q, 1.0 - q))


def normal_sf(x):
    """Upper tail ``1 - normal_cdf(x)`` without cancellation."""
    return normal_cdf(-np.asarray(x, dtype=float))


def _lower_quantile(p):
    # p in (0, 0.5]; one Newton step polishes the rational approximation.
    x = ndtri(p)
    r = _upper_tail(-x) - p
    return x - r / (_INV_SQRT_2PI * np.exp(-0.5 * x * x))


def normal_quantile(p):
    p = np.asarray(p, dtype=float)
    if np.any(~((p > 0) & (p < 1))):
        raise DomainError("normal_quantile needs p in the open interval (0, 1)")
    lower = np.where(p > 0.5, 1.0 - p, p)
    x = _lower_quantile(lower)
    return _ret(p, np.where(p > 0.5, -x, x))


# --------------------------------------------------------------------------
# root finding
# --------------------------------------------------------------------------

def find_root(g: Callable[[float], float], lo: float, hi: float, tol: float = 1e-14) -> float:
    """Bracketed root of ``g`` on [lo, hi] (Brent: bisection + secant + IQI)."""
    glo, ghi = g(lo), g(hi)
    if glo == 0:
        return float(lo)
    if ghi == 0:
        return float(hi)
    if np.sign(glo) == np.sign(ghi):
        raise NoBracket(f"g({lo})={glo!r} and g({hi})={ghi!r} have the same sign")
    return float(brentq(g, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=200))


def bisect_increasing(g: Callable[[np.ndarray], np.ndarray], lo, hi, iters: int = 64) -> np.ndarray:
    """Elementwise bisection for nondecreasing ``g`` with g(lo) <= 0 <= g(hi).

    ``lo`` and ``hi`` are arrays of equal shape; the bracket is kept valid at
    every step so the result always lies in the original bracket.
    """
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        pos = g(mid) >= 0
        hi = np.where(pos, mid, hi)
        lo = np.where(pos, lo, mid)
        if np.all(hi - lo <= 4 * np.finfo(float).eps * np.maximum(np.abs(hi), 1e-300)):
            break
    return 0.5 * (lo + hi)


# --------------------------------------------------------------------------
# monotone interpolation
# --------------------------------------------------------------------------

def fd_slopes(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Derivative estimates at the knots from local 5-point Lagrange polynomials."""
    n = x.size
    if n < 5:
        return np.gradient(y, x)
    start = np.clip(np.arange(n) - 2, 0, n - 5)
    xs = x[start[:, None] + np.arange(5)]
    ys = y[start[:, None] + np.arange(5)]
    k = np.arange(n) - start
    xk = x[:, None]
    d = np.zeros(n)
    for j in range(5):
        diff_j = xs[:, [j]] - xs  # x_j - x_m
        diff_k = xk - xs          # x_k - x_m
        mask = np.arange(5) != j
        denom = np.prod(np.where(mask, diff_j, 1.0), axis=1)
        # numerator skips m == j and m == k
        num_mask = mask[None, :] & (np.arange(5)[None, :] != k[:, None])
        num = np.prod(np.where(num_mask, diff_k, 1.0), axis=1)
        w = num / denom
        # j == k: sum over m != k of 1/(x_k - x_m)
        own = np.sum(np.where(mask, 1.0 / np.where(mask, diff_j, 1.0), 0.0), axis=1)
        d += np.where(k == j, own, w) * ys[:, j]
    return d


def _limit_slopes(x, y, m, sign):
    """Fritsch-Carlson limiter making the Hermite cubic monotone in ``sign``."""
    m = m.copy()
    delta = np.diff(y) / np.diff(x)
    m = np.where(sign * m < 0, 0.0, m)
    flat = delta == 0
    m[:-1][flat] = 0.0
    m[1:][flat] = 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        alpha = np.where(flat, 0.0, m[:-1] / delta)
        beta = np.where(flat, 0.0, m[1:] / delta)
    r2 = alpha * alpha + beta * beta
    over = r2 > 9.0
    if np.any(over):
        tau = 3.0 / np.sqrt(r2[over])
        i = np.nonzero(over)[0]
        m[i] = np.where(np.abs(tau * alpha[over] * delta[over]) < np.abs(m[i]),
                        tau * alpha[over] * delta[over], m[i])
        m[i + 1] = np.where(np.abs(tau * beta[over] * delta[over]) < np.abs(m[i + 1]),
                            tau * beta[over] * delta[over], m[i + 1])
    return m


@dataclass(frozen=True, eq=False)
class TabulatedCurve:
    """Smooth function stored as knots, values and slopes (cubic Hermite).

    Evaluation outside ``[x_lo, x_hi]`` is clamped to the nearest end.
    """

    knots_x: np.ndarray
    knots_y: np.ndarray
    slopes: np.ndarray
    _spline: CubicHermiteSpline = field(init=False, repr=False)

    def __post_init__(self):
        x = np.asarray(self.knots_x, dtype=float)
        y = np.asarray(self.knots_y, dtype=float)
        m = np.asarray(self.slopes, dtype=float)
        if x.ndim != 1 or x.size < 2 or y.shape != x.shape or m.shape != x.shape:
            raise DomainError("knot arrays must be 1-D, equal length, >= 2")
        if np.any(np.diff(x) <= 0):
            raise DomainError("knots_x must be strictly increasing")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(m))):
            raise NonFinite("knot table contains non-finite values")
        object.__setattr__(self, "knots_x", x)
        object.__setattr__(self, "knots_y", y)
        object.__setattr__(self, "slopes", m)
        object.__setattr__(self, "_spline", CubicHermiteSpline(x, y, m, extrapolate=False))

    @property
    def x_lo(self) -> float:
        return float(self.knots_x[0])

    @property
    def x_hi(self) -> float:
        return float(self.knots_x[-1])

    def _clamp(self, x):
        return np.clip(np.asarray(x, dtype=float), self.knots_x[0], self.knots_x[-1])

    def __call__(self, x):
        return _ret(x, self._spline(self._clamp(x)))

    eval = __call__

    def derivative(self, x):
        return _ret(x, self._spline(self._clamp(x), 1))

    def to_dict(self) -> dict:
        return {"x": self.knots_x.tolist(), "y": self.knots_y.tolist(), "dydx": self.slopes.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "TabulatedCurve":
        return cls(np.array(d["x"], dtype=float), np.array(d["y"], dtype=float),
                   np.array(d["dydx"], dtype=float))



@dataclass(frozen=True, eq=False)
class TabulatedMonotone(TabulatedCurve):
    """Monotone knot table; ``from_knots`` limits slopes so the interpolant
    stays monotone, which makes ``inverse`` well defined."""

    @classmethod
    def from_knots(cls, x, y, slopes=None, tol: float = 1e-13) -> "TabulatedMonotone":
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        dy = np.diff(y)
        scale = tol * max(1.0, float(np.max(np.abs(y))))
        if np.all(dy >= -scale):
            sign = 1.0
        elif np.all(dy <= scale):
            sign = -1.0
        else:
            i = int(np.argmax(np.abs(dy) * (np.sign(dy) != np.sign(y[-1] - y[0]))))
            raise NotMonotone(f"tabulated values change direction near x={x[i]!r}")
        if sign > 0:
            y = np.maximum.accumulate(y)
        else:
            y = np.minimum.accumulate(y)
        m = fd_slopes(x, y) if slopes is None else np.asarray(slopes, dtype=float)
        return cls(x, y, _limit_slopes(x, y, m, sign))

    @property
    def increasing(self) -> bool:
        return bool(self.knots_y[-1] >= self.knots_y[0])

    def inverse(self, y):
        """Exact functional inverse of the interpolant (bisection per segment)."""
        ya = np.asarray(y, dtype=float)
        ky = self.knots_y if self.increasing else self.knots_y[::-1]
        yc = np.clip(ya, ky[0], ky[-1]).ravel()
        n = self.knots_x.size
        j = np.clip(np.searchsorted(ky, yc, side="right") - 1, 0, n - 2)
        seg = j if self.increasing else (n - 2 - j)
        c = self._spline.c[:, seg]
        h = self.knots_x[seg + 1] - self.knots_x[seg]
        target = yc - c[3]
        sgn = 1.0 if self.increasing else -1.0
        lo = np.zeros_like(yc)
        hi = h.copy()
        for _ in range(60):
            s = 0.5 * (lo + hi)
            val = ((c[0] * s + c[1]) * s + c[2]) * s
            up = sgn * (val - target) >= 0
            hi = np.where(up, s, hi)
            lo = np.where(up, lo, s)
        out = (self.knots_x[seg] + 0.5 * (lo + hi)).reshape(ya.shape)
        return _ret(y, out)



@dataclass(frozen=True, eq=False)
class LogTable:
    """Table of ``y(s) > -1`` on ``s > 0`` interpolated as log1p(y) against log(s).

    Power laws become straight lines, so tails such as ``s**-k`` near
    ``s = 0`` are reproduced with far fewer knots than in linear coordinates.
    """

    inner: TabulatedCurve

    @classmethod
    def from_knots(cls, s, y, dyds, monotone: bool = True) -> "LogTable":
        s = np.asarray(s, dtype=float)
        y = np.asarray(y, dtype=float)
        if np.any(s <= 0) or np.any(y <= -1):
            raise DomainError("LogTable needs s > 0 and y > -1")
        t = np.log(s)
        z = np.log1p(y)
        dz = np.asarray(dyds, dtype=float) * s / (1.0 + y)
        if monotone:
            return cls(TabulatedMonotone.from_knots(t, z, dz))
        return cls(TabulatedCurve(t, z, dz))

    @property
    def x_lo(self) -> float:
        return float(math.exp(self.inner.knots_x[0]))

    @property
    def x_hi(self) -> float:
        return float(math.exp(self.inner.knots_x[-1]))

    def _t(self, s):
        s = np.clip(np.asarray(s, dtype=float), self.x_lo, self.x_hi)
        return np.log(s)

    def __call__(self, s):
        return _ret(s, np.expm1(np.asarray(self.inner(self._t(s)), dtype=float)))

    eval = __call__

    def derivative(self, s):
        t = self._t(s)
        z = np.asarray(self.inner(t), dtype=float)
        dz = np.asarray(self.inner.derivative(t), dtype=float)
        return _ret(s, np.exp(z - t) * dz)

    def to_dict(self) -> dict:
        return {"transform": "log1p-log", **self.inner.to_dict()}

    @classmethod
    def from_dict(cls, d: dict, monotone: bool = True) -> "LogTable":
        inner_cls = TabulatedMonotone if monotone else TabulatedCurve
        return cls(inner_cls.from_dict(d))


def tabulate_monotone(f: Callable, x_lo: float, x_hi: float, n_knots: int,
                      derivative: Callable | None = None) -> TabulatedMonotone:
    """Tabulate a monotone ``f`` on ``n_knots`` uniform knots.

    Slopes come from ``derivative`` when supplied, otherwise from 5-point
    finite differences of the tabulated values; either way they are limited
    so the interpolant stays monotone.
    """
    if n_knots < 16:
        raise DomainError("n_knots must be >= 16")
    if not x_hi > x_lo:
        raise DomainError("need x_hi > x_lo")
    x = np.linspace(x_lo, x_hi, n_knots)
    y = as_vectorized(f)(x)
    slopes = None if derivative is None else as_vectorized(derivative)(x)
    return TabulatedMonotone.from_knots(x, y, slopes)


def distance_grid(s_max: float, n_uniform: int = 400, per_decade: int = 200,
                  eps: float = EPS, switch: float = 0.25) -> np.ndarray:
    """Ascending knots on [eps, s_max] for tables in a distance-to-singularity variable.

    Uniform spacing on ``[switch * s_max, s_max]``; below that the knots are
    geometric (``per_decade`` per factor of ten) down to ``eps``.
    """
    if not (0 < eps < switch * s_max):
        raise DomainError("need 0 < eps < switch * s_max")
    s_sw = switch * s_max
    uni = np.linspace(s_sw, s_max, n_uniform)
    n_geo = max(2, int(math.ceil(math.log10(s_sw / eps) * per_decade)) + 1)
    geo = np.geomspace(eps, s_sw, n_geo)[:-1]
    out = np.concatenate([geo, uni])
    out[0], out[-1] = eps, s_max
    return out
