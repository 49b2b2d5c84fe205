"""Probit injury levels, exposure toxic loads and ordered threshold chains.

An agent with thresholds (gamma_1, ..., gamma_n) is injured at level i by
time t when gamma_i <= Gamma_i(t) = alpha_i + beta_i log int_0^t c^n_i.
Levels are ordered: injury at i+1 must imply injury at i.  Consecutive
thresholds are coupled by the Gaussian-shift copula with shift Delta_i, which
enforces gamma_i - gamma_{i+1} <= Delta_i.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from .errors import AmbiguousContext, DomainError, IncompatibleLevels, ModelFormatError, ZeroLoad
from .numerics import normal_cdf, normal_quantile
from .prescribed import PrescribedCopula, build_main
from .sampling import CHUNK, _open_uniform, format_pairs_csv, invert_conditional
from .support import gaussian_shift_h

BETA_RTOL = 1e-12


@dataclass(frozen=True)
class ProbitLevel:
    alpha: float
    beta: float
    n: float
    label: str = ""

    def __post_init__(self):
        for name in ("alpha", "beta", "n"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise DomainError(f"beta must be positive, got {self.beta!r}")
        if not (self.n > 0 and math.isfinite(self.n)):
            raise DomainError(f"n must be positive, got {self.n!r}")
        if not math.isfinite(self.alpha):
            raise DomainError(f"alpha must be finite, got {self.alpha!r}")

    def to_dict(self) -> dict:
        return {"label": self.label, "alpha": self.alpha, "beta": self.beta, "n": self.n}


@dataclass(frozen=True, eq=False)
class ExposureProfile:
    """Piecewise-constant concentration: ``levels[j]`` on [breakpoints[j], breakpoints[j+1]).

    The concentration is zero outside the covered span.
    """

    breakpoints: np.ndarray
    levels: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float)
        c = np.asarray(self.levels, dtype=float)
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "levels", c)
        if b.ndim != 1 or c.ndim != 1 or b.size != c.size + 1 or c.size < 1:
            raise DomainError("need len(breakpoints) == len(levels) + 1 >= 2")
        if not np.all(np.isfinite(b)) or np.any(np.diff(b) <= 0):
            raise DomainError("breakpoints must be finite and strictly increasing")
        if b[0] < 0:
            raise DomainError("exposure cannot start before t = 0")
        if not np.all(np.isfinite(c)) or np.any(c < 0):
            raise DomainError("levels must be finite and nonnegative")
        if not np.any(c > 0):
            raise DomainError("at least one level must be positive")

    @classmethod
    def constant(cls, c: float, t_end: float) -> "ExposureProfile":
        return cls(np.array([0.0, float(t_end)]), np.array([float(c)]))

    def _overlap(self, t: float) -> np.ndarray:
        b = self.breakpoints
        return np.clip(np.minimum(b[1:], t) - b[:-1], 0.0, None)

    def max_concentration(self, t: float) -> float:
        """max c on [0, t], counting only pieces that overlap it."""
        d = self._overlap(t)
        return float(np.max(self.levels[d > 0])) if np.any(d > 0) else 0.0

    def duration(self) -> float:
        return float(self.breakpoints[-1])


def toxic_load(e: ExposureProfile, n: float, t: float) -> float:
    """log int_0^t c(s)^n ds, exact for piecewise-constant c."""
    if not (t > 0):
        raise DomainError(f"t must be positive, got {t!r}")
    if not (n > 0):
        raise DomainError(f"n must be positive, got {n!r}")
    d = e._overlap(float(t))
    keep = (d > 0) & (e.levels > 0)
    if not np.any(keep):
        raise ZeroLoad(f"no exposure before t={t!r}")
    return float(logsumexp(n * np.log(e.levels[keep]) + np.log(d[keep])))


def probit_value(p: ProbitLevel, e: ExposureProfile, t: float) -> float:
    return p.alpha + p.beta * toxic_load(e, p.n, t)


def injured_fraction(p: ProbitLevel, e: ExposureProfile, t: float) -> float:
    return float(normal_cdf(probit_value(p, e, t)))


@dataclass(frozen=True)
class LemmaCheck:
    lhs1: float
    rhs1: float
    lhs2: float
    rhs2: float
    both_hold: bool


def check_lemma_inequalities(e: ExposureProfile, m: float, n: float, t: float,
                             rtol: float = 1e-12) -> LemmaCheck:
    """The two toxic-load inequalities for exponents n >= m > 0.

    log int c^m <= (m/n) log int c^n + (1 - m/n) log t
    log int c^n <= log int c^m + (n - m) log max c

    ``rtol`` absorbs rounding when the two sides coincide (constant c).
    """
    if not (n >= m > 0):
        raise DomainError(f"need n >= m > 0, got m={m!r}, n={n!r}")
    lm = toxic_load(e, m, t)
    ln = toxic_load(e, n, t)
    lhs1, rhs1 = lm, (m / n) * ln + (1.0 - m / n) * math.log(t)
    lhs2, rhs2 = ln, lm + (n - m) * math.log(e.max_concentration(t))

    def ok(a, b):
        return a <= b + rtol * max(1.0, abs(a), abs(b))

    return LemmaCheck(lhs1, rhs1, lhs2, rhs2, ok(lhs1, rhs1) and ok(lhs2, rhs2))


# ----------------------------------------------------------------------
# compatibility of consecutive levels
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class CompatibilityResult:
    compatible: bool
    delta_i: float
    reason: str
    case_tag: str


def _rel_equal(a: float, b: float) -> bool:
    return abs(a - b) <= BETA_RTOL * max(abs(a), abs(b))


def check_compatibility(p_i: ProbitLevel, p_next: ProbitLevel,
                        context: dict | None = None) -> CompatibilityResult:
    """Whether level i+1 can be nested inside level i, and the shift Delta_i.

    ``context`` supplies the exposure-duration bound ``t`` when n decreases and
    the concentration bound ``c_max`` when n increases; the result is relative
    to that bound.
    """
    ctx = context or {}
    a, an = p_i.alpha, p_next.alpha
    if p_next.n == p_i.n:
        tag = "equal_n"
        beta_ok = _rel_equal(p_next.beta, p_i.beta)
        delta = a - an
        cond = "beta_{i+1} = beta_i"
    elif p_next.n < p_i.n:
        tag = "decreasing_n"
        if ctx.get("t") is None:
            raise AmbiguousContext("decreasing n needs the exposure-duration bound t")
        t = float(ctx["t"])
        if not t > 0:
            raise DomainError(f"t must be positive, got {t!r}")
        beta_ok = _rel_equal(p_next.n * p_next.beta, p_i.n * p_i.beta)
        delta = a - an - p_next.beta * (1.0 - p_next.n / p_i.n) * math.log(t)
        cond = "n_{i+1} beta_{i+1} = n_i beta_i (decreasing-n theorem)"
    else:
        tag = "increasing_n"
        if ctx.get("c_max") is None:
            raise AmbiguousContext("increasing n needs the concentration bound c_max")
        cm = float(ctx["c_max"])
        if not cm > 0:
            raise DomainError(f"c_max must be positive, got {cm!r}")
        beta_ok = _rel_equal(p_next.beta, p_i.beta)
        delta = a - an - p_i.beta * (p_next.n - p_i.n) * math.log(cm)
        cond = "beta_{i+1} = beta_i (increasing-n theorem)"
    if not beta_ok:
        return CompatibilityResult(False, delta, f"slope condition {cond} fails", tag)
    if delta < 0:
        return CompatibilityResult(False, delta, f"Delta_i = {delta:.6g} < 0", tag)
    return CompatibilityResult(True, delta, f"{cond} holds and Delta_i = {delta:.6g} >= 0", tag)


# ----------------------------------------------------------------------
# threshold chains
# ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ThresholdChain:
    gammas: np.ndarray
    copula_deltas: list[float]
    seed: int
    singular: list[bool] = field(default_factory=list)

    def support_violations(self) -> np.ndarray:
        """Per transition, rows with gamma_i - gamma_{i+1} > Delta_i."""
        g = self.gammas
        d = np.asarray(self.copula_deltas, dtype=float)
        return np.sum(g[:, :-1] - g[:, 1:] > d[None, :], axis=0)


@lru_cache(maxsize=16)
def _shift_copula(delta: float) -> PrescribedCopula:
    return build_main(gaussian_shift_h(delta))


def _contexts(context, k: int) -> list[dict]:
    if context is None or isinstance(context, dict):
        return [context or {}] * k
    ctx = list(context)
    if len(ctx) != k:
        raise DomainError(f"need {k} transition contexts, got {len(ctx)}")
    return ctx


def chain_deltas(levels: list[ProbitLevel], context=None,
                 allow_singular: bool = False) -> list[float]:
    out = []
    for i, ctx in enumerate(_contexts(context, len(levels) - 1)):
        r = check_compatibility(levels[i], levels[i + 1], ctx)
        if not r.compatible:
            raise IncompatibleLevels(f"levels {i + 1} -> {i + 2}: {r.reason}")
        if r.delta_i == 0 and not allow_singular:
            raise IncompatibleLevels(
                f"levels {i + 1} -> {i + 2}: Delta_i = 0 admits only the singular coupling "
                "gamma_{i+1} = gamma_i; pass allow_singular to use it")
        out.append(r.delta_i)
    return out


def _next_gamma(g: np.ndarray, t: np.ndarray, delta: float) -> np.ndarray:
    if delta == 0:
        return g.copy()
    x = -g
    v = invert_conditional(_shift_copula(float(delta)), normal_cdf(x), t)
    # rounding of u = Phi(-gamma) must not push a draw past the support edge
    return np.maximum(-normal_quantile(v), g - delta)


def sample_threshold_chain(levels: list[ProbitLevel], context, n_samples: int, seed: int,
                           allow_singular: bool = False) -> ThresholdChain:
    """Sample (gamma_1, ..., gamma_n) with standard-normal margins.

    gamma_1 is standard normal.  Each next threshold is drawn by inverting the
    conditional CDF of the Gaussian-shift copula at u = Phi(-gamma_i).  Row
    blocks get independent child seeds, so the output depends only on
    (levels, context, n_samples, seed).
    """
    if len(levels) < 1:
        raise DomainError("need at least one level")
    if int(n_samples) < 1:
        raise DomainError("n_samples must be >= 1")
    n = int(n_samples)
    deltas = chain_deltas(levels, context, allow_singular)
    sizes = [CHUNK] * (n // CHUNK) + ([n % CHUNK] if n % CHUNK else [])
    blocks = []
    for child, m in zip(np.random.SeedSequence(int(seed)).spawn(len(sizes)), sizes):
        rng = np.random.Generator(np.random.PCG64(child))
        w = _open_uniform(rng, (m, len(levels)))
        cols = [normal_quantile(w[:, 0])]
        for j, d in enumerate(deltas):
            cols.append(_next_gamma(cols[-1], w[:, j + 1], d))
        blocks.append(np.column_stack(cols))
    return ThresholdChain(np.concatenate(blocks, axis=0), deltas, int(seed),
                          [d == 0 for d in deltas])


def ordering_violations(chain: ThresholdChain, levels: list[ProbitLevel],
                        exposures: list[tuple[ExposureProfile, float]]) -> np.ndarray:
    """Count rows with gamma_{i+1} <= Gamma_{i+1}(t) but gamma_i > Gamma_i(t).

    Returns a (len(exposures), n_transitions) array of counts.
    """
    g = chain.gammas
    out = np.zeros((len(exposures), len(levels) - 1), dtype=np.int64)
    for k, (e, t) in enumerate(exposures):
        gam = np.array([probit_value(p, e, t) for p in levels])
        hit = g <= gam[None, :]
        out[k] = np.sum(hit[:, 1:] & ~hit[:, :-1], axis=0)
    return out


# ----------------------------------------------------------------------
# file formats
# ----------------------------------------------------------------------

def levels_from_json(text: str) -> list[ProbitLevel]:
    try:
        raw = json.loads(text)
        return [ProbitLevel(float(d["alpha"]), float(d["beta"]), float(d["n"]),
                            str(d.get("label", ""))) for d in raw]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"bad levels file: {exc}") from exc


def levels_to_json(levels: list[ProbitLevel]) -> str:
    return json.dumps([p.to_dict() for p in levels], indent=2)


def read_exposure_csv(path) -> ExposureProfile:
    """Rows ``t_start,t_end,concentration``; gaps between rows are zero exposure."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    try:
        segs = sorted((float(r["t_start"]), float(r["t_end"]), float(r["concentration"])) for r in rows)
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{path}: bad exposure row: {exc}") from exc
    if not segs:
        raise ModelFormatError(f"{path}: no exposure rows")
    bps, lev = [segs[0][0]], []
    if bps[0] > 0:
        bps, lev = [0.0, segs[0][0]], [0.0]
    for a, b, c in segs:
        if a < bps[-1]:
            raise ModelFormatError(f"{path}: overlapping intervals at t={a!r}")
        if a > bps[-1]:
            bps.append(a)
            lev.append(0.0)
        bps.append(b)
        lev.append(c)
    return ExposureProfile(np.array(bps), np.array(lev))


def write_chain_csv(path, chain: ThresholdChain, labels: list[str] | None = None) -> None:
    k = chain.gammas.shape[1]
    header = tuple(labels) if labels else tuple(f"gamma_{i + 1}" for i in range(k))
    Path(path).write_text(format_pairs_csv(chain.gammas, header))
