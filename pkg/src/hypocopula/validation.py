"""Independent numerical checks for constructed copulas."""
from __future__ import annotations

import copy
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .base import INNER_CFG, Copula
from .errors import CopulaError, DomainError
from .numerics import QuadratureConfig
from .sampling import sample_pairs

AXIOM_TOL = 1e-8
RECT_TOL = -1e-9
SYMMETRY_TOL = 1e-8
MASS_TOL = 1e-5
ODE_TOL = 1e-7
# valid tables need a handful of outer splits; a corrupted table would
# otherwise bisect toward its kinks for minutes before giving up
MASS_OUTER_CFG = QuadratureConfig(rel_tol=1e-8, abs_tol=1e-10, max_subdivisions=40)


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst: float
    location: list | None = None
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list[CheckResult] = field(default_factory=list)
    grid_size: int = 0
    tolerances: dict = field(default_factory=dict)
    tau: dict | None = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, check: CheckResult, tol_name: str | None = None, tol: float | None = None) -> None:
        if any(c.name == check.name for c in self.checks):
            raise DomainError(f"check {check.name!r} already recorded")
        self.checks.append(check)
        if tol_name is not None:
            self.tolerances[tol_name] = tol

    def merge(self, other: "ValidationReport") -> "ValidationReport":
        for c in other.checks:
            self.add(c)
        self.tolerances.update(other.tolerances)
        self.grid_size = max(self.grid_size, other.grid_size)
        if other.tau is not None:
            self.tau = other.tau
        return self

    def to_dict(self) -> dict:
        return {"passed": self.passed, "grid_size": self.grid_size,
                "tolerances": self.tolerances, "checks": [asdict(c) for c in self.checks],
                "tau": self.tau}

    def to_json(self) -> str:
        return json.dumps(_finite(self.to_dict()), indent=2)


def _finite(obj):
    # JSON has no inf/nan; encode them as strings
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def _lattice(grid_n: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, grid_n + 1)


def _worst(resid: np.ndarray, pts) -> tuple[float, list]:
    i = int(np.argmax(resid))
    return float(resid.flat[i]), [float(p.flat[i]) for p in pts]


def check_copula_axioms(c: Copula, grid_n: int = 200) -> ValidationReport:
    """Boundary values, uniform margins and 2-increasingness on a lattice."""
    if grid_n < 50:
        raise DomainError("grid_n must be >= 50")
    x = _lattice(grid_n)
    uu, vv = np.meshgrid(x, x, indexing="ij")
    C = np.asarray(c.cdf(uu.ravel(), vv.ravel()), dtype=float).reshape(uu.shape)
    rep = ValidationReport(grid_size=grid_n)
    bad = ~np.isfinite(C)
    if np.any(bad):
        w, loc = _worst(bad.astype(float), (uu, vv))
        rep.add(CheckResult("finite", False, math.inf, loc, "non-finite CDF values"))
    else:
        rep.add(CheckResult("finite", True, 0.0))
    zero = np.concatenate([np.abs(C[:, 0]), np.abs(C[0, :])])
    zpts = (np.concatenate([x, np.zeros_like(x)]), np.concatenate([np.zeros_like(x), x]))
    w, loc = _worst(np.nan_to_num(zero, nan=np.inf), zpts)
    rep.add(CheckResult("boundary_zero", w <= AXIOM_TOL, w, loc), "boundary", AXIOM_TOL)
    marg = np.concatenate([np.abs(C[:, -1] - x), np.abs(C[-1, :] - x)])
    mpts = (np.concatenate([x, np.ones_like(x)]), np.concatenate([np.ones_like(x), x]))
    w, loc = _worst(np.nan_to_num(marg, nan=np.inf), mpts)
    rep.add(CheckResult("margins", w <= AXIOM_TOL, w, loc), "margins", AXIOM_TOL)
    rect = C[1:, 1:] - C[1:, :-1] - C[:-1, 1:] + C[:-1, :-1]
    neg = np.nan_to_num(-rect, nan=np.inf)
    w, loc = _worst(neg, (uu[:-1, :-1], vv[:-1, :-1]))
    rep.add(CheckResult("two_increasing", -w >= RECT_TOL, -w, loc,
                        "minimum rectangle mass; location is the lower-left corner"),
            "rectangle_mass", RECT_TOL)
    return rep


def check_opposite_symmetry(c: Copula, grid_n: int = 200) -> ValidationReport:
    """max |C(u, v) - C(1-v, 1-u) - u - v + 1| over the lattice."""
    x = _lattice(grid_n)
    uu, vv = np.meshgrid(x, x, indexing="ij")
    u, v = uu.ravel(), vv.ravel()
    r = np.abs(np.asarray(c.cdf(u, v)) - np.asarray(c.cdf(1.0 - v, 1.0 - u)) - u - v + 1.0)
    w, loc = _worst(np.nan_to_num(r, nan=np.inf), (u, v))
    rep = ValidationReport(grid_size=grid_n)
    rep.add(CheckResult("opposite_symmetry", w <= SYMMETRY_TOL, w, loc), "symmetry", SYMMETRY_TOL)
    return rep


def check_density_mass(c: Copula, tol: float = MASS_TOL) -> float:
    """Total density mass by iterated adaptive quadrature; pass iff |mass - 1| <= tol."""
    return float(c.mass(MASS_OUTER_CFG, INNER_CFG))


def mass_check(c: Copula, tol: float = MASS_TOL) -> ValidationReport:
    rep = ValidationReport()
    try:
        m = check_density_mass(c, tol)
        rep.add(CheckResult("density_mass", abs(m - 1.0) <= tol, abs(m - 1.0), None, f"mass={m!r}"),
                "mass", tol)
    except CopulaError as exc:
        rep.add(CheckResult("density_mass", False, math.inf, None, str(exc)), "mass", tol)
    return rep


def check_ode_residual(c: Copula, n_probe: int = 1000, tol: float = ODE_TOL) -> ValidationReport:
    """Residual of the generator ODE on the stored tables, relative to max(1, F)."""
    rep = ValidationReport()
    if not hasattr(c, "ode_residual"):
        return rep
    lo = getattr(c, "u0", 0.0)
    u = np.linspace(lo, 1.0, n_probe + 2)[1:-1]
    r = np.asarray(c.ode_residual(u), dtype=float)
    scale = np.maximum(1.0, np.abs(np.asarray(c.F(u), dtype=float)))
    rel = np.nan_to_num(r / scale, nan=np.inf)
    w, loc = _worst(rel, (u,))
    rep.add(CheckResult("ode_residual", w <= tol, w, loc), "ode", tol)
    return rep


# ----------------------------------------------------------------------
# Kendall tau
# ----------------------------------------------------------------------

def _dominated_counts(r: np.ndarray) -> np.ndarray:
    """For a sequence of distinct ranks r, count q < p with r[q] < r[p].

    Bit-by-bit: r[q] < r[p] iff they share the prefix above some bit b where
    r[q] has 0 and r[p] has 1, so each level is one stable sort plus a
    grouped cumulative count.
    """
    r = np.asarray(r, dtype=np.int64)
    n = r.size
    out = np.zeros(n, dtype=np.int64)
    for b in range(max(1, int(n - 1).bit_length())):
        key = r >> (b + 1)
        order = np.argsort(key, kind="stable")
        k = key[order]
        bit = (r[order] >> b) & 1
        zeros = (bit == 0).astype(np.int64)
        before = np.cumsum(zeros) - zeros
        new = np.concatenate([[True], k[1:] != k[:-1]])
        gid = np.cumsum(new) - 1
        within = before - before[new][gid]
        out[order] += np.where(bit == 1, within, 0)
    return out


def concordance_terms(u, v) -> np.ndarray:
    """Per-observation (concordant - discordant) / (n - 1), assuming no ties."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    n = u.size
    ru = np.argsort(np.argsort(u, kind="stable"), kind="stable")
    rv = np.argsort(np.argsort(v, kind="stable"), kind="stable")
    order = np.argsort(ru)
    a = np.empty(n, dtype=np.int64)
    a[order] = _dominated_counts(rv[order])
    return (4 * a + (n - 1) - 2 * ru - 2 * rv) / (n - 1)


def sample_tau(u, v) -> tuple[float, float]:
    """Sample Kendall tau and its standard error, 2 sd(h) / sqrt(n)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    tau = float(stats.kendalltau(u, v).statistic)
    h = concordance_terms(u, v)
    se = 2.0 * float(np.std(h, ddof=1)) / math.sqrt(u.size)
    return tau, se


@dataclass
class TauReport:
    tau_paper: float
    tau_direct: float
    tau_sample: float
    standard_error: float
    n_samples: int
    flags: list[str] = field(default_factory=list)

    def as_tuple(self) -> tuple[float, float, float]:
        return self.tau_paper, self.tau_direct, self.tau_sample


def kendall_tau_report(c: Copula, n_samples: int = 100_000, seed: int = 0) -> TauReport:
    """Opposite-diagonal tau, direct tau and sample tau with disagreement flags.

    A flag is raised for each quadrature value further than three standard
    errors from the sample estimate.
    """
    tp = c.kendall_tau_paper()
    td = c.kendall_tau_direct()
    b = sample_pairs(c, n_samples, seed)
    ts, se = sample_tau(b.u, b.v)
    flags = []
    if abs(tp - ts) > 3 * se:
        flags.append("tau_paper_disagrees_with_sample")
    if abs(td - ts) > 3 * se:
        flags.append("tau_direct_disagrees_with_sample")
    return TauReport(tp, td, ts, se, int(n_samples), flags)


def tau_check(c: Copula, n_samples: int = 100_000, seed: int = 0) -> ValidationReport:
    rep = ValidationReport()
    t = kendall_tau_report(c, n_samples, seed)
    dev = abs(t.tau_direct - t.tau_sample)
    rep.add(CheckResult("tau_direct_vs_sample", dev <= 3 * t.standard_error, dev, None,
                        f"se={t.standard_error:.3e}"), "tau_sigmas", 3.0)
    rep.tau = asdict(t)
    return rep


def validate_copula(c: Copula, grid_n: int = 200, tau_samples: int = 0,
                    seed: int = 0) -> ValidationReport:
    """Run axioms, symmetry, mass, ODE and (when tau_samples > 0) the tau cross-check."""
    rep = check_copula_axioms(c, grid_n)
    rep.merge(check_opposite_symmetry(c, grid_n))
    rep.merge(mass_check(c))
    rep.merge(check_ode_residual(c))
    if tau_samples > 0:
        rep.merge(tau_check(c, tau_samples, seed))
    return rep


def corrupt_g_knot(model: dict, v: float, amount: float = 0.05) -> dict:
    """Copy of a serialized tabulated model with G raised by ``amount`` at the knot nearest v."""
    out = copy.deepcopy(model)
    try:
        table = out["profile"]["table"]
    except KeyError as exc:
        raise DomainError("model has no tabulated G profile") from exc
    x = np.asarray(table["x"], dtype=float)
    i = int(np.argmin(np.abs(x - v)))
    g = math.exp(-float(table["y"][i])) + amount
    table["y"][i] = -math.log(g)
    return out
