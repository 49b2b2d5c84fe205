"""Sampling by conditional inversion: draw U and T uniform, solve C'_u(U, V) = T."""
from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .base import Copula
from .errors import DomainError, InversionFailed
from .numerics import normal_quantile
from .prescribed import PrescribedCopula

CHUNK = 1 << 15
_BISECT_ITERS = 80

# floor for v: strictly positive, yet below any tail the inversion can resolve
TINY = float(np.finfo(float).tiny)
ONE_BELOW = float(np.nextafter(1.0, 0.0))


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """``pairs`` is an (n, 2) array of (u, v) in the open unit square."""

    pairs: np.ndarray
    seed: int
    copula_spec: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return int(self.pairs.shape[0])

    @property
    def u(self) -> np.ndarray:
        return self.pairs[:, 0]

    @property
    def v(self) -> np.ndarray:
        return self.pairs[:, 1]


def _open_uniform(rng: np.random.Generator, shape) -> np.ndarray:
    # 53-bit midpoints: never exactly 0 or 1
    return (rng.integers(0, 1 << 53, size=shape, dtype=np.int64) + 0.5) * 2.0 ** -53


def _bisect(c: Copula, u, t, lo, hi) -> np.ndarray:
    lo = lo.copy()
    hi = hi.copy()
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        up = np.asarray(c.conditional_cdf(u, mid), dtype=float) >= t
        hi = np.where(up, mid, hi)
        lo = np.where(up, lo, mid)
    return 0.5 * (lo + hi)


def _bracket(c: Copula, u, t, top) -> tuple[np.ndarray, np.ndarray]:
    """Pick the piece between consecutive breakpoints where C'_u crosses t."""
    br = np.asarray(c.v_breaks(u), dtype=float).reshape(u.size, -1)
    br = np.minimum(np.clip(br, 0.0, 1.0), top[:, None])
    edges = np.sort(np.concatenate([np.zeros((u.size, 1)), br, top[:, None]], axis=1), axis=1)
    vals = np.asarray(c.conditional_cdf(np.repeat(u, edges.shape[1]), edges.ravel()), dtype=float)
    vals = vals.reshape(edges.shape)
    vals[:, 0] = 0.0
    vals[:, -1] = np.maximum(vals[:, -1], 1.0)
    j = np.argmax(vals >= t[:, None], axis=1)
    j = np.clip(j, 1, edges.shape[1] - 1)
    rows = np.arange(u.size)
    return edges[rows, j - 1], edges[rows, j]


def invert_conditional(c: Copula, u, t) -> np.ndarray:
    """Solve C'_u(u, v) = t for v, elementwise.

    For a prescribed copula with u <= u0 the solution is analytic,
    ``v = G^-1(t G(H(u)))``; elsewhere the piece containing the solution is
    found from the region breakpoints and bisected.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float)).ravel()
    t = np.atleast_1d(np.asarray(t, dtype=float)).ravel()
    if u.shape != t.shape:
        raise DomainError("u and t must have the same length")
    if np.any((u <= 0) | (u >= 1)) or np.any((t < 0) | (t > 1)):
        raise DomainError("need u in (0, 1) and t in [0, 1]")
    v = np.empty_like(u)
    if isinstance(c, PrescribedCopula):
        hu = np.asarray(c.h.eval(u), dtype=float)
        left = u <= c.u0
        if np.any(left):
            p = c.profile
            with np.errstate(divide="ignore"):
                target = np.asarray(p.lam(hu[left]), dtype=float) - np.log(t[left])
            v[left] = np.minimum(np.asarray(p.lam_inv(target), dtype=float), hu[left])
        right = ~left
        if np.any(right):
            lo, hi = _bracket(c, u[right], t[right], hu[right])
            v[right] = _bisect(c, u[right], t[right], lo, hi)
        # strictly inside the support, with room for rounding in Phi^-1 at the
        # far lower tail; near v = 1 a few ulps keep the steep edge mass
        top = hu - np.maximum(16 * np.spacing(hu), 1e-12 * np.minimum(hu, 1.0 - hu))
        top = np.where(top > TINY, top, 0.5 * hu)
        v = np.clip(v, np.minimum(TINY, 0.5 * hu), top)
    else:
        lo, hi = _bracket(c, u, t, np.ones_like(u))
        v = _bisect(c, u, t, lo, hi)
        v = np.clip(v, TINY, ONE_BELOW)
    if not np.all(np.isfinite(v)):
        raise InversionFailed("conditional inversion produced non-finite values")
    return v


def _chunk(c: Copula, child: np.random.SeedSequence, m: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(child))
    ut = _open_uniform(rng, (m, 2))
    v = invert_conditional(c, ut[:, 0], ut[:, 1])
    return np.column_stack([ut[:, 0], v])


def sample_pairs(c: Copula, n: int, seed: int, workers: int = 1) -> SampleBatch:
    """Draw ``n`` pairs; the result depends only on (copula, n, seed).

    Work is split into fixed-size chunks with independent child seeds, so
    ``workers`` changes speed but never the output.
    """
    if int(n) < 1:
        raise DomainError("n must be >= 1")
    n = int(n)
    sizes = [CHUNK] * (n // CHUNK) + ([n % CHUNK] if n % CHUNK else [])
    children = np.random.SeedSequence(int(seed)).spawn(len(sizes))
    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda a: _chunk(c, *a), zip(children, sizes)))
    else:
        parts = [_chunk(c, ch, m) for ch, m in zip(children, sizes)]
    spec = c.to_dict().get("spec", {}) if hasattr(c, "to_dict") else {}
    return SampleBatch(np.concatenate(parts, axis=0), int(seed), spec)


def to_normal_pairs(batch: SampleBatch) -> np.ndarray:
    """(x, y) = (Phi^-1(u), Phi^-1(v)) for every pair."""
    return np.column_stack([normal_quantile(batch.u), normal_quantile(batch.v)])


def format_pairs_csv(arr: np.ndarray, header: tuple[str, str] = ("u", "v")) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    np.savetxt(buf, np.asarray(arr, dtype=float), fmt="%.17g", delimiter=",")
    return buf.getvalue()


def write_pairs_csv(path, arr: np.ndarray, header: tuple[str, str] = ("u", "v")) -> None:
    Path(path).write_text(format_pairs_csv(arr, header))


def read_pairs_csv(path) -> tuple[tuple[str, ...], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DomainError(f"{path}: empty file")
    data = np.array([[float(x) for x in r] for r in rows[1:]], dtype=float).reshape(-1, len(rows[0]))
    return tuple(rows[0]), data
