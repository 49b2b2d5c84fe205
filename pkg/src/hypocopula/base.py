"""Behaviour shared by every opposite-symmetric copula in the package."""
from __future__ import annotations

import numpy as np

from .errors import DegenerateDiagonal, DomainError, IntegralDiverged, NonConvergence, NonFinite
from .numerics import QuadratureConfig, _ret, integrate_2d, integrate_pieces

# cancellation in 1 - C'_u limits the inner integrals to about 1e-13 absolute
INNER_CFG = QuadratureConfig(rel_tol=1e-10, abs_tol=1e-13, max_subdivisions=400)
OUTER_CFG = QuadratureConfig(rel_tol=1e-9, abs_tol=1e-12, max_subdivisions=400)


def unit_pair(u, v):
    """Broadcast ``u, v`` to float arrays, rejecting points outside [0, 1]^2."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    ub, vb = np.broadcast_arrays(u, v)
    if not (np.all((ub >= 0) & (ub <= 1)) and np.all((vb >= 0) & (vb <= 1))):
        raise DomainError("(u, v) must lie in the unit square")
    return ub, vb


class Copula:
    """Abstract bivariate copula with ``C(u, v) = C(1-v, 1-u) + u + v - 1``.

    Subclasses provide the lower-triangle pieces; everything else here
    follows from opposite symmetry.
    """

    kind = "copula"

    # -- to be provided -----------------------------------------------------
    def cdf(self, u, v):
        raise NotImplementedError

    def density(self, u, v):
        raise NotImplementedError

    def conditional_cdf(self, u, v):
        """C'_u(u, v): the CDF of V given U = u."""
        raise NotImplementedError

    def v_breaks(self, u) -> np.ndarray:
        """Values of v where the density jumps or kinks, per row of ``u``."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        return (1.0 - u)[:, None]

    def u_edges(self) -> np.ndarray:
        return np.array([0.0, 0.5, 1.0])

    def to_dict(self) -> dict:
        raise NotImplementedError

    # -- derived --------------------------------------------------------------
    def __call__(self, u, v):
        return self.cdf(u, v)

    def conditional_cdf_v(self, u, v):
        """C'_v(u, v) = 1 - C'_u(1-v, 1-u)."""
        u, v = unit_pair(u, v)
        return _ret(u, 1.0 - np.asarray(self.conditional_cdf(1.0 - v, 1.0 - u), dtype=float))

    def opposite_diagonal(self, u):
        """omega(u) = C(u, 1-u)."""
        u = np.asarray(u, dtype=float)
        return self.cdf(u, 1.0 - u)

    def opposite_diagonal_slope(self, u):
        """omega'(u) = C'_u(u, 1-u) - C'_v(u, 1-u) = 2 C'_u(u, 1-u) - 1."""
        u = np.asarray(u, dtype=float)
        return _ret(u, 2.0 * np.asarray(self.conditional_cdf(u, 1.0 - u), dtype=float) - 1.0)

    def mass(self, cfg_outer: QuadratureConfig = OUTER_CFG,
             cfg_inner: QuadratureConfig = INNER_CFG) -> float:
        """Iterated integral of the density over the unit square."""
        return _guarded(lambda: integrate_2d(lambda u, v: self.density(u, v), self.u_edges(),
                                             self.v_breaks, cfg_outer, cfg_inner))

    def kendall_tau_direct(self, cfg_outer: QuadratureConfig = OUTER_CFG,
                           cfg_inner: QuadratureConfig = INNER_CFG) -> float:
        """1 - 4 * iint C'_u C'_v over the unit square."""

        def f(u, v):
            return np.asarray(self.conditional_cdf(u, v)) * np.asarray(self.conditional_cdf_v(u, v))

        return 1.0 - 4.0 * _guarded(lambda: integrate_2d(f, self.u_edges(), self.v_breaks,
                                                         cfg_outer, cfg_inner))

    def kendall_tau_paper(self, cfg: QuadratureConfig = OUTER_CFG) -> float:
        """-1 + 8 * int_0^1 C(u, 1-u) du (opposite-diagonal formula)."""
        edges = self.u_edges()
        val = _guarded(lambda: float(np.sum(integrate_pieces(
            lambda u: np.asarray(self.opposite_diagonal(u), dtype=float), edges, cfg))))
        return -1.0 + 8.0 * val


def _guarded(fn):
    try:
        return fn()
    except (NonConvergence, NonFinite) as exc:
        raise IntegralDiverged(str(exc)) from exc


def opposite_diagonal(c: Copula, u):
    return c.opposite_diagonal(u)


def l_from_omega(omega, omega_prime, u):
    """L(u) = 2 omega(u) / (1 - omega'(u)), recovering the generator from the
    opposite diagonal.  ``omega`` and ``omega_prime`` may be callables or
    values already evaluated at ``u``."""
    u = np.asarray(u, dtype=float)
    om = np.asarray(omega(u) if callable(omega) else omega, dtype=float)
    omp = np.asarray(omega_prime(u) if callable(omega_prime) else omega_prime, dtype=float)
    den = 1.0 - omp
    if np.any(np.abs(den) < 1e-12):
        raise DegenerateDiagonal("1 - omega'(u) vanishes")
    return _ret(u, 2.0 * om / den)


def kendall_tau_paper(c: Copula) -> float:
    return c.kendall_tau_paper()


def kendall_tau_direct(c: Copula) -> float:
    return c.kendall_tau_direct()
