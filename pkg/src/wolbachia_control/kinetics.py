"""Bistable reaction terms: the Wolbachia infection kinetics and a cubic test model.

A :class:`Kinetics` object bundles a reaction function ``f`` on ``[0, 1]`` with
its unstable zero ``theta``, its potential ``F(z) = int_0^z f`` and the
potential threshold ``theta_c`` (the zero of ``F`` in ``(theta, 1)``).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DenominatorVanishes, DomainError, ModelError, NotInvadable, ThetaOutOfRange

__all__ = [
    "BiologicalParams",
    "Kinetics",
    "WolbachiaKinetics",
    "CubicKinetics",
    "make_wolbachia_kinetics",
    "adaptive_gauss_legendre",
]

POTENTIAL_TOL = 1e-12
_N_CELLS = 64
_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)
_GL5_X, _GL5_W = np.polynomial.legendre.leggauss(5)


@dataclass(frozen=True)
class BiologicalParams:
    """Model constants. ``death_rate`` is the uninfected death rate, ``sigma`` the diffusivity."""

    s_f: float = 0.1
    s_h: float = 0.3
    delta: float = 1.0
    death_rate: float = 1.0
    sigma: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.s_f < 1.0:
            raise ModelError(f"s_f must lie in [0, 1), got {self.s_f}")
        if not 0.0 < self.s_h <= 1.0:
            raise ModelError(f"s_h must lie in (0, 1], got {self.s_h}")
        # delta = 1 is the value used in the numerical experiments, so it is allowed
        if not self.delta >= 1.0:
            raise ModelError(f"delta must be >= 1, got {self.delta}")
        if not self.death_rate > 0.0:
            raise ModelError(f"death_rate must be positive, got {self.death_rate}")
        if not self.sigma > 0.0:
            raise ModelError(f"sigma must be positive, got {self.sigma}")
        if not self.s_f + self.delta - 1.0 < self.delta * self.s_h:
            raise ModelError("need s_f + delta - 1 < delta * s_h for theta < 1")

    @property
    def theta(self) -> float:
        return (self.s_f + self.delta - 1.0) / (self.delta * self.s_h)


def _gl_panel(f, a, b, x=_GL_X, w=_GL_W):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    nodes = mid[..., None] + half[..., None] * x
    return half * (f(nodes) @ w)


def adaptive_gauss_legendre(f, a: float, b: float, tol: float = POTENTIAL_TOL, max_depth: int = 40) -> float:
    """Integrate ``f`` over ``[a, b]`` by recursive bisection of 10-point Gauss-Legendre panels."""

    def recurse(lo, hi, whole, tol, depth):
        mid = 0.5 * (lo + hi)
        left = float(_gl_panel(f, lo, mid))
        right = float(_gl_panel(f, mid, hi))
        if abs(left + right - whole) <= tol or depth >= max_depth:
            return left + right
        return recurse(lo, mid, left, 0.5 * tol, depth + 1) + recurse(mid, hi, right, 0.5 * tol, depth + 1)

    if a == b:
        return 0.0
    return recurse(a, b, float(_gl_panel(f, a, b)), tol, 0)


class Kinetics:
    """Bistable reaction function with zeros at 0, ``theta`` and 1.

    Subclasses implement :meth:`rate`, a vectorised evaluation without domain checks.
    """

    def __init__(self, theta: float):
        if not 0.0 < theta < 1.0:
            raise ThetaOutOfRange(f"theta = {theta} is not in (0, 1)")
        self.theta = float(theta)

    def rate(self, p):
        raise NotImplementedError

    def reaction(self, p):
        """f(p), checked for ``p`` in [0, 1]."""
        arr = np.asarray(p, dtype=float)
        if np.any(arr < 0.0) or np.any(arr > 1.0) or np.any(np.isnan(arr)):
            raise DomainError("reaction is defined on [0, 1] only")
        out = self.rate(arr)
        return float(out) if out.ndim == 0 else out

    # -- potential ---------------------------------------------------------

    @cached_property
    def _potential_table(self) -> np.ndarray:
        edges = np.linspace(0.0, 1.0, _N_CELLS + 1)
        cells = [adaptive_gauss_legendre(self.rate, lo, hi, POTENTIAL_TOL / _N_CELLS)
                 for lo, hi in zip(edges[:-1], edges[1:])]
        return np.concatenate([[0.0], np.cumsum(cells)])

    def potential(self, z):
        """F(z) = int_0^z f, for scalar or array ``z`` in [0, 1]."""
        arr = np.asarray(z, dtype=float)
        if np.any(arr < 0.0) or np.any(arr > 1.0) or np.any(np.isnan(arr)):
            raise DomainError("potential is defined on [0, 1] only")
        flat = arr.ravel()
        table = self._potential_table
        k = np.minimum((flat * _N_CELLS).astype(int), _N_CELLS - 1)
        left = k / _N_CELLS
        partial = _gl_panel(self.rate, left, flat)
        coarse = _gl_panel(self.rate, left, flat, _GL5_X, _GL5_W)
        out = table[k] + partial
        # refine the rare entries where the fixed panel is not converged
        for i in np.flatnonzero(np.abs(partial - coarse) > POTENTIAL_TOL):
            out[i] = table[k[i]] + adaptive_gauss_legendre(self.rate, left[i], flat[i])
        out = out.reshape(arr.shape)
        return float(out) if out.ndim == 0 else out

    @cached_property
    def theta_c(self) -> float:
        """Zero of the potential in (theta, 1), found by bisection."""
        if not self.potential(1.0) > 0.0:
            raise NotInvadable(f"F(1) = {self.potential(1.0):.3e} <= 0: the infected state cannot invade")
        lo, hi = self.theta + 1e-9, 1.0 - 1e-9
        best, best_val = lo, abs(self.potential(lo))
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            val = self.potential(mid)
            if abs(val) < best_val:
                best, best_val = mid, abs(val)
            if val < 0.0:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 4.0 * np.finfo(float).eps:
                break
        return best

    def lipschitz_bound(self) -> float:
        """Sampled bound on sup |f'| over [0, 1], inflated by 10%."""
        p = np.linspace(0.0, 1.0, 10_001)
        slopes = np.abs(np.diff(self.rate(p))) / (p[1] - p[0])
        return 1.1 * float(slopes.max())

    def _check_bistable(self, n: int = 10_000, slack: float = 1e-14) -> None:
        p = np.linspace(0.0, 1.0, n + 1)[1:-1]
        vals = self.rate(p)
        below = p < self.theta
        above = p > self.theta
        if np.any(vals[below] > slack) or np.any(vals[above] < -slack):
            raise ModelError("reaction function is not bistable on the sampled grid")


class WolbachiaKinetics(Kinetics):
    """f(p) = delta d s_h p (1-p)(p-theta) / (s_h p^2 - (s_f+s_h) p + 1)."""

    def __init__(self, params: BiologicalParams):
        super().__init__(params.theta)
        self.params = params
        self._check_denominator()
        self._check_bistable()

    def _check_denominator(self) -> None:
        p = self.params
        vertex = (p.s_f + p.s_h) / (2.0 * p.s_h)
        candidates = [0.0, 1.0] + ([vertex] if 0.0 <= vertex <= 1.0 else [])
        if min(self._denominator(np.array(candidates))) <= 0.0:
            raise DenominatorVanishes("s_h p^2 - (s_f + s_h) p + 1 has a root in [0, 1]")

    def _denominator(self, p):
        q = self.params
        return q.s_h * p * p - (q.s_f + q.s_h) * p + 1.0

    def rate(self, p):
        q = self.params
        p = np.asarray(p, dtype=float)
        scale = q.delta * q.death_rate * q.s_h
        return scale * p * (1.0 - p) * (p - self.theta) / self._denominator(p)

    def __repr__(self):
        return f"WolbachiaKinetics({self.params!r})"


class CubicKinetics(Kinetics):
    """f(p) = scale * p (1-p)(p-theta)."""

    def __init__(self, theta: float, scale: float = 1.0):
        super().__init__(theta)
        if not scale > 0.0:
            raise ModelError("scale must be positive")
        self.scale = float(scale)

    def rate(self, p):
        p = np.asarray(p, dtype=float)
        return self.scale * p * (1.0 - p) * (p - self.theta)

    def __repr__(self):
        return f"CubicKinetics(theta={self.theta}, scale={self.scale})"


def make_wolbachia_kinetics(params: BiologicalParams) -> WolbachiaKinetics:
    return WolbachiaKinetics(params)
