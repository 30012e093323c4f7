"""Explicit radial profiles behind the invasion results and the energy functional.

Profiles provided:

* the trapezoid family ``phi_R`` (plateau ``alpha`` on ``[0, R]``, linear ramp to 0 on
  ``[R, R+1]``); with ``R = R_alpha - 1`` it is the concrete propagule ``v_alpha``;
* the plateau profile ``gamma`` (plateau ``alpha_bar`` on ``[0, R_alpha]``, smoothstep
  ramp to 0 over ``[R_alpha, (1+eps) R_alpha]``) used to build the explicit subsolution.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from .errors import AlphaBelowThreshold, DomainError, ModelError, OrderingError, SupportTruncated
from .grid import Geometry, Grid, fv_weights
from .kinetics import Kinetics

__all__ = [
    "Geometry",
    "RadialProfile",
    "TrapezoidProfile",
    "PlateauProfile",
    "smoothstep",
    "propagule_radius",
    "propagule_profile",
    "trapezoid_profile",
    "plateau_profile",
    "epsilon_star",
    "buffer_condition",
    "energy",
    "trapezoid_energy_bound",
]

# sup |phi'| and sup |phi''| of the smoothstep on [0, 1]
SMOOTHSTEP_MAX_SLOPE = 1.5
SMOOTHSTEP_MAX_CURVATURE = 6.0


def smoothstep(x):
    """phi(x) = -2(1-x)^3 + 3(1-x)^2: decreasing from 1 to 0 with flat ends."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0.0) or np.any(arr > 1.0) or np.any(np.isnan(arr)):
        raise DomainError("smoothstep is defined on [0, 1]")
    y = 1.0 - arr
    out = y * y * (3.0 - 2.0 * y)
    return float(out) if out.ndim == 0 else out


class RadialProfile:
    """Nonincreasing, compactly supported function of the radius."""

    support_radius: float
    peak: float

    def __call__(self, r):
        raise NotImplementedError

    def sample(self, grid: Grid, geom: Geometry) -> np.ndarray:
        x = grid.nodes
        return self(x if geom.radial else np.abs(x))


class TrapezoidProfile(RadialProfile):
    def __init__(self, alpha: float, R: float):
        if not 0.0 < alpha <= 1.0:
            raise DomainError("alpha must lie in (0, 1]")
        if not R > 0.0:
            raise DomainError("R must be positive")
        self.alpha = float(alpha)
        self.R = float(R)
        self.peak = self.alpha
        self.support_radius = self.R + 1.0

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = self.alpha * np.clip(self.R + 1.0 - r, 0.0, 1.0)
        return float(out) if out.ndim == 0 else out

    def __repr__(self):
        return f"TrapezoidProfile(alpha={self.alpha}, R={self.R})"


class PlateauProfile(RadialProfile):
    def __init__(self, alpha_bar: float, R_alpha: float, epsilon: float):
        if not 0.0 < alpha_bar < 1.0:
            raise DomainError("alpha_bar must lie in (0, 1)")
        if not (R_alpha > 0.0 and epsilon > 0.0):
            raise DomainError("R_alpha and epsilon must be positive")
        self.alpha_bar = float(alpha_bar)
        self.R_alpha = float(R_alpha)
        self.epsilon = float(epsilon)
        self.peak = self.alpha_bar
        self.support_radius = (1.0 + self.epsilon) * self.R_alpha

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        s = np.clip((r - self.R_alpha) / (self.epsilon * self.R_alpha), 0.0, 1.0)
        out = self.alpha_bar * smoothstep(s)
        return float(out) if np.ndim(out) == 0 else out

    def __repr__(self):
        return f"PlateauProfile(alpha_bar={self.alpha_bar}, R_alpha={self.R_alpha}, epsilon={self.epsilon})"


def trapezoid_profile(alpha: float, R: float) -> TrapezoidProfile:
    return TrapezoidProfile(alpha, R)


def plateau_profile(alpha_bar: float, R_alpha: float, epsilon: float) -> PlateauProfile:
    return PlateauProfile(alpha_bar, R_alpha, epsilon)


def propagule_radius(k: Kinetics, sigma: float, alpha: float, geom: Geometry) -> float:
    """Support radius R_alpha of a sufficient alpha-propagule.

    R_alpha = ((1 + 2F(alpha) / (sigma alpha^2 - 2F(theta)))^(1/d) - 1)^(-1) + 1,
    finite for alpha in (theta_c, 1] and blowing up as alpha decreases to theta_c.
    """
    if not sigma > 0.0:
        raise ModelError("sigma must be positive")
    if not alpha <= 1.0:
        raise DomainError("alpha must not exceed 1")
    if alpha <= k.theta_c:
        raise AlphaBelowThreshold(f"alpha = {alpha} <= theta_c = {k.theta_c}")
    F_alpha = k.potential(alpha)
    if F_alpha <= 0.0:
        raise AlphaBelowThreshold(f"F(alpha) = {F_alpha:.3e} is not positive")
    ratio = 2.0 * F_alpha / (sigma * alpha * alpha - 2.0 * k.potential(k.theta))
    return 1.0 / math.expm1(math.log1p(ratio) / geom.dim) + 1.0


def propagule_profile(k: Kinetics, sigma: float, alpha: float, geom: Geometry) -> TrapezoidProfile:
    """The trapezoid ``phi_{R_alpha - 1}``, supported exactly on ``[0, R_alpha]``."""
    return TrapezoidProfile(alpha, propagule_radius(k, sigma, alpha, geom) - 1.0)


def buffer_condition(epsilon, dim: int):
    """Left side of the buffer-ring condition for the smoothstep ramp:
    sup|phi''| / eps^2 + (d - 1) sup|phi'| / eps."""
    return SMOOTHSTEP_MAX_CURVATURE / epsilon**2 + (dim - 1) * SMOOTHSTEP_MAX_SLOPE / epsilon


def epsilon_star(alpha: float, alpha_bar: float, R_alpha: float, mu: float, sigma: float,
                 geom: Geometry) -> float:
    """Smallest relative ring width eps for which ``buffer_condition(eps)`` is at most
    R_alpha^2 mu (1 - alpha_bar) / (sigma alpha_bar).

    Closed form 8 / (sqrt((d-1)^2 + 32 K / 3) - d + 1), evaluated in a
    cancellation-free arrangement.
    """
    if not 0.0 < alpha < alpha_bar < 1.0:
        raise OrderingError(f"need 0 < alpha < alpha_bar < 1, got {alpha}, {alpha_bar}")
    if not (R_alpha > 0.0 and mu > 0.0 and sigma > 0.0):
        raise ModelError("R_alpha, mu and sigma must be positive")
    K = R_alpha**2 * mu * (1.0 - alpha_bar) / (sigma * alpha_bar)
    a = geom.dim - 1
    return 3.0 * (math.sqrt(a * a + 32.0 * K / 3.0) + a) / (4.0 * K)


def _energy_terms(values: np.ndarray, k: Kinetics, sigma: float, geom: Geometry, grid: Grid):
    u = np.asarray(values, dtype=float)
    if u.shape != (grid.n,):
        raise ModelError(f"field has shape {u.shape}, grid has {grid.n} nodes")
    w = fv_weights(grid, geom)
    grad = np.diff(u) / grid.h
    dirichlet = 0.5 * sigma * float(np.sum(w.faces * grad * grad) * grid.h)
    potential = float(np.sum(w.volumes * k.potential(np.clip(u, 0.0, 1.0))))
    edge = u[-1:] if geom.radial else u[[0, -1]]
    truncated = bool(np.any(np.abs(edge) > 1e-9))
    return dirichlet - potential, truncated


def energy(field, k: Kinetics, sigma: float, geom: Geometry, grid: Grid) -> float:
    """E[p] = int (sigma/2 |grad p|^2 - F(p)) dx on the grid.

    ``field`` is either an array of nodal values or a :class:`RadialProfile`.
    In radial mode the integral carries the weight |S_{d-1}| r^{d-1}. Warns with
    :class:`SupportTruncated` when the field does not vanish at the grid edge.
    """
    values = field.sample(grid, geom) if isinstance(field, RadialProfile) else field
    value, truncated = _energy_terms(values, k, sigma, geom, grid)
    if truncated:
        warnings.warn("field is nonzero at the grid boundary; energy covers the truncated domain",
                      SupportTruncated, stacklevel=2)
    return value


def trapezoid_energy_bound(k: Kinetics, sigma: float, alpha: float, R: float, geom: Geometry) -> float:
    """Upper bound on d E[phi_R] / (R^d |S_{d-1}|):
    -F(alpha) + (sigma alpha^2 / 2 - F(theta)) ((1 + 1/R)^d - 1)."""
    d = geom.dim
    return -k.potential(alpha) + (0.5 * sigma * alpha**2 - k.potential(k.theta)) * ((1.0 + 1.0 / R) ** d - 1.0)
