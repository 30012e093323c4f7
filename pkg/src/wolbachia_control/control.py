"""Feedback release law and sufficient-condition planners.

The feedback ``g(u) = (mu (1 - u) - f(u))_+`` is applied on a bounded release region
for a finite horizon ``T``. A :class:`Plan` collects a choice of ``(alpha, alpha_bar)``
with the gain, horizon and release radius that guarantee invasion.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError, DomainTooSmall, ModelError, OrderingError
from .grid import Geometry, Grid
from .kinetics import Kinetics
from .propagule import buffer_condition, epsilon_star, propagule_radius

__all__ = [
    "ControlConfig",
    "Plan",
    "feedback",
    "min_control_time",
    "default_alphas",
    "plan_from_gain",
    "plan_from_time",
    "plan_from_domain",
]

GAIN_RULES = ("conservative", "reduced")


@dataclass(frozen=True)
class ControlConfig:
    """Gain ``mu``, horizon ``T`` and release region.

    ``region`` is an interval ``(a, b)`` in cartesian-1d mode and a ball radius in
    radial mode.
    """

    mu: float
    horizon: float
    region: tuple[float, float] | float

    def __post_init__(self):
        if not self.mu > 0.0:
            raise ModelError("mu must be positive")
        if not self.horizon > 0.0:
            raise ModelError("horizon must be positive")
        if isinstance(self.region, (tuple, list)):
            a, b = self.region
            if not (np.isfinite(a) and np.isfinite(b) and a <= b):
                raise ModelError(f"release interval {self.region} is empty or unbounded")
            object.__setattr__(self, "region", (float(a), float(b)))
        elif not (np.isfinite(self.region) and self.region > 0.0):
            raise ModelError("release radius must be positive and finite")

    def mask(self, grid: Grid, geom: Geometry) -> np.ndarray:
        """Nodes lying in the closed release region."""
        x = grid.nodes
        if geom.radial:
            if isinstance(self.region, tuple):
                raise ModelError("radial geometry needs a release radius, not an interval")
            return x <= self.region
        if isinstance(self.region, tuple):
            a, b = self.region
            return (x >= a) & (x <= b)
        return np.abs(x) <= self.region

    def active(self, t: float) -> bool:
        return t < self.horizon


def feedback(k: Kinetics, mu: float, u):
    """g(u) = max(mu (1 - u) - f(u), 0), without the region indicator or time gate."""
    arr = np.asarray(u, dtype=float)
    if np.any(arr < 0.0) or np.any(arr > 1.0) or np.any(np.isnan(arr)):
        raise DomainError("feedback is defined for u in [0, 1]")
    out = np.maximum(mu * (1.0 - arr) - k.rate(arr), 0.0)
    return float(out) if out.ndim == 0 else out


def _check_pair(alpha: float, alpha_bar: float) -> None:
    if not 0.0 < alpha < 1.0 or not 0.0 < alpha_bar < 1.0:
        raise DomainError("alpha and alpha_bar must lie in (0, 1)")
    if alpha >= alpha_bar:
        raise OrderingError(f"need alpha < alpha_bar, got {alpha} >= {alpha_bar}")


def min_control_time(mu: float, alpha: float, alpha_bar: float) -> float:
    """Shortest horizon, (1/mu) ln(alpha_bar / (alpha_bar - alpha))."""
    _check_pair(alpha, alpha_bar)
    if not mu > 0.0:
        raise ModelError("mu must be positive")
    return math.log(alpha_bar / (alpha_bar - alpha)) / mu


def default_alphas(k: Kinetics) -> tuple[float, float]:
    alpha = k.theta_c + 0.25 * (1.0 - k.theta_c)
    return alpha, alpha + 0.5 * (1.0 - alpha)


@dataclass(frozen=True)
class Plan:
    alpha: float
    alpha_bar: float
    R_alpha: float
    epsilon: float
    epsilon_star: float
    mu: float
    T_min: float
    radius: float
    dim: int
    sigma: float
    gain_rule: str = "given"

    @property
    def gain_budget(self) -> float:
        """R_alpha^2 mu (1 - alpha_bar) / (sigma alpha_bar)."""
        return self.R_alpha**2 * self.mu * (1.0 - self.alpha_bar) / (self.sigma * self.alpha_bar)

    def condition_residual(self) -> float:
        """Relative slack of the buffer-ring condition; nonnegative when it holds."""
        budget = self.gain_budget
        return (budget - buffer_condition(self.epsilon, self.dim)) / budget

    def is_sufficient(self, tol: float = 1e-9) -> bool:
        time_ok = self.T_min >= min_control_time(self.mu, self.alpha, self.alpha_bar) * (1.0 - tol)
        return time_ok and self.condition_residual() >= -tol

    def control_config(self, geom: Geometry) -> ControlConfig:
        region = self.radius if geom.radial else (-self.radius, self.radius)
        return ControlConfig(self.mu, self.T_min, region)

    def to_dict(self) -> dict:
        return asdict(self)


def _resolve_alphas(k: Kinetics, alpha, alpha_bar) -> tuple[float, float]:
    a0, b0 = default_alphas(k)
    alpha = a0 if alpha is None else float(alpha)
    if alpha_bar is None:
        alpha_bar = alpha + 0.5 * (1.0 - alpha)
    _check_pair(alpha, alpha_bar)
    return alpha, float(alpha_bar)


def plan_from_gain(k: Kinetics, sigma: float, geom: Geometry, mu: float,
                   alpha: float | None = None, alpha_bar: float | None = None) -> Plan:
    """Horizon and release radius sufficient for invasion with gain ``mu``."""
    alpha, alpha_bar = _resolve_alphas(k, alpha, alpha_bar)
    R = propagule_radius(k, sigma, alpha, geom)
    eps = epsilon_star(alpha, alpha_bar, R, mu, sigma, geom)
    return Plan(alpha, alpha_bar, R, eps, eps, float(mu), min_control_time(mu, alpha, alpha_bar),
                (1.0 + eps) * R, geom.dim, float(sigma))


def plan_from_time(k: Kinetics, sigma: float, geom: Geometry, T: float,
                   alpha: float | None = None, alpha_bar: float | None = None) -> Plan:
    """Gain making ``T`` the minimal horizon, then as :func:`plan_from_gain`."""
    if not T > 0.0:
        raise ModelError("T must be positive")
    alpha, alpha_bar = _resolve_alphas(k, alpha, alpha_bar)
    mu = math.log(alpha_bar / (alpha_bar - alpha)) / T
    return plan_from_gain(k, sigma, geom, mu, alpha, alpha_bar)


def plan_from_domain(k: Kinetics, sigma: float, geom: Geometry, radius_available: float,
                     alpha: float | None = None, alpha_bar: float | None = None,
                     gain_rule: str = "conservative") -> Plan:
    """Gain and horizon for a release ball of given radius.

    ``gain_rule="reduced"`` uses the bound 2/eps^2 + (d-1)/(2 eps) with smaller ramp
    constants; ``"conservative"`` takes the maximum of that and the
    smoothstep buffer condition, so the resulting plan always satisfies the latter.
    """
    if gain_rule not in GAIN_RULES:
        raise ModelError(f"gain_rule must be one of {GAIN_RULES}")
    alpha, alpha_bar = _resolve_alphas(k, alpha, alpha_bar)
    R = propagule_radius(k, sigma, alpha, geom)
    if not radius_available > R:
        raise DomainTooSmall(f"radius {radius_available} does not exceed R_alpha = {R}")
    eps = radius_available / R - 1.0
    d = geom.dim
    bound = 2.0 / eps**2 + (d - 1) / (2.0 * eps)
    if gain_rule == "conservative":
        bound = max(bound, buffer_condition(eps, d))
    mu = sigma * alpha_bar / ((1.0 - alpha_bar) * R**2) * bound
    eps_star = epsilon_star(alpha, alpha_bar, R, mu, sigma, geom)
    return Plan(alpha, alpha_bar, R, eps, eps_star, mu, min_control_time(mu, alpha, alpha_bar),
                float(radius_available), d, float(sigma), gain_rule)
