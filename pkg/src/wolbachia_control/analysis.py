"""Post-processing of simulation results: fronts, wave speed, thresholds, energy, ordering."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING

import numpy as np

from .errors import BadBracket, GridMismatch, InsufficientData, ModelError, NonMonotone, UndecidedVerdict

if TYPE_CHECKING:
    from .control import ControlConfig
    from .grid import Geometry, Grid
    from .kinetics import Kinetics
    from .solver import SimResult, SolverConfig

__all__ = [
    "FrontTrace",
    "ThresholdResult",
    "Scenario",
    "ComparisonReport",
    "front_position",
    "wave_speed",
    "threshold_search",
    "energy_trace",
    "compare_runs",
]

AXES = ("mu", "omega-halfwidth", "horizon")


@dataclass
class FrontTrace:
    """Front positions over time; NaN where the level is not crossed."""

    times: np.ndarray
    positions: np.ndarray

    def as_array(self) -> np.ndarray:
        return np.column_stack([self.times, self.positions])


def front_position(values, grid: "Grid", level: float = 0.5, *, radial: bool = False) -> float | None:
    """Outermost point where the field drops below ``level``, linearly interpolated.

    Returns ``None`` when the field never crosses ``level`` from above.
    ``radial`` is accepted for symmetry with the geometry; the search runs
    towards increasing coordinate in both modes.
    """
    u = np.asarray(getattr(values, "values", values), dtype=float)
    down = np.flatnonzero((u[:-1] >= level) & (u[1:] < level))
    if down.size == 0:
        return None
    i = down[-1]
    x = grid.nodes
    frac = (u[i] - level) / (u[i] - u[i + 1])
    return float(x[i] + frac * (x[i + 1] - x[i]))


def wave_speed(trace: FrontTrace, window: float, *, after: float = -np.inf, min_points: int = 10) -> float:
    """Least-squares slope of front position over the trailing ``window`` of time.

    Points before ``after`` (typically the end of the control) are ignored.
    """
    t = np.asarray(trace.times, dtype=float)
    x = np.asarray(trace.positions, dtype=float)
    ok = np.isfinite(x) & (t >= after)
    if ok.any():
        ok &= t >= t[ok].max() - window
    if ok.sum() < min_points:
        raise InsufficientData(f"{int(ok.sum())} front points in window, need {min_points}")
    slope, _ = np.polyfit(t[ok], x[ok], 1)
    return float(slope)


@dataclass(frozen=True)
class Scenario:
    """Everything needed to run one controlled simulation; varied along one axis by bisection."""

    kinetics: "Kinetics"
    sigma: float
    geom: "Geometry"
    grid: "Grid"
    config: "SolverConfig"
    control: "ControlConfig"
    u0: object = None

    def with_value(self, axis: str, value: float) -> "Scenario":
        c = self.control
        if axis == "mu":
            c = replace(c, mu=float(value))
        elif axis == "horizon":
            c = replace(c, horizon=float(value))
        elif axis == "omega-halfwidth":
            c = replace(c, region=float(value) if self.geom.radial else (-float(value), float(value)))
        else:
            raise ModelError(f"unknown axis {axis!r}; expected one of {AXES}")
        return replace(self, control=c)

    def run(self, **kwargs) -> "SimResult":
        from .solver import simulate

        return simulate(self.kinetics, self.control, self.geom, self.grid, self.config, self.u0,
                        sigma=self.sigma, **kwargs)

    def decide(self, extensions: int = 3) -> tuple[str, float]:
        """Verdict, doubling ``t_max`` up to ``extensions`` times while undecided."""
        scenario = self
        for _ in range(extensions + 1):
            verdict = scenario.run().verdict
            if verdict != "undecided":
                break
            scenario = replace(scenario, config=replace(scenario.config, t_max=2.0 * scenario.config.t_max))
        return verdict, scenario.config.t_max


@dataclass
class ThresholdResult:
    axis: str
    lower: float
    upper: float
    critical: float
    tol: float
    evaluations: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"axis": self.axis, "lower": self.lower, "upper": self.upper, "critical": self.critical,
                "tol": self.tol, "evaluations": [list(e) for e in self.evaluations]}


def threshold_search(scenario: Scenario, axis: str, lo: float, hi: float, tol: float = 1e-2,
                     extensions: int = 3) -> ThresholdResult:
    """Bisect on ``axis`` between an extinction value ``lo`` and an invasion value ``hi``.

    Near the threshold the dynamics slow down; an undecided probe is rerun with a
    doubled horizon (at most ``extensions`` times) before giving up.
    """
    if axis not in AXES:
        raise ModelError(f"unknown axis {axis!r}; expected one of {AXES}")
    if not lo < hi:
        raise BadBracket(f"need lo < hi, got {lo}, {hi}")
    evaluations = []

    def verdict(v):
        out, t_max = scenario.with_value(axis, v).decide(extensions)
        evaluations.append((float(v), out, t_max))
        return out

    if (v := verdict(lo)) != "extinction":
        raise BadBracket(f"{axis} = {lo} gives {v}, expected extinction")
    if (v := verdict(hi)) != "invasion":
        raise BadBracket(f"{axis} = {hi} gives {v}, expected invasion")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        v = verdict(mid)
        if v == "invasion":
            hi = mid
        elif v == "extinction":
            lo = mid
        else:
            raise UndecidedVerdict(f"{axis} = {mid} is undecided; lengthen t_max")
    ordered = sorted(evaluations)
    first_invasion = next((i for i, e in enumerate(ordered) if e[1] == "invasion"), len(ordered))
    if any(e[1] != "invasion" for e in ordered[first_invasion:]):
        raise NonMonotone(f"verdicts along {axis} are not monotone: {ordered}")
    return ThresholdResult(axis, lo, hi, 0.5 * (lo + hi), tol, evaluations)


def energy_trace(result: "SimResult", k: "Kinetics", sigma: float, geom: "Geometry") -> np.ndarray:
    """(time, E) for every snapshot of ``result``."""
    from .propagule import _energy_terms

    out = np.empty((result.times.size, 2))
    for i, (t, u) in enumerate(zip(result.times, result.snapshots)):
        out[i] = t, _energy_terms(u, k, sigma, geom, result.grid)[0]
    return out


@dataclass
class ComparisonReport:
    ok: bool
    max_violation: float
    time: float | None
    position: float | None

    def to_dict(self) -> dict:
        return {"ok": self.ok, "max_violation": self.max_violation, "time": self.time, "position": self.position}


def compare_runs(a: "SimResult", b: "SimResult", tol: float = 1e-8) -> ComparisonReport:
    """Check ``u_a <= u_b + tol`` at every node of every snapshot."""
    if a.grid != b.grid or a.geom != b.geom:
        raise GridMismatch("runs use different grids or geometries")
    if a.times.shape != b.times.shape or not np.allclose(a.times, b.times, rtol=0, atol=1e-12):
        raise GridMismatch("runs have different snapshot times")
    excess = a.snapshots - b.snapshots
    j, i = np.unravel_index(np.argmax(excess), excess.shape)
    worst = float(excess[j, i])
    if worst <= 0.0:
        return ComparisonReport(True, max(worst, 0.0), None, None)
    return ComparisonReport(worst <= tol, worst, float(a.times[j]), float(a.grid.nodes[i]))
