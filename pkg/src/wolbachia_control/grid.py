"""Uniform grids, geometry selector and the finite-volume weights shared by solver and energy."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ModelError

CARTESIAN = "cartesian-1d"
RADIAL = "radial"


@dataclass(frozen=True)
class Geometry:
    """Space dimension and discretisation mode.

    ``cartesian-1d`` works on an interval of the real line; ``radial`` treats radially
    symmetric fields in ``dim`` dimensions on ``[0, r_max]``.
    """

    dim: int = 1
    mode: str = CARTESIAN

    def __post_init__(self):
        if self.mode not in (CARTESIAN, RADIAL):
            raise ModelError(f"unknown geometry mode {self.mode!r}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ModelError("dim must be a positive integer")
        if self.mode == CARTESIAN and self.dim != 1:
            raise ModelError("cartesian-1d mode requires dim = 1")

    @property
    def radial(self) -> bool:
        return self.mode == RADIAL

    @property
    def sphere_area(self) -> float:
        """Measure of the unit sphere in R^dim (2 points when dim = 1)."""
        d = self.dim
        return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if self.n < 3:
            raise ModelError("grid needs at least 3 nodes")
        if not self.x_max > self.x_min:
            raise ModelError("grid needs x_max > x_min")

    @classmethod
    def from_spacing(cls, x_min: float, x_max: float, h: float) -> "Grid":
        n = int(round((x_max - x_min) / h)) + 1
        return cls(float(x_min), float(x_max), n)

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n)

    def check_geometry(self, geom: Geometry) -> None:
        if geom.radial and self.x_min != 0.0:
            raise ModelError("radial grids must start at r = 0")


@dataclass
class Field:
    values: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.t < 0:
            raise ModelError("field time stamp must be nonnegative")
        if np.any(self.values < 0.0) or np.any(self.values > 1.0):
            raise ModelError("field values must lie in [0, 1]")


@dataclass(frozen=True)
class FVWeights:
    """Dual-cell volumes and face areas (``sphere_area`` factor included)."""

    volumes: np.ndarray
    faces: np.ndarray


def fv_weights(grid: Grid, geom: Geometry) -> FVWeights:
    h = grid.h
    if not geom.radial:
        vol = np.full(grid.n, h)
        vol[[0, -1]] = 0.5 * h
        return FVWeights(vol, np.ones(grid.n - 1))
    grid.check_geometry(geom)
    d = geom.dim
    r = grid.nodes
    half = np.clip(np.concatenate([[0.0], 0.5 * (r[1:] + r[:-1]), [r[-1]]]), 0.0, r[-1])
    vol = (half[1:] ** d - half[:-1] ** d) / d
    faces = half[1:-1] ** (d - 1)
    s = geom.sphere_area
    return FVWeights(s * vol, s * faces)
