"""Simulation and planning tools for feedback-driven Wolbachia invasion."""

from .analysis import (
    FrontTrace,
    Scenario,
    ThresholdResult,
    compare_runs,
    energy_trace,
    front_position,
    threshold_search,
    wave_speed,
)
from .control import (
    ControlConfig,
    Plan,
    default_alphas,
    feedback,
    min_control_time,
    plan_from_domain,
    plan_from_gain,
    plan_from_time,
)
from .grid import Field, Geometry, Grid
from .kinetics import BiologicalParams, CubicKinetics, Kinetics, WolbachiaKinetics, make_wolbachia_kinetics
from .propagule import (
    PlateauProfile,
    TrapezoidProfile,
    energy,
    epsilon_star,
    plateau_profile,
    propagule_profile,
    propagule_radius,
    smoothstep,
    trapezoid_profile,
)
from .solver import SimResult, SolverConfig, classify, closed_form_subsub, simulate, simulate_linear_ball, step

__version__ = "0.1.0"
