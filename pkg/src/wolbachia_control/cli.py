"""Command-line front end.

Every subcommand reads an optional JSON config (``--config``), applies flag overrides
and writes plot-ready CSV/JSON files to the output directory. Precedence is
flag > ``--set`` > file > default. ``summary.json`` always carries the fully resolved config.
"""

from __future__ import annotations

import argparse
import copy
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .analysis import Scenario, threshold_search, wave_speed
from .control import ControlConfig, default_alphas, plan_from_domain, plan_from_gain, plan_from_time
from .errors import ConfigError, ModelError, NotInvadable, ThresholdError
from .grid import Geometry, Grid
from .kinetics import BiologicalParams, CubicKinetics, make_wolbachia_kinetics
from .propagule import energy, propagule_radius, trapezoid_energy_bound, trapezoid_profile
from .solver import SimResult, SolverConfig, simulate

KINDS = ("simulate", "plan", "threshold", "sweep", "energy", "figures")

DEFAULTS: dict = {
    "kind": "simulate",
    "params": {"s_f": 0.1, "s_h": 0.3, "delta": 1.0, "death_rate": 1.0, "sigma": 1.0},
    "kinetics": {"model": "wolbachia", "theta": None, "scale": 1.0},
    "geometry": {"mode": "cartesian-1d", "dim": 1},
    "grid": {"x_min": None, "x_max": 20.0, "h": 0.05},
    "solver": {"dt": 0.05, "t_max": 50.0, "snapshot_stride": 20, "boundary": "neumann"},
    "control": {"enabled": True, "mu": 0.5, "horizon": 10.0, "omega": [-1.0, 1.0]},
    "initial": {"kind": "zero", "value": None, "alpha": None, "R": None},
    "plan": {"mode": "gain", "mu": 0.5, "T": None, "radius": None, "alpha": None, "alpha_bar": None,
             "gain_rule": "conservative"},
    "threshold": {"axis": "omega-halfwidth", "lo": 0.5, "hi": 1.0, "tol": 0.01, "extensions": 3},
    "sweep": {"axis": "mu", "values": [0.15, 0.5], "workers": 1},
    "energy": {"alpha": None, "R": None},
    "output": {"dir": "out", "record_control": True},
}

# (mu, half-width of the release interval) for the four reference release scenarios, T = 10
FIGURES = {"fig1": (0.5, 1.0), "fig2": (0.5, 0.5), "fig3": (0.15, 1.0), "fig5": (0.15, 2.0)}


# -- configuration ------------------------------------------------------------


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(where, "unknown key")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(where, "expected an object")
            out[key] = _merge(base[key], value, where + ".")
        else:
            out[key] = value
    return out


def _set_path(cfg: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = cfg
    for i, key in enumerate(keys):
        if not isinstance(node, dict) or key not in node:
            raise ConfigError(".".join(keys[: i + 1]), "unknown key")
        if i == len(keys) - 1:
            node[key] = value
        else:
            node = node[key]


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def resolve_config(path: str | None = None, sets: list[str] = (), *, kind: str | None = None,
                   out: str | None = None, mu: float | None = None, horizon: float | None = None,
                   omega: list[float] | None = None) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("config", str(exc)) from exc
        if not isinstance(data, dict):
            raise ConfigError("config", "top level must be a JSON object")
        cfg = _merge(cfg, data)
    for item in sets:
        if "=" not in item:
            raise ConfigError(item, "expected key=value")
        key, text = item.split("=", 1)
        _set_path(cfg, key.strip(), _parse_value(text))
    if kind is not None:
        cfg["kind"] = kind
    if out is not None:
        cfg["output"]["dir"] = out
    if mu is not None:
        cfg["control"]["mu"] = mu
        cfg["plan"]["mu"] = mu
    if horizon is not None:
        cfg["control"]["horizon"] = horizon
    if omega is not None:
        cfg["control"]["omega"] = list(omega)
    if cfg["kind"] not in KINDS:
        raise ConfigError("kind", f"must be one of {KINDS}")
    if cfg["grid"]["x_min"] is None:
        radial = cfg["geometry"]["mode"] == "radial"
        cfg["grid"]["x_min"] = 0.0 if radial else -float(cfg["grid"]["x_max"])
    return cfg


def _section(name: str, build):
    try:
        return build()
    except ConfigError:
        raise
    except (ModelError, TypeError, ValueError, KeyError) as exc:
        # model errors lead with the offending field name; point at it when we can
        head = str(exc).split(" ", 1)[0]
        section = DEFAULTS.get(name.split(".")[0])
        if "." not in name and isinstance(section, dict) and head in section:
            name = f"{name}.{head}"
        raise ConfigError(name, str(exc)) from exc


class Setup:
    """Domain objects built from a resolved config."""

    def __init__(self, cfg: dict):
        self.cfg = cfg
        p = cfg["params"]
        self.params = _section("params", lambda: BiologicalParams(**p))
        self.sigma = self.params.sigma
        kin = cfg["kinetics"]
        if kin["model"] == "wolbachia":
            self.kinetics = _section("params", lambda: make_wolbachia_kinetics(self.params))
        elif kin["model"] == "cubic":
            self.kinetics = _section("kinetics", lambda: CubicKinetics(float(kin["theta"]), float(kin["scale"])))
        else:
            raise ConfigError("kinetics.model", "must be 'wolbachia' or 'cubic'")
        self.geom = _section("geometry", lambda: Geometry(int(cfg["geometry"]["dim"]), cfg["geometry"]["mode"]))
        g = cfg["grid"]
        self.grid = _section("grid", lambda: Grid.from_spacing(float(g["x_min"]), float(g["x_max"]), float(g["h"])))
        _section("grid", lambda: self.grid.check_geometry(self.geom))
        s = cfg["solver"]
        self.solver = _section("solver", lambda: SolverConfig(float(s["dt"]), float(s["t_max"]),
                                                               int(s["snapshot_stride"]), s["boundary"]))
        self.control = self._control(cfg["control"])

    def _control(self, c: dict) -> ControlConfig | None:
        if not c["enabled"]:
            return None

        def build():
            omega = c["omega"]
            if self.geom.radial:
                region = float(omega if np.isscalar(omega) else omega[-1])
            else:
                region = (float(omega[0]), float(omega[1]))
            return ControlConfig(float(c["mu"]), float(c["horizon"]), region)

        return _section("control", build)

    def alpha(self, value) -> float:
        return default_alphas(self.kinetics)[0] if value is None else float(value)

    def initial(self):
        ini = self.cfg["initial"]
        kind = ini["kind"]
        if kind == "zero":
            return None
        if kind == "constant":
            return _section("initial.value", lambda: float(ini["value"]))
        if kind == "trapezoid":
            return _section("initial", lambda: trapezoid_profile(self.alpha(ini["alpha"]), float(ini["R"])))
        if kind == "propagule":
            def build():
                a = self.alpha(ini["alpha"])
                return trapezoid_profile(a, propagule_radius(self.kinetics, self.sigma, a, self.geom) - 1.0)
            return _section("initial", build)
        raise ConfigError("initial.kind", "must be zero, constant, trapezoid or propagule")

    def thresholds(self) -> dict:
        """theta, theta_c and the (alpha, alpha_bar) pair a plan would use; None when not invadable."""
        out = {"theta": self.kinetics.theta, "theta_c": None, "alpha": None, "alpha_bar": None}
        try:
            out["theta_c"] = self.kinetics.theta_c
        except NotInvadable:
            return out
        p = self.cfg["plan"]
        alpha = self.alpha(p["alpha"])
        out["alpha"] = alpha
        out["alpha_bar"] = alpha + 0.5 * (1.0 - alpha) if p["alpha_bar"] is None else float(p["alpha_bar"])
        return out


# -- output -------------------------------------------------------------------


def _fmt(v: float) -> str:
    return f"{v:.9g}"


def emit_snapshots(result: SimResult, path, *, which: str = "u") -> Path:
    """CSV with header ``x,t0,t1,...`` and one row per grid node (9 significant digits)."""
    data = result.snapshots if which == "u" else result.control
    if data is None or len(result.times) == 0:
        raise ValueError(f"result has no {which!r} snapshots")
    path = Path(path)
    lines = [",".join(["x"] + [_fmt(t) for t in result.times])]
    for i, x in enumerate(result.grid.nodes):
        lines.append(",".join([_fmt(x)] + [_fmt(v) for v in data[:, i]]))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_snapshots(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of :func:`emit_snapshots`: (x, times, values[time, node])."""
    rows = Path(path).read_text().strip().splitlines()
    times = np.array([float(v) for v in rows[0].split(",")[1:]])
    table = np.array([[float(v) for v in row.split(",")] for row in rows[1:]])
    return table[:, 0], times, table[:, 1:].T


def _write_series(path: Path, header: str, rows) -> None:
    lines = [header] + [",".join(_fmt(v) if np.isfinite(v) else "" for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _speed(result: SimResult, control: ControlConfig | None) -> float | None:
    after = control.horizon if control is not None else 0.0
    window = result.times[-1] - after
    try:
        return wave_speed(result.front, window, after=after)
    except ModelError:
        return None


def _write_run(out: Path, result: SimResult, setup: Setup, control, extra: dict | None = None) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    emit_snapshots(result, out / "snapshots.csv")
    if result.control is not None:
        emit_snapshots(result, out / "control.csv", which="control")
    _write_series(out / "front.csv", "time,position", result.front.as_array())
    _write_series(out / "energy.csv", "time,E", result.energy)
    summary = {
        "verdict": result.verdict,
        "front_speed": _speed(result, control),
        "diagnostics": result.diagnostics,
        "kinetics": setup.thresholds(),
        "config": setup.cfg,
    }
    if extra:
        summary.update(extra)
    _write_json(out / "summary.json", summary)
    return summary


# -- experiment kinds -----------------------------------------------------------


def run_simulate(setup: Setup, out: Path) -> dict:
    record = bool(setup.cfg["output"]["record_control"]) and setup.control is not None
    result = simulate(setup.kinetics, setup.control, setup.geom, setup.grid, setup.solver, setup.initial(),
                      sigma=setup.sigma, record_control=record)
    return _write_run(out, result, setup, setup.control)


def run_plan(setup: Setup, out: Path) -> dict:
    p = setup.cfg["plan"]
    args = (setup.kinetics, setup.sigma, setup.geom)
    mode = p["mode"]
    if mode == "gain":
        plan = _section("plan", lambda: plan_from_gain(*args, float(p["mu"]), p["alpha"], p["alpha_bar"]))
    elif mode == "time":
        plan = _section("plan", lambda: plan_from_time(*args, float(p["T"]), p["alpha"], p["alpha_bar"]))
    elif mode == "domain":
        plan = _section("plan", lambda: plan_from_domain(*args, float(p["radius"]), p["alpha"], p["alpha_bar"],
                                                         gain_rule=p["gain_rule"]))
    else:
        raise ConfigError("plan.mode", "must be gain, time or domain")
    out.mkdir(parents=True, exist_ok=True)
    summary = {**setup.thresholds(), **plan.to_dict(), "sufficient": plan.is_sufficient(),
               "condition_residual": plan.condition_residual(), "config": setup.cfg}
    _write_json(out / "summary.json", summary)
    return summary


def _scenario(setup: Setup) -> Scenario:
    if setup.control is None:
        raise ConfigError("control.enabled", "threshold and sweep runs need a control")
    return Scenario(setup.kinetics, setup.sigma, setup.geom, setup.grid, setup.solver, setup.control,
                    setup.initial())


def run_threshold(setup: Setup, out: Path) -> dict:
    t = setup.cfg["threshold"]
    result = threshold_search(_scenario(setup), t["axis"], float(t["lo"]), float(t["hi"]), float(t["tol"]),
                              int(t["extensions"]))
    out.mkdir(parents=True, exist_ok=True)
    summary = {**result.to_dict(), "kinetics": setup.thresholds(), "config": setup.cfg}
    _write_json(out / "summary.json", summary)
    return summary


def _sweep_member(cfg: dict, axis: str, value: float, out: str) -> dict:
    setup = Setup(cfg)
    scenario = _scenario(setup).with_value(axis, value)
    result = simulate(setup.kinetics, scenario.control, setup.geom, setup.grid, setup.solver, scenario.u0,
                      sigma=setup.sigma, record_control=bool(cfg["output"]["record_control"]))
    summary = _write_run(Path(out), result, setup, scenario.control, {"axis": axis, "value": value})
    return {"value": value, "verdict": summary["verdict"], "front_speed": summary["front_speed"]}


def run_sweep(setup: Setup, out: Path) -> dict:
    sw = setup.cfg["sweep"]
    axis = sw["axis"]
    values = [float(v) for v in sw["values"]]
    _scenario(setup).with_value(axis, values[0])  # validates the axis before spawning work
    dirs = [str(out / f"{axis}={_fmt(v)}") for v in values]
    jobs = [(setup.cfg, axis, v, d) for v, d in zip(values, dirs)]
    workers = int(sw["workers"])
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_member, *zip(*jobs)))
    else:
        rows = [_sweep_member(*job) for job in jobs]
    summary = {"axis": axis, "runs": rows, "kinetics": setup.thresholds(), "config": setup.cfg}
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "summary.json", summary)
    return summary


def run_energy(setup: Setup, out: Path) -> dict:
    e = setup.cfg["energy"]
    k, sigma, geom = setup.kinetics, setup.sigma, setup.geom
    alpha = _section("energy.alpha", lambda: setup.alpha(e["alpha"]))
    R_alpha = _section("energy.alpha", lambda: propagule_radius(k, sigma, alpha, geom))
    R = R_alpha - 1.0 if e["R"] is None else float(e["R"])
    profile = _section("energy.R", lambda: trapezoid_profile(alpha, R))
    E0 = energy(profile, k, sigma, geom, setup.grid)
    result = simulate(k, None, geom, setup.grid, setup.solver, profile, sigma=sigma)
    steps = np.diff(result.energy[:, 1])
    slack = 1e-6 * max(abs(result.energy[0, 1]), 1e-300)
    extra = {
        "alpha": alpha, "R": R, "R_alpha": R_alpha, "E0": E0,
        "bound": trapezoid_energy_bound(k, sigma, alpha, R, geom),
        "energy_nonincreasing": bool(np.all(steps <= slack)),
    }
    return _write_run(out, result, setup, None, extra)


def run_figures(setup: Setup, out: Path) -> dict:
    if setup.geom.radial:
        raise ConfigError("geometry.mode", "figures are one-dimensional")
    horizon = float(setup.cfg["control"]["horizon"])
    verdicts = {}
    for name, (mu, half) in FIGURES.items():
        control = ControlConfig(mu, horizon, (-half, half))
        result = simulate(setup.kinetics, control, setup.geom, setup.grid, setup.solver, setup.initial(),
                          sigma=setup.sigma, record_control=True)
        summary = _write_run(out / name, result, setup, control, {"mu": mu, "omega": [-half, half]})
        verdicts[name] = summary["verdict"]
    summary = {"verdicts": verdicts, "kinetics": setup.thresholds(), "config": setup.cfg}
    _write_json(out / "summary.json", summary)
    return summary


RUNNERS = {
    "simulate": run_simulate,
    "plan": run_plan,
    "threshold": run_threshold,
    "sweep": run_sweep,
    "energy": run_energy,
    "figures": run_figures,
}


def run(cfg: dict) -> dict:
    setup = Setup(cfg)
    out = Path(cfg["output"]["dir"])
    return RUNNERS[cfg["kind"]](setup, out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wolbachia-control", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--mu", type=float, help="feedback gain")
        p.add_argument("--horizon", type=float, help="control horizon T")
        p.add_argument("--omega", type=float, nargs=2, metavar=("A", "B"), help="release interval")
        p.add_argument("--set", dest="sets", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config field, e.g. params.sigma=0.3")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args.config, args.sets, kind=args.kind, out=args.out, mu=args.mu,
                             horizon=args.horizon, omega=args.omega)
        summary = run(cfg)
    except ConfigError as exc:
        print(json.dumps({"error": "ConfigError", "field": exc.field, "message": exc.message}), file=sys.stderr)
        return 2
    except (ModelError, ThresholdError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    brief = {k: summary[k] for k in ("verdict", "verdicts", "critical", "T_min", "radius") if k in summary}
    print(json.dumps(brief, default=_jsonable))
    return 0


if __name__ == "__main__":
    sys.exit(main())
