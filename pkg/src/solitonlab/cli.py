"""Command-line front end; the only module that touches the filesystem.

Every subcommand reads one JSON config whose sections are merged over
:data:`DEFAULTS`.  Exit codes: 0 success, 1 a check failed, 2 bad input.
"""
from __future__ import annotations

import argparse
import copy
import itertools
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from . import ode_s, ode_t, special, verify
from .errors import ConfigError, HypothesisViolatedError, SolitonLabError
from .integrator import Action, EventSpec, IntegratorConfig, Trigger
from .model import AnsatzParams, Formulation, SpecialState, StateS, StateT, Trajectory, validate

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2

DEFAULTS: dict[str, Any] = {
    "params": {"lambda": 0.0, "m": 1, "q": 1, "k": 2.0},
    "initial": {"formulation": "T", "start": 0.0, "end": 1.0, "state": None},
    "shooting": {"F0": 1.0, "f2": 0.0, "eps": 1e-3, "h1": 1.0, "f0": 0.0, "horizon": 50.0},
    "integrator": {"rtol": 1e-10, "atol": 1e-12, "h0": 1e-4, "hmin": 1e-14,
                   "hmax": None, "max_steps": 10_000_000, "backend": None},
    "events": [],
    "output": {"prefix": "run"},
    "blowup": {"thresholds": [1e4, 1e5, 1e6, 1e7, 1e8], "horizon": None, "margin": 0.01},
    "transform": {"s0": 0.0},
    "sweep": {"command": "shoot", "grid": {}, "workers": None},
}

CSV_COLUMNS = {
    Formulation.T: ("t", "H", "dH", "F", "dF", "f", "df", "trL", "S", "C", "C1"),
    Formulation.S: ("s", "alpha", "dalpha", "beta", "dbeta", "phi", "dphi"),
    Formulation.SPECIAL: ("s", "x2", "y1", "y2", "ratio"),
}
STATE_TYPES = {Formulation.T: StateT, Formulation.S: StateS, Formulation.SPECIAL: SpecialState}
INTEGRATED_COLUMNS = {Formulation.T: ode_t.COLUMNS, Formulation.S: ode_s.COLUMNS,
                      Formulation.SPECIAL: special.COLUMNS}

HELP_EPILOG = """\
config sections and defaults (JSON):
  params      {"lambda": 0.0, "m": 1, "q": 1, "k": 2.0}
  initial     {"formulation": "T" | "S" | "SPECIAL", "start": 0.0, "end": 1.0,
               "state": {component: value}}  (T without state uses shooting)
  shooting    {"F0": 1.0, "f2": 0.0, "eps": 0.001, "h1": 1.0, "f0": 0.0, "horizon": 50.0}
  integrator  {"rtol": 1e-10, "atol": 1e-12, "h0": 1e-4, "hmin": 1e-14, "hmax": null,
               "max_steps": 10000000, "backend": null | "compiled" | "python"}
  events      [{"name", "component", "trigger": "sign_change" | "exceeds" | "falls_below",
                "threshold": 0.0, "action": "stop" | "record"}]
  output      {"prefix": "run"}
  blowup      {"thresholds": [1e4, ..., 1e8], "horizon": null, "margin": 0.01}
  transform   {"s0": 0.0}
  sweep       {"command": "shoot", "grid": {"section.key": [values]}, "workers": null}

exit codes: 0 ok, 1 a check failed, 2 invalid config or input
"""


# ------------------------------------------------------------------ config


def _merge(base: dict, over: dict, where: str) -> dict:
    out = copy.deepcopy(base)
    for key, value in over.items():
        path = f"{where}.{key}" if where else key
        if key not in base:
            raise ConfigError(f"field {path}: unknown key")
        if isinstance(base[key], dict) and key not in ("state", "grid"):
            if not isinstance(value, dict):
                raise ConfigError(f"field {path}: expected an object")
            out[key] = _merge(base[key], value, path)
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_config(path: Optional[str]) -> dict:
    """Read and merge a JSON config; ``None`` gives the defaults."""
    if path is None:
        return copy.deepcopy(DEFAULTS)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return _merge(DEFAULTS, raw, "")


def _num(cfg: dict, section: str, key: str, kind=float, allow_none=False):
    value = cfg[section][key]
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"field {section}.{key}: expected a number, got {value!r}")
    if kind is int:
        if int(value) != value:
            raise ConfigError(f"field {section}.{key}: expected an integer, got {value!r}")
        return int(value)
    if not math.isfinite(value):
        raise ConfigError(f"field {section}.{key}: must be finite")
    return float(value)


def params_from(cfg: dict) -> AnsatzParams:
    p = AnsatzParams(_num(cfg, "params", "lambda"), _num(cfg, "params", "m", int),
                     _num(cfg, "params", "q", int), _num(cfg, "params", "k"))
    try:
        return validate(p)
    except SolitonLabError as exc:
        raise ConfigError(f"field params.{exc}") from None


def integrator_from(cfg: dict) -> tuple[IntegratorConfig, Optional[str]]:
    ic = IntegratorConfig(
        rtol=_num(cfg, "integrator", "rtol"), atol=_num(cfg, "integrator", "atol"),
        h0=_num(cfg, "integrator", "h0"), hmin=_num(cfg, "integrator", "hmin"),
        hmax=_num(cfg, "integrator", "hmax", allow_none=True),
        max_steps=_num(cfg, "integrator", "max_steps", int),
    )
    backend = cfg["integrator"]["backend"]
    if backend not in (None, "compiled", "python"):
        raise ConfigError(f"field integrator.backend: unknown backend {backend!r}")
    return ic, backend


def shooting_from(cfg: dict) -> ode_t.ShootingConfig:
    keys = ("F0", "f2", "eps", "h1", "f0", "horizon")
    try:
        return ode_t.ShootingConfig(**{k: _num(cfg, "shooting", k) for k in keys})
    except SolitonLabError as exc:
        raise ConfigError(f"section shooting: {exc}") from None


def formulation_from(cfg: dict) -> Formulation:
    name = cfg["initial"]["formulation"]
    try:
        return Formulation[str(name).upper()]
    except KeyError:
        raise ConfigError(f"field initial.formulation: unknown formulation {name!r}") from None


def initial_state(cfg: dict, form: Formulation):
    state = cfg["initial"]["state"]
    if state is None:
        return None
    cls = STATE_TYPES[form]
    names = cls.component_names()
    if not isinstance(state, dict):
        raise ConfigError("field initial.state: expected an object")
    extra = sorted(set(state) - set(names))
    missing = [n for n in names if n not in state]
    if extra:
        raise ConfigError(f"field initial.state.{extra[0]}: not a {form.value} component")
    if missing:
        raise ConfigError(f"field initial.state.{missing[0]}: missing")
    values = []
    for n in names:
        v = state[n]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError(f"field initial.state.{n}: expected a finite number")
        values.append(float(v))
    return cls(_num(cfg, "initial", "start"), *values)


def events_from(cfg: dict, form: Formulation) -> list[EventSpec]:
    names = INTEGRATED_COLUMNS[form]
    out = []
    if not isinstance(cfg["events"], list):
        raise ConfigError("field events: expected a list")
    for i, ev in enumerate(cfg["events"]):
        where = f"events[{i}]"
        if not isinstance(ev, dict):
            raise ConfigError(f"field {where}: expected an object")
        unknown = set(ev) - {"name", "component", "trigger", "threshold", "action"}
        if unknown:
            raise ConfigError(f"field {where}.{sorted(unknown)[0]}: unknown key")
        comp = ev.get("component")
        if comp not in names:
            raise ConfigError(f"field {where}.component: {comp!r} not in {list(names)}")
        try:
            trigger = Trigger(ev.get("trigger", "sign_change"))
            action = Action(ev.get("action", "stop"))
        except ValueError as exc:
            raise ConfigError(f"field {where}: {exc}") from None
        threshold = ev.get("threshold", 0.0)
        if isinstance(threshold, bool) or not isinstance(threshold, (int, float)) \
                or not math.isfinite(threshold):
            raise ConfigError(f"field {where}.threshold: expected a finite number")
        idx = names.index(comp)
        out.append(EventSpec(str(ev.get("name", comp)), lambda t, y, _i=idx: y[_i],
                             trigger, float(threshold), action))
    return out


# ------------------------------------------------------------------ output


def csv_table(traj: Trajectory) -> tuple[tuple[str, ...], np.ndarray]:
    """Rows and header of the export table for a trajectory."""
    form = traj.formulation
    if form is Formulation.T:
        d = ode_t.diagnostics_along(traj)
        cols = [traj.t] + [traj.column(n) for n in ode_t.STATE_NAMES] + [d.trL, d.S, d.C, d.C1]
    elif form is Formulation.S:
        cols = [traj.t] + [traj.column(n) for n in ode_s.STATE_NAMES]
    else:
        y1, y2 = traj.column("y1"), traj.column("y2")
        cols = [traj.t, traj.column("x2"), y1, y2, y2 / y1]
    return CSV_COLUMNS[form], np.column_stack([np.broadcast_to(c, traj.t.shape) for c in cols])


def write_csv(path: Path, traj: Trajectory) -> None:
    header, table = csv_table(traj)
    np.savetxt(path, table, fmt="%.16e", delimiter=",", header=",".join(header), comments="")


def write_json(path: Path, record: dict) -> None:
    path.write_text(json.dumps(_jsonable(record), indent=2, sort_keys=True) + "\n")


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def summary_record(traj: Trajectory) -> dict:
    rec = {
        "formulation": traj.formulation.value,
        "termination": traj.termination.to_dict(),
        "events": [{"name": e.name, "time": e.t, "bracket": [e.t_lo, e.t_hi]} for e in traj.events],
        "samples": len(traj),
        "start": float(traj.t[0]),
        "end": float(traj.t[-1]),
        "steps": traj.meta.get("steps"),
        "drift": None,
    }
    tt = traj
    if traj.formulation is Formulation.S:
        tt = ode_s.to_t(traj)
    if tt.formulation is Formulation.T:
        d = ode_t.diagnostics_along(tt)
        rec["drift"] = {"C": ode_t.drift(d.C), "C1": ode_t.drift(d.C1),
                        "C_initial": float(d.C[0]), "C1_initial": float(d.C1[0])}
    return rec


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _prefix(cfg: dict) -> str:
    prefix = cfg["output"]["prefix"]
    if not isinstance(prefix, str) or not prefix or os.sep in prefix:
        raise ConfigError(f"field output.prefix: invalid file prefix {prefix!r}")
    return prefix


# --------------------------------------------------------------- commands


def run_trajectory(cfg: dict) -> Trajectory:
    """Integrate whatever ``cfg`` describes, in its own formulation."""
    form = formulation_from(cfg)
    ic, backend = integrator_from(cfg)
    events = events_from(cfg, form)
    state = initial_state(cfg, form)
    end = _num(cfg, "initial", "end")
    if form is Formulation.SPECIAL:
        if state is None:
            raise ConfigError("field initial.state: required for SPECIAL")
        return special.integrate_special(_num(cfg, "params", "m", int), _num(cfg, "params", "k"),
                                         state, end, ic, events, backend)
    params = params_from(cfg)
    if form is Formulation.S:
        if state is None:
            raise ConfigError("field initial.state: required for S")
        return ode_s.integrate_s(params, state, end, ic, events, backend=backend)
    if form is Formulation.T:
        if state is None:
            return ode_t.shoot(params, shooting_from(cfg), ic, events, backend)
        return ode_t.integrate_t(params, state, end, ic, events, backend=backend)
    raise ConfigError(f"field initial.formulation: cannot integrate {form.value}")


def cmd_integrate(cfg: dict, out: Path) -> int:
    traj = run_trajectory(cfg)
    prefix = _prefix(cfg)
    write_csv(out / f"{prefix}.csv", traj)
    write_json(out / f"{prefix}_summary.json", summary_record(traj))
    print(f"{traj.termination.kind.value} at {traj.t[-1]:.10g} after {len(traj)} samples")
    return EXIT_OK


def cmd_shoot(cfg: dict, out: Path) -> int:
    params = params_from(cfg)
    shoot_cfg = shooting_from(cfg)
    ic, backend = integrator_from(cfg)
    traj = ode_t.shoot(params, shoot_cfg, ic, events_from(cfg, Formulation.T), backend)
    rep = ode_t.qualitative_report(traj, t_min=1e-2, atol=ic.atol)
    prefix = _prefix(cfg)
    write_csv(out / f"{prefix}.csv", traj)
    record = {
        "shooting": cfg["shooting"],
        "params": cfg["params"],
        "step_off_residual": ode_t.step_off_residual(params, shoot_cfg),
        "qualitative": {**rep.to_dict(), "F_extremum_count_le_1": rep.F_extremum_count <= 1},
        "summary": summary_record(traj),
    }
    write_json(out / f"{prefix}_report.json", record)
    for key in ("H_increasing", "F_extremum_count", "F_growth", "trL_in_bound", "S_decreasing"):
        print(f"{key:<18} {record['qualitative'][key]}")
    return EXIT_OK


def cmd_blowup(cfg: dict, out: Path) -> int:
    if formulation_from(cfg) is not Formulation.SPECIAL:
        raise ConfigError("field initial.formulation: blowup needs SPECIAL")
    state = initial_state(cfg, Formulation.SPECIAL)
    if state is None:
        raise ConfigError("field initial.state: required for blowup")
    m, k = _num(cfg, "params", "m", int), _num(cfg, "params", "k")
    scenario = special.scenario_for(state.x2)
    failed = special.check_hypotheses(scenario, k, state.x2, state.y1, state.y2)
    if failed:
        raise HypothesisViolatedError("; ".join(failed))
    bound = (special.bound_prop_211 if scenario == "x2>1" else special.bound_prop_43)(state.x2, state.s)
    ic, backend = integrator_from(cfg)
    thresholds = cfg["blowup"]["thresholds"]
    if not (isinstance(thresholds, list) and thresholds
            and all(isinstance(v, (int, float)) and v > 0 for v in thresholds)
            and thresholds == sorted(thresholds)):
        raise ConfigError("field blowup.thresholds: expected an increasing list of positive numbers")
    horizon = _num(cfg, "blowup", "horizon", allow_none=True)
    component = "y2" if scenario == "x2>1" else "x2"
    run = special.blowup_run(m, k, state, component, horizon, ic, tuple(float(v) for v in thresholds),
                             backend)
    e1, e2 = verify.closed_form_errors(run, _num(cfg, "blowup", "margin"))
    ok = run.singular_time <= bound
    prefix = _prefix(cfg)
    write_csv(out / f"{prefix}.csv", run.trajectory)
    record = {
        "initial": {"s": state.s, "x2": state.x2, "y1": state.y1, "y2": state.y2, "m": m, "k": k},
        "scenario": scenario,
        "component": component,
        "bound": bound,
        "singular_time": run.singular_time,
        "bracket": list(run.estimate.bracket) if run.estimate else None,
        "crossings": [list(c) for c in run.estimate.crossings] if run.estimate else [],
        "time_le_bound": ok,
        "closed_form_error": {"y1": e1, "ratio": e2},
        "max_abs": run.max_abs,
        "summary": summary_record(run.trajectory),
    }
    write_json(out / f"{prefix}_report.json", record)
    print(f"singular time {run.singular_time:.10g}  bound {bound:.10g}  "
          f"{'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_transform(cfg: dict, out: Path) -> int:
    """Integrate in T or S and export both coordinate pictures."""
    traj = run_trajectory(cfg)
    if traj.formulation is Formulation.T:
        t_traj, s_traj = traj, ode_s.to_s(traj, _num(cfg, "transform", "s0"))
        back = ode_s.to_t(s_traj)
        err = float(max(np.max(np.abs(back.t - t_traj.t)),
                        np.max(np.abs(back.y[:, :6] - t_traj.y[:, :6]))))
    elif traj.formulation is Formulation.S:
        s_traj, t_traj = traj, ode_s.to_t(traj)
        back = ode_s.to_s(t_traj, float(s_traj.t[0]))
        err = float(max(np.max(np.abs(back.t - s_traj.t)),
                        np.max(np.abs(back.y[:, :6] - s_traj.y[:, :6]))))
    else:
        raise ConfigError("field initial.formulation: transform needs T or S")
    prefix = _prefix(cfg)
    write_csv(out / f"{prefix}_t.csv", t_traj)
    write_csv(out / f"{prefix}_s.csv", s_traj)
    write_json(out / f"{prefix}_summary.json",
               {"roundtrip_error": err, "summary": summary_record(traj)})
    print(f"roundtrip error {err:.3e}")
    return EXIT_OK


COMMANDS = {"integrate": cmd_integrate, "shoot": cmd_shoot, "blowup": cmd_blowup,
            "transform": cmd_transform}


def _set_path(cfg: dict, dotted: str, value) -> None:
    section, _, key = dotted.partition(".")
    if section not in cfg or not key or not isinstance(cfg[section], dict):
        raise ConfigError(f"field sweep.grid.{dotted}: not a section.key path")
    node = cfg[section]
    parts = key.split(".")
    for p in parts[:-1]:
        if not isinstance(node.get(p), dict):
            raise ConfigError(f"field sweep.grid.{dotted}: not a section.key path")
        node = node[p]
    if parts[-1] not in node and section != "initial":
        raise ConfigError(f"field sweep.grid.{dotted}: unknown key")
    node[parts[-1]] = value


def _run_point(command: str, cfg: dict, out: str) -> tuple[int, str]:
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    try:
        return COMMANDS[command](cfg, path), ""
    except SolitonLabError as exc:
        return EXIT_INPUT, f"{type(exc).__name__}: {exc}"


def cmd_sweep(cfg: dict, out: Path, workers: Optional[int] = None) -> int:
    sweep = cfg["sweep"]
    command = sweep["command"]
    if command not in COMMANDS:
        raise ConfigError(f"field sweep.command: must be one of {sorted(COMMANDS)}")
    grid = sweep["grid"]
    if not isinstance(grid, dict) or not grid:
        raise ConfigError("field sweep.grid: expected a non-empty object")
    keys = sorted(grid)
    for key in keys:
        vals = grid[key]
        if not isinstance(vals, list) or not vals or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in vals):
            raise ConfigError(f"field sweep.grid.{key}: expected a non-empty list of numbers")
    points = []
    for i, combo in enumerate(itertools.product(*(grid[k] for k in keys))):
        point_cfg = copy.deepcopy(cfg)
        for key, value in zip(keys, combo):
            _set_path(point_cfg, key, value)
        points.append((i, dict(zip(keys, combo)), point_cfg))
    workers = workers or sweep["workers"] or min(len(points), os.cpu_count() or 1)
    dirs = [str(out / f"point_{i:04d}") for i, _, _ in points]
    if workers == 1:
        results = [_run_point(command, c, d) for (_, _, c), d in zip(points, dirs)]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_point, command, c, d) for (_, _, c), d in zip(points, dirs)]
            results = [f.result() for f in futures]
    index = {
        "command": command,
        "keys": keys,
        "points": [
            {"index": i, "values": values, "dir": Path(d).name, "exit_code": code, "error": msg}
            for (i, values, _), d, (code, msg) in zip(points, dirs, results)
        ],
    }
    write_json(out / "index.json", index)
    codes = [code for code, _ in results]
    print(f"{len(points)} points, {codes.count(EXIT_OK)} ok")
    return max(codes)


def cmd_verify(cfg: dict, tol: Optional[float]) -> int:
    ic, _ = integrator_from(cfg)
    results = verify.run_checks(ic, tol)
    verify.format_table(results)
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"{len(failed)} failed: {', '.join(failed)}")
        return EXIT_FAIL
    return EXIT_OK


# -------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="solitonlab", description="Gradient Ricci soliton ODE laboratory.",
        epilog=HELP_EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("verify", "run the built-in self-check suites"),
                       ("integrate", "integrate one trajectory and export CSV + summary"),
                       ("blowup", "reduced-system blow-up run against its upper bound"),
                       ("shoot", "step off the singular orbit and report trajectory properties"),
                       ("transform", "export a trajectory in both t and s coordinates"),
                       ("sweep", "run a command over a parameter grid")):
        p = sub.add_parser(name, help=text, epilog=HELP_EPILOG,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("--config", metavar="PATH", help="JSON config file")
        p.add_argument("--out", metavar="DIR", default="out", help="output directory (default: out)")
        p.add_argument("--rtol", type=float, help="override integrator.rtol")
        p.add_argument("--atol", type=float, help="override integrator.atol")
        p.add_argument("--seedless", action="store_true",
                       help="accepted for compatibility; every computation is deterministic")
        if name == "verify":
            p.add_argument("--tol", type=float, help="replace every check tolerance")
        if name == "sweep":
            p.add_argument("--workers", type=int, help="parallel grid points (default: CPU count)")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        for key in ("rtol", "atol"):
            if getattr(args, key) is not None:
                cfg["integrator"][key] = getattr(args, key)
        if args.command == "verify":
            return cmd_verify(cfg, args.tol)
        out = _out_dir(args)
        if args.command == "sweep":
            return cmd_sweep(cfg, out, args.workers)
        return COMMANDS[args.command](cfg, out)
    except HypothesisViolatedError as exc:
        print(f"HYPOTHESIS_VIOLATED: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolitonLabError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
