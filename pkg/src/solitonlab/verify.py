"""Self-check suites run by ``solitonlab verify``.

Each check returns a :class:`CheckResult` holding the worst error found and
the tolerance it is judged against.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import ode_s, ode_t, oracles, special
from .integrator import IntegratorConfig
from .model import AnsatzParams, SpecialState, StateS, validate

LN_2_OVER_SQRT3 = math.log(2 / math.sqrt(3))


@dataclass(frozen=True)
class CheckResult:
    name: str
    error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.error) and self.error <= self.tolerance)


def oracle_residual(sol: oracles.AnalyticSolution, t) -> float:
    jet = sol(np.asarray(t, dtype=float))
    r = ode_t.residual_t(sol.params, *jet.residual_args())
    return float(max(np.max(np.abs(v)) for v in r))


def oracle_grids():
    """The three exact families with 1000-point sample grids."""
    return {
        "constant": (oracles.constant_solution(2.0, 3.0, 0.0, 5.0), np.linspace(-10, 10, 1000)),
        "new_family": (oracles.new_family_solution(1.0, 1.0, 1.0), np.linspace(-5, 0.9, 1000)),
        "cylinder": (oracles.cylinder_solution(1, 0.5, 2.0, b=0.3), np.linspace(-10, 10, 1000)),
    }


def roundtrip_error(traj) -> float:
    back = ode_s.to_t(ode_s.to_s(traj))
    return float(max(np.max(np.abs(back.t - traj.t)), np.max(np.abs(back.y - traj.y))))


def commutation_error(sol: oracles.AnalyticSolution, t0: float, t1: float,
                      config: Optional[IntegratorConfig] = None) -> float:
    """Integrate in t then map to s, versus map then integrate in s."""
    params = sol.params
    st = sol.state(t0)
    tr_t = ode_t.integrate_t(params, st, t1, config)
    via_t = ode_s.to_s(tr_t)
    s_state = StateS(0.0, *ode_s.state_t_to_s(st.H, st.dH, st.F, st.dF, st.f, st.df))
    tr_s = ode_s.integrate_s(params, s_state, float(via_t.t[-1]), config, t0=t0)
    direct = tr_s(via_t.t)
    return float(np.max(np.abs(direct - via_t.y)))


def step_off_ratios(params, F0=1.0, h1=1.0, f2=0.0, eps_values=(1e-2, 5e-3, 2.5e-3, 1.25e-3)):
    res = [ode_t.step_off_residual(params, ode_t.ShootingConfig(F0=F0, h1=h1, f2=f2, eps=e))
           for e in eps_values]
    return [res[i] / res[i + 1] for i in range(len(res) - 1)]


def closed_form_errors(run: special.BlowupRun, margin: float = 0.01):
    """Max relative errors of the Y1 and Y2/Y1 closed forms up to ``s* - margin``."""
    tr = run.trajectory
    sel = tr.t <= run.singular_time - margin
    y1 = tr.column("y1")[sel]
    ratio = (tr.column("y2") / tr.column("y1"))[sel]
    e1 = np.max(np.abs(special.y1_closed_form(tr)[sel] / y1 - 1))
    e2 = np.max(np.abs(special.ratio_closed_form(tr)[sel] / ratio - 1))
    return float(e1), float(e2)


def run_checks(config: Optional[IntegratorConfig] = None,
               tol: Optional[float] = None) -> list[CheckResult]:
    """Run every suite; ``tol`` overrides all tolerances when given."""
    cfg = config or IntegratorConfig()
    out: list[CheckResult] = []

    def add(name, err, tolerance):
        out.append(CheckResult(name, float(err), tolerance if tol is None else tol))

    for name, (sol, grid) in oracle_grids().items():
        add(f"oracle_residual[{name}]", oracle_residual(sol, grid), 1e-10)

    # first integrals along the steady shooting run
    params = validate(AnsatzParams(0.0, 1, 1, 2.0))
    tr = ode_t.shoot(params, ode_t.ShootingConfig(F0=1.0, h1=1.0, f2=0.0, horizon=50.0), cfg)
    d = ode_t.diagnostics_along(tr)
    for label, series in (("C", d.C), ("C1", d.C1)):
        add(f"first_integral_drift[{label}]", ode_t.drift(series) / (1 + abs(series[0])), 1e-6)

    # exact families integrated from their own data
    for name, sol, t1 in (("cylinder", oracles.cylinder_solution(1, 0.5, 2.0, b=0.3), 2.0),
                          ("new_family", oracles.new_family_solution(1.0, 1.0, 1.0), 0.5)):
        traj = ode_t.integrate_t(sol.params, sol.state(0.0), t1, cfg)
        exact = sol(traj.t)
        got = np.column_stack([traj.column(n) for n in ode_t.STATE_NAMES])
        want = np.column_stack([exact.H, exact.dH, exact.F, exact.dF, exact.f, exact.df])
        add(f"oracle_integration[{name}]", np.max(np.abs(got - want)), 1e-8)
        add(f"roundtrip[{name}]", roundtrip_error(traj), 1e-8)
        add(f"commutation[{name}]", commutation_error(sol, 0.0, t1, cfg), 1e-7)

    # reduced system: bounds and closed forms
    run42 = special.blowup_run(1, 0.0, SpecialState(0.0, 2.0, 1.0, 1.0), "y2")
    add("blowup_time[x2>1]", abs(run42.singular_time - LN_2_OVER_SQRT3), 1e-3)
    add("within_bound[x2>1]", max(0.0, run42.singular_time - special.bound_prop_211(2.0)), 0.0)
    tr42 = run42.trajectory
    sel = tr42.t < special.bound_prop_211(2.0)
    lower = special.comparison_lower_bound(2.0, 0.0, tr42.t[sel])
    add("comparison_bound_violations", np.count_nonzero(tr42.column("x2")[sel] < lower), 0.0)
    e1, e2 = closed_form_errors(run42)
    add("closed_form_y1[x2>1]", e1, 1e-6)
    add("closed_form_ratio[x2>1]", e2, 1e-6)

    for k in (0.0, -1.0):
        run43 = special.blowup_run(1, k, SpecialState(0.0, -2.0, 1.0, 1.0), "x2")
        add(f"within_bound[x2<-1,k={k:g}]",
            max(0.0, run43.singular_time - special.bound_prop_43(-2.0)), 0.0)
        if k == 0.0:
            e1, e2 = closed_form_errors(run43)
            add("closed_form_y1[x2<-1]", e1, 1e-6)
            add("closed_form_ratio[x2<-1]", e2, 1e-6)

    ratios = step_off_ratios(params)
    add("step_off_order", max(abs(r - 4.0) for r in ratios), 0.5)
    return out


def format_table(results: list[CheckResult], write: Callable[[str], None] = print) -> None:
    width = max(len(r.name) for r in results)
    write(f"{'check':<{width}}  {'max error':>12}  {'tolerance':>10}  result")
    for r in results:
        write(f"{r.name:<{width}}  {r.error:12.3e}  {r.tolerance:10.1e}  "
              f"{'PASS' if r.passed else 'FAIL'}")
