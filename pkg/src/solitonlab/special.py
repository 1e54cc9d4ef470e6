"""Reduced steady system with constant fiber (lam = q = 0, H' = 0).

In the gamma-arclength ``ds = gamma dt`` with ``gamma = -f' + 2m F'/F`` the
variables ``X2 = sqrt(2m) F'/(gamma F)``, ``Y1 = 1/gamma`` and
``Y2 = sqrt(2m)/(gamma F)`` obey the polynomial system

    X2' = X2 (X2^2 - 1) + k Y2^2 / sqrt(2m)
    Y1' = Y1 X2^2
    Y2' = Y2 (X2^2 - X2/sqrt(2m))

Y1 and Y2 solve linear homogeneous equations, so they keep their sign and
have closed forms in terms of integrals of X2.  Runs carry ``int X2`` and
``int X2^2`` as integrated columns for that purpose.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import kernels
from .errors import GammaZeroError, HypothesisViolatedError, InvalidInputError, OutOfIntervalError
from .integrator import (
    BLOWUP_THRESHOLDS,
    Action,
    EventSpec,
    Trigger,
    BlowupEstimate,
    IntegratorConfig,
    blowup_events,
    estimate_blowup,
    integrate,
)
from .model import (
    AnsatzParams,
    EventRecord,
    Formulation,
    SpecialState,
    StateT,
    Termination,
    TerminationKind,
    Trajectory,
)

STATE_NAMES = ("x2", "y1", "y2")
COLUMNS = STATE_NAMES + ("int_x2", "int_x2sq")


def rhs_special(m: int, k: float, state: SpecialState):
    r = math.sqrt(2 * m)
    x2, y1, y2 = state.x2, state.y1, state.y2
    return (
        x2 * (x2 * x2 - 1) + k * y2 * y2 / r,
        y1 * x2 * x2,
        y2 * (x2 * x2 - x2 / r),
    )


def field_special(m: int, k: float):
    r = math.sqrt(2 * m)

    def fun(s, y):
        x2, y1, y2 = y[0], y[1], y[2]
        x2sq = x2 * x2
        return np.array([x2 * (x2sq - 1) + k * y2 * y2 / r, y1 * x2sq, y2 * (x2sq - x2 / r), x2, x2sq])

    return fun


def from_t(params: AnsatzParams, state: StateT) -> tuple[SpecialState, float]:
    """Map a t-state with constant fiber to ``(X2, Y1, Y2)`` and ``gamma``.

    The returned state's ``s`` is 0; the gamma-arclength origin is free.
    """
    if params.lam != 0 or params.q != 0:
        raise InvalidInputError("reduced system needs lam = 0 and q = 0")
    if state.dH != 0:
        raise InvalidInputError("reduced system needs H' = 0")
    m = params.m
    r = math.sqrt(2 * m)
    gamma = -state.df + 2 * m * state.dF / state.F
    if gamma == 0:
        raise GammaZeroError("gamma = -f' + tr L vanishes")
    return SpecialState(0.0, r * state.dF / (gamma * state.F), 1 / gamma, r / (gamma * state.F)), gamma


# ----------------------------------------------------------- closed forms


def y1_closed_form(traj: Trajectory) -> np.ndarray:
    """``Y1(s0) exp(int_{s0}^s X2^2)`` at every sample."""
    return traj.column("y1")[0] * np.exp(traj.column("int_x2sq"))


def ratio_closed_form(traj: Trajectory) -> np.ndarray:
    """``(Y2/Y1)(s0) exp(-int_{s0}^s X2 / sqrt(2m))`` at every sample."""
    m = traj.meta["m"]
    y1, y2 = traj.column("y1"), traj.column("y2")
    return (y2[0] / y1[0]) * np.exp(-traj.column("int_x2") / math.sqrt(2 * m))


def implied_F(ratio, m: int):
    """Base scale recovered from ``Y2/Y1 = sqrt(2m)/F``."""
    return math.sqrt(2 * m) / np.asarray(ratio)


# ---------------------------------------------------------------- bounds


def bound_prop_211(x2_0: float, s0: float = 0.0) -> float:
    """Upper bound on the Y2 blow-up time when ``X2(s0) > 1`` and ``k >= 0``."""
    if not x2_0 > 1:
        raise HypothesisViolatedError(f"need X2(s0) > 1, got {x2_0}")
    return s0 + 1.0 / ((x2_0 - 1) * x2_0)


def bound_prop_43(x2_0: float, s0: float = 0.0) -> float:
    """Upper bound on the singular time when ``X2(s0) < -1`` and ``k <= 0``."""
    if not x2_0 < -1:
        raise HypothesisViolatedError(f"need X2(s0) < -1, got {x2_0}")
    return s0 + 1.0 / ((x2_0 + 1) * x2_0)


def comparison_lower_bound(x2_0: float, s0: float, s):
    """Riccati comparison ``X2(s0) / (1 - (s - s0)(X2(s0) - 1) X2(s0))``."""
    s = np.asarray(s, dtype=float)
    end = bound_prop_211(x2_0, s0)
    if np.any(s < s0) or np.any(s >= end):
        raise OutOfIntervalError(f"s must lie in [{s0}, {end})")
    out = x2_0 / (1 - (s - s0) * (x2_0 - 1) * x2_0)
    return float(out) if out.ndim == 0 else out


SCENARIOS = ("x2>1", "x2<-1")


def scenario_for(x2_0: float) -> str:
    return "x2>1" if x2_0 > 0 else "x2<-1"


def check_hypotheses(scenario: str, k: float, x2_0: float, y1_0: float, y2_0: float) -> list[str]:
    """Names of the violated inequalities (empty list when all hold).

    ``"x2>1"``: Y2 blows up before :func:`bound_prop_211`; ``"x2<-1"``: the
    system becomes singular before :func:`bound_prop_43`.
    """
    failed = []
    if scenario == "x2>1":
        if k not in (0, 1):
            failed.append("k in {0, 1}")
        if not x2_0 > 1:
            failed.append("X2(s0) > 1")
        if not y2_0 > 0:
            failed.append("Y2(s0) > 0")
    elif scenario == "x2<-1":
        if k not in (-1, 0):
            failed.append("k in {-1, 0}")
        if not x2_0 < -1:
            failed.append("X2(s0) < -1")
        if not y2_0 > 0:
            failed.append("Y2(s0) > 0")
        if not y1_0 > 0:
            failed.append("Y1(s0) > 0")
    else:
        raise InvalidInputError(f"unknown scenario {scenario!r}")
    return failed


# ----------------------------------------------------------------- runs

DEFAULT_BLOWUP_CONFIG = IntegratorConfig(rtol=1e-10, atol=1e-12, h0=1e-4, hmin=1e-14)


def integrate_special(
    m: int,
    k: float,
    state0: SpecialState,
    s_end: float,
    config: Optional[IntegratorConfig] = None,
    events=(),
    backend: Optional[str] = None,
) -> Trajectory:
    if m < 1:
        raise InvalidInputError("m must be >= 1")
    y0 = np.array([state0.x2, state0.y1, state0.y2, 0.0, 0.0])
    traj = integrate(
        field_special(m, k), y0, (state0.s, s_end), config or DEFAULT_BLOWUP_CONFIG, events,
        names=COLUMNS, kernel=(kernels.SYS_SPECIAL, [float(m), float(k)]),
        formulation=Formulation.SPECIAL, backend=backend,
    )
    return replace(traj, meta={**traj.meta, "m": m, "k": k})


@dataclass(frozen=True)
class BlowupRun:
    trajectory: Trajectory
    estimate: Optional[BlowupEstimate]
    singular_time: float
    max_abs: dict


def _regularized_field(m: int, k: float):
    base = field_special(m, k)

    def fun(tau, y):
        w = 1.0 / (1.0 + y[0] * y[0])
        return np.append(base(tau, y) * w, w)

    return fun


def integrate_special_regularized(
    m: int,
    k: float,
    state0: SpecialState,
    s_end: float,
    config: Optional[IntegratorConfig] = None,
    events=(),
    tau_end: float = 1e3,
) -> Trajectory:
    """Same solution as :func:`integrate_special`, stepped in ``tau`` with
    ``ds = dtau / (1 + X2^2)``.

    Near a blow-up of X2 the components grow exponentially in ``tau`` while
    ``s`` converges to the singular time, so thresholds far beyond the
    double-precision resolution of ``s`` are still reached.  The returned
    trajectory is indexed by ``s``; samples whose ``s`` no longer advances
    in floating point are dropped and event times are mapped to ``s``.
    Event functions see the state vector followed by ``s``.
    """
    if m < 1:
        raise InvalidInputError("m must be >= 1")
    if not s_end > state0.s:
        raise InvalidInputError("s_end must exceed the initial s")
    y0 = np.array([state0.x2, state0.y1, state0.y2, 0.0, 0.0, state0.s])
    horizon = EventSpec("horizon", lambda tau, y: y[5], Trigger.EXCEEDS, s_end, Action.STOP)
    raw = integrate(
        _regularized_field(m, k), y0, (0.0, tau_end), config or DEFAULT_BLOWUP_CONFIG,
        list(events) + [horizon], names=COLUMNS + ("s",), formulation=Formulation.SPECIAL,
    )
    s = raw.column("s")
    # s is non-decreasing in tau; keep the latest sample of each stalled run
    keep = np.concatenate([s[1:] > s[:-1], [True]])
    records = tuple(
        EventRecord(e.name, float(e.y[5]), e.y[:5], float(raw(e.t_lo)[5]), float(raw(e.t_hi)[5]), e.stop)
        for e in raw.events
    )
    term = raw.termination
    if term.kind is TerminationKind.EVENT and term.name == "horizon":
        term = Termination(TerminationKind.HORIZON, float(s[-1]))
        records = tuple(r for r in records if r.name != "horizon")
    elif term.time is not None:
        term = replace(term, time=float(s[-1]))
    return Trajectory(Formulation.SPECIAL, s[keep], raw.y[keep, :5], COLUMNS, term,
                      events=records, meta={**raw.meta, "m": m, "k": k, "tau_end": float(raw.t[-1])})


def blowup_run(
    m: int,
    k: float,
    state0: SpecialState,
    component: str,
    s_end: Optional[float] = None,
    config: Optional[IntegratorConfig] = None,
    thresholds=BLOWUP_THRESHOLDS,
    backend: Optional[str] = None,
    regularized: bool = True,
) -> BlowupRun:
    """Integrate until ``component`` blows up.

    Threshold crossings of ``|component|`` are recorded and extrapolated to
    a blow-up time; the trajectory's termination becomes ``BLOWUP`` when at
    least one threshold was crossed.  With ``regularized=False`` the run is
    stepped in ``s`` itself and typically ends by step underflow before the
    largest threshold.
    """
    idx = STATE_NAMES.index(component)
    if s_end is None:
        s_end = state0.s + 10.0
    events = blowup_events(idx, component, thresholds)
    if regularized:
        traj = integrate_special_regularized(m, k, state0, s_end, config, events)
    else:
        traj = integrate_special(m, k, state0, s_end, config, events, backend)
    est = estimate_blowup(traj, component, thresholds)
    if est is not None:
        traj = replace(traj, termination=Termination(TerminationKind.BLOWUP, est.time, component))
    max_abs = {n: float(np.max(np.abs(traj.column(n)))) for n in STATE_NAMES}
    singular = est.time if est is not None else float(traj.t[-1])
    return BlowupRun(traj, est, singular, max_abs)
