"""Adaptive Dormand–Prince 5(4) engine with dense output and events.

The controller is the PI step-size rule of Hairer's DOPRI5.  Local error is
accepted when every component satisfies ``|e_i| <= atol + rtol*|y_i|``.
Quadratures are appended to the state as extra components so they share the
step-size control.  Reaching a step below ``hmin`` ends the run with
``STEP_UNDERFLOW``; this is the designed stopping mechanism at blow-up.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from . import kernels
from ._dopri import dense_eval
from .errors import InvalidInputError, MaxStepsError, NonFiniteRHSError
from .model import EventRecord, Formulation, Termination, TerminationKind, Trajectory

EVENT_TOL = 1e-12

_SAFE = 0.9
_BETA = 0.04
_EXPO1 = 0.2 - _BETA * 0.75
_FACC1 = 5.0  # largest shrink factor per step
_FACC2 = 0.1  # largest growth factor is 1/_FACC2


@dataclass(frozen=True)
class IntegratorConfig:
    rtol: float = 1e-10
    atol: float = 1e-12
    h0: float = 1e-4
    hmin: float = 1e-14
    hmax: Optional[float] = None
    max_steps: int = 10_000_000

    def resolved(self, span_length: float) -> "IntegratorConfig":
        """Fill in ``hmax`` from the span and check the invariants."""
        hmax = self.hmax if self.hmax is not None else max(span_length, self.h0)
        cfg = replace(self, hmax=hmax)
        if not (cfg.rtol > 0 and cfg.atol > 0):
            raise InvalidInputError("rtol and atol must be positive")
        if not (0 < cfg.hmin <= cfg.h0 <= cfg.hmax):
            raise InvalidInputError(
                f"need 0 < hmin <= h0 <= hmax, got {cfg.hmin}, {cfg.h0}, {cfg.hmax}"
            )
        if cfg.max_steps < 1:
            raise InvalidInputError("max_steps must be >= 1")
        return cfg


class Trigger(enum.Enum):
    SIGN_CHANGE = "sign_change"
    EXCEEDS = "exceeds"
    FALLS_BELOW = "falls_below"


class Action(enum.Enum):
    STOP = "stop"
    RECORD = "record"


@dataclass(frozen=True)
class EventSpec:
    """Scalar condition ``fn(t, y)`` localized by bisection on the interpolant.

    ``y`` is the full integrated vector, quadrature components included.
    """

    name: str
    fn: Callable[[float, np.ndarray], float]
    trigger: Trigger = Trigger.SIGN_CHANGE
    threshold: float = 0.0
    action: Action = Action.STOP

    def __post_init__(self):
        if not math.isfinite(self.threshold):
            raise InvalidInputError(f"event {self.name!r}: threshold must be finite")


class _EventState:
    def __init__(self, spec: EventSpec, t, y):
        self.spec = spec
        g = float(spec.fn(t, y))
        self.ref_sign = np.sign(g)
        self.on = self._on(g)

    def _on(self, g):
        spec = self.spec
        if spec.trigger is Trigger.EXCEEDS:
            return g > spec.threshold
        if spec.trigger is Trigger.FALLS_BELOW:
            return g < spec.threshold
        return self.ref_sign != 0 and np.sign(g) != self.ref_sign

    def status(self, t, y) -> bool:
        return bool(self._on(float(self.spec.fn(t, y))))


class DenseOutput:
    """Piecewise quartic interpolant over the accepted steps."""

    def __init__(self, t_left, h, rcont, t_end):
        self.t_left = np.asarray(t_left, dtype=float)
        self.h = np.asarray(h, dtype=float)
        self.rcont = rcont
        self.t_start = float(self.t_left[0]) if self.t_left.size else float(t_end)
        self.t_end = float(t_end)

    def __call__(self, x):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(xs < self.t_start - 1e-14) or np.any(xs > self.t_end + 1e-14):
            raise ValueError(f"dense output requested outside [{self.t_start}, {self.t_end}]")
        idx = np.clip(np.searchsorted(self.t_left, xs, side="right") - 1, 0, self.t_left.size - 1)
        out = np.empty((xs.size, self.rcont.shape[2]))
        for j, (xj, i) in enumerate(zip(xs, idx)):
            out[j] = dense_eval(self.rcont[i], (xj - self.t_left[i]) / self.h[i])
        return out[0] if np.ndim(x) == 0 else out


def _augment(rhs, quadratures: Mapping[str, Callable], n_base: int):
    integrands = list(quadratures.values())

    def aug(t, y):
        base = y[:n_base]
        out = np.empty(y.shape[0])
        out[:n_base] = rhs(t, base)
        for j, g in enumerate(integrands):
            out[n_base + j] = g(t, base)
        return out

    return aug


def _localize(ev: _EventState, seg_rcont, t_old, h, t_new, y_new):
    lo, hi = t_old, t_new
    while hi - lo > EVENT_TOL:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if ev.status(mid, dense_eval(seg_rcont, (mid - t_old) / h)):
            hi = mid
        else:
            lo = mid
    y_hi = y_new if hi == t_new else dense_eval(seg_rcont, (hi - t_old) / h)
    return lo, hi, y_hi


def integrate(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    state0,
    span: tuple[float, float],
    config: Optional[IntegratorConfig] = None,
    events: Sequence[EventSpec] = (),
    quadratures: Optional[Mapping[str, Callable]] = None,
    names: Optional[Sequence[str]] = None,
    kernel: Optional[tuple[int, Sequence[float]]] = None,
    formulation: Formulation = Formulation.GENERIC,
    params=None,
    backend: Optional[str] = None,
) -> Trajectory:
    """Integrate ``y' = rhs(t, y)`` from ``span[0]`` toward ``span[1]``.

    ``quadratures`` maps names to integrands ``g(t, y)``; their running
    integrals (zero at ``span[0]``) are appended as columns.  ``kernel`` is a
    ``(system_id, params)`` pair naming a compiled built-in field equivalent
    to ``rhs``; it is ignored when the compiled backend is unavailable or
    Python quadratures are requested.
    """
    t0, t1 = float(span[0]), float(span[1])
    if not t0 < t1:
        raise InvalidInputError(f"need t0 < t1, got span {span}")
    cfg = (config or IntegratorConfig()).resolved(t1 - t0)

    y0 = np.atleast_1d(np.asarray(state0, dtype=float)).copy()
    n_base = y0.shape[0]
    quadratures = dict(quadratures or {})
    if names is None:
        names = [f"y{i}" for i in range(n_base)]
    names = tuple(names) + tuple(quadratures)
    fun = rhs
    if quadratures:
        fun = _augment(rhs, quadratures, n_base)
        y0 = np.concatenate([y0, np.zeros(len(quadratures))])
        kernel = None
    if len(names) != y0.shape[0]:
        raise InvalidInputError("names do not match state dimension")

    stepper = kernels.make_stepper(fun, kernel, cfg.rtol, cfg.atol, y0.shape[0], backend)
    try:
        k1 = np.asarray(stepper.rhs(t0, y0), dtype=float)
    except ArithmeticError as exc:
        raise NonFiniteRHSError(f"rhs not evaluable at the initial state: {exc}") from exc
    if not np.all(np.isfinite(k1)) or not np.all(np.isfinite(y0)):
        raise NonFiniteRHSError("rhs is not finite at the initial state")

    ev_states = [_EventState(e, t0, y0) for e in events]
    records: list[EventRecord] = []
    ts, ys = [t0], [y0]
    seg_t, seg_h, seg_r = [], [], []

    t, y = t0, y0
    h = min(cfg.h0, cfg.hmax, t1 - t0)
    facold = 1e-4
    rejected = False
    nsteps = 0
    termination = None

    while termination is None:
        if nsteps >= cfg.max_steps:
            raise MaxStepsError(f"exceeded max_steps={cfg.max_steps} at t={t}")
        last = t + h >= t1 or (t1 - (t + h)) < cfg.hmin
        if last:
            h = t1 - t
        elif h < cfg.hmin or t + h == t:
            termination = Termination(TerminationKind.STEP_UNDERFLOW, time=t)
            break
        y_new, k7, err, rcont = stepper.step(t, y, k1, h)
        nsteps += 1

        if err > 1.0:
            fac11 = err ** _EXPO1 if math.isfinite(err) else math.inf
            h = h / min(_FACC1, fac11 / _SAFE)
            rejected = True
            continue

        t_new = t1 if last else t + h
        stop_rec = None
        for ev in ev_states:
            if ev.status(t_new, y_new) and not ev.on:
                lo, hi, y_hi = _localize(ev, rcont, t, h, t_new, y_new)
                rec = EventRecord(ev.spec.name, hi, y_hi, lo, hi, ev.spec.action is Action.STOP)
                if rec.stop:
                    if stop_rec is None or rec.t < stop_rec.t:
                        stop_rec = rec
                else:
                    records.append(rec)
            ev.on = ev.status(t_new, y_new)

        seg_t.append(t)
        seg_h.append(h)
        seg_r.append(rcont)
        if stop_rec is not None:
            records[:] = [r for r in records if r.t <= stop_rec.t]
            records.append(stop_rec)
            ts.append(stop_rec.t)
            ys.append(stop_rec.y)
            termination = Termination(TerminationKind.EVENT, time=stop_rec.t, name=stop_rec.name)
            break

        ts.append(t_new)
        ys.append(y_new)
        fac11 = err ** _EXPO1
        fac = max(_FACC2, min(_FACC1, fac11 / facold ** _BETA / _SAFE))
        h_new = h / fac
        if rejected:
            h_new = min(h_new, h)
        facold = max(err, 1e-4)
        rejected = False
        t, y, k1 = t_new, y_new, k7
        h = min(h_new, cfg.hmax)
        if last:
            termination = Termination(TerminationKind.HORIZON, time=t1)

    records.sort(key=lambda r: r.t)
    dense = None
    if seg_t:
        dense = DenseOutput(seg_t, seg_h, np.array(seg_r), ts[-1])
    return Trajectory(
        formulation=formulation,
        t=np.array(ts),
        y=np.array(ys),
        names=names,
        termination=termination,
        params=params,
        events=tuple(records),
        dense=dense,
        meta={"steps": nsteps, "backend": stepper.backend},
    )


def quadrature(
    integrand: Callable[[float, np.ndarray], float],
    span: tuple[float, float],
    rhs: Optional[Callable] = None,
    state0=(),
    config: Optional[IntegratorConfig] = None,
    name: str = "I",
) -> Trajectory:
    """Running integral of ``integrand`` along the solution of ``rhs``.

    Without ``rhs`` the integrand is a plain function of time.  The integral
    is a state component under the same error control, read it back with
    ``traj.column(name)``.
    """
    base = np.atleast_1d(np.asarray(state0, dtype=float))
    if rhs is None:
        base = np.zeros(0)

        def rhs(t, y):
            return np.zeros(0)

    return integrate(rhs, base, span, config, quadratures={name: integrand})


# --------------------------------------------------------------------- blow-up

BLOWUP_THRESHOLDS = (1e4, 1e5, 1e6, 1e7, 1e8)


def blowup_events(index: int, component: str, thresholds=BLOWUP_THRESHOLDS) -> list[EventSpec]:
    """RECORD crossings of ``|y[index]|`` over each threshold, STOP at the last."""
    out = []
    for i, th in enumerate(thresholds):
        action = Action.STOP if i == len(thresholds) - 1 else Action.RECORD
        out.append(
            EventSpec(
                f"{component}>{th:g}",
                lambda t, y, _i=index: abs(y[_i]),
                Trigger.EXCEEDS,
                th,
                action,
            )
        )
    return out


@dataclass(frozen=True)
class BlowupEstimate:
    component: str
    time: float
    bracket: tuple[float, float]
    crossings: tuple[tuple[float, float], ...] = field(default_factory=tuple)


def estimate_blowup(traj: Trajectory, component: str, thresholds=BLOWUP_THRESHOLDS) -> Optional[BlowupEstimate]:
    """Extrapolate the blow-up time from recorded threshold crossings.

    Crossing times of geometrically spaced thresholds converge geometrically
    to the singular time, so Aitken's delta-squared on the last three gives
    the limit.  The trajectory's final time is a lower bound as well.
    Returns ``None`` when no threshold was crossed.
    """
    crossings = []
    for th in thresholds:
        times = traj.event_times(f"{component}>{th:g}")
        if times:
            crossings.append((th, times[0]))
    if not crossings:
        return None
    s = [c[1] for c in crossings]
    t_last = float(traj.t[-1])
    est = s[-1]
    if len(s) >= 3:
        d1, d2 = s[-2] - s[-3], s[-1] - s[-2]
        if d1 > 0 and 0 < d2 < d1:
            r = d2 / d1
            est = s[-1] + d2 * r / (1.0 - r)
    est = max(est, t_last)
    return BlowupEstimate(component, est, (s[-1], est), tuple(crossings))
