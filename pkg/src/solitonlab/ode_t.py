"""Soliton system in the arclength coordinate t.

State ``(H, H', F, F', f, f')`` of the metric ``dt^2 + H^2 eta^2 + F^2 g_N``
and potential ``f(t)``.  The three second-order equations are solved for
``H''``, ``F''`` and ``f''``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .errors import EmptyTrajectoryError, InvalidInputError, SingularStateError
from .integrator import Action, EventSpec, IntegratorConfig, Trigger, integrate
from .model import (
    AnsatzParams,
    Diagnostics,
    Formulation,
    StateT,
    TerminationKind,
    Termination,
    Trajectory,
    validate,
)

STATE_NAMES = ("H", "dH", "F", "dF", "f", "df")
COLUMNS = STATE_NAMES + ("s",)
VANISH_THRESHOLD = 1e-10


def _check_scales(H, F):
    if np.any(np.asarray(H) == 0) or np.any(np.asarray(F) == 0):
        raise SingularStateError("H and F must be nonzero")


def second_derivatives(params: AnsatzParams, H, dH, F, dF, df):
    """``(H'', F'', f'')`` from the soliton equations; works on arrays."""
    _check_scales(H, F)
    lam, m, q, k = params.lam, params.m, params.q, params.k
    F2 = F * F
    F4 = F2 * F2
    ddH = H * (2 * m * q * q * H * H / F4 - 2 * m * dH * dF / (H * F) + df * dH / H - lam)
    ddF = F * (k / F2 - 2 * q * q * H * H / F4 - (2 * m - 1) * (dF / F) * (dF / F)
               - dH * dF / (F * H) + df * dF / F - lam)
    ddf = lam + ddH / H + 2 * m * ddF / F
    return ddH, ddF, ddf


def rhs_t(params: AnsatzParams, state: StateT):
    """Derivative ``(H', H'', F', F'', f', f'')`` of a t-state."""
    ddH, ddF, ddf = second_derivatives(params, state.H, state.dH, state.F, state.dF, state.df)
    return (state.dH, ddH, state.dF, ddF, state.df, ddf)


def residual_t(params: AnsatzParams, H, dH, ddH, F, dF, ddF, df, ddf):
    """Residuals of the three soliton equations, each written as ``rhs - lambda``.

    Order: normal equation, fiber equation, base equation.  All vanish iff
    the data solve the system.
    """
    _check_scales(H, F)
    lam, m, q, k = params.lam, params.m, params.q, params.k
    r_a = -ddH / H - 2 * m * ddF / F + ddf - lam
    r_b = (2 * m * q * q * H * H / F ** 4 - ddH / H - 2 * m * dH * dF / (H * F)
           + df * dH / H - lam)
    r_c = (k / F ** 2 - 2 * q * q * H * H / F ** 4 - ddF / F - (2 * m - 1) * (dF / F) ** 2
           - dH * dF / (F * H) + df * dF / F - lam)
    return r_a, r_b, r_c


def monitors(params: AnsatzParams, state: StateT) -> Diagnostics:
    """Mean curvature, scalar curvature and the two first integrals.

    ``f''`` is taken from the field, so this is a pure function of the state.
    """
    return _monitors(params, state.H, state.dH, state.F, state.dF, state.f, state.df)


def _monitors(params, H, dH, F, dF, f, df):
    _, _, ddf = second_derivatives(params, H, dH, F, dF, df)
    m, lam = params.m, params.lam
    a, b = dH / H, dF / F
    trL = a + 2 * m * b
    trL2 = a * a + 2 * m * b * b
    S = lam * params.dim_total - ddf - df * trL
    C = ddf + trL * df - df * df + 2 * lam * f
    C1 = S + df * df - 2 * lam * f
    return Diagnostics(trL=trL, trL2=trL2, S=S, C=C, C1=C1)


def diagnostics_along(traj: Trajectory) -> Diagnostics:
    """Vectorized monitors over every sample of a T-trajectory."""
    _require_t(traj)
    cols = [traj.column(n) for n in STATE_NAMES]
    return _monitors(traj.params, *cols)


def samples(traj: Trajectory):
    """Yield ``(t, StateT, Diagnostics)`` per sample."""
    _require_t(traj)
    for i in range(len(traj)):
        st = traj.state(i)
        yield st.t, st, monitors(traj.params, st)


def _require_t(traj):
    if traj.formulation is not Formulation.T:
        raise InvalidInputError(f"expected a T-trajectory, got {traj.formulation}")
    if len(traj) == 0:
        raise EmptyTrajectoryError("trajectory has no samples")


# ---------------------------------------------------------------- integration


def field_t(params: AnsatzParams):
    """Vector field on ``(H, H', F, F', f, f', s)`` with ``s' = H``."""

    def fun(t, y):
        H, dH, F, dF, f, df, s = y
        ddH, ddF, ddf = second_derivatives(params, H, dH, F, dF, df)
        return np.array([dH, ddH, dF, ddF, df, ddf, H])

    return fun


def _kernel_params(params):
    return (kernels.SYS_T, [params.lam, params.m, params.q, params.k])


def _component_event(name, idx, trigger, threshold, action):
    return EventSpec(name, lambda t, y, _i=idx: y[_i], trigger, threshold, action)


def integrate_t(
    params: AnsatzParams,
    state0: StateT,
    t_end: float,
    config: Optional[IntegratorConfig] = None,
    events: Sequence[EventSpec] = (),
    vanish_threshold: float = VANISH_THRESHOLD,
    backend: Optional[str] = None,
) -> Trajectory:
    """Integrate from ``state0`` to ``t_end``.

    The running integral ``s = int H dt`` (zero at ``state0.t``) is carried
    as an extra column.  H or F dropping below ``vanish_threshold`` stops the
    run with a ``VANISHING`` termination.
    """
    validate(params)
    y0 = np.append(state0.as_array(), 0.0)
    all_events = list(events) + [
        _component_event("vanish:H", 0, Trigger.FALLS_BELOW, vanish_threshold, Action.STOP),
        _component_event("vanish:F", 2, Trigger.FALLS_BELOW, vanish_threshold, Action.STOP),
    ]
    traj = integrate(
        field_t(params), y0, (state0.t, t_end), config, all_events,
        names=COLUMNS, kernel=_kernel_params(params),
        formulation=Formulation.T, params=params, backend=backend,
    )
    term = traj.termination
    if term.kind is TerminationKind.EVENT and term.name.startswith("vanish:"):
        comp = term.name.split(":", 1)[1]
        traj = replace(traj, termination=Termination(TerminationKind.VANISHING, term.time, comp))
    return traj


# ------------------------------------------------------------------ step-off


@dataclass(frozen=True)
class ShootingConfig:
    F0: float
    f2: float = 0.0
    eps: float = 1e-3
    h1: float = 1.0
    f0: float = 0.0
    horizon: float = 50.0

    def __post_init__(self):
        if not self.F0 > 0:
            raise InvalidInputError(f"F0 must be positive, got {self.F0}")
        if not self.h1 > 0:
            raise InvalidInputError(f"h1 must be positive, got {self.h1}")
        if not self.eps > 0:
            raise InvalidInputError(f"eps must be positive, got {self.eps}")
        if not self.eps < self.horizon:
            raise InvalidInputError("eps must be smaller than the horizon")


@dataclass(frozen=True)
class StepOffCoefficients:
    """Parity expansion ``H = h1 t + h3 t^3``, ``F = F0 + F2 t^2``, ``f = f0 + f2 t^2``."""

    h1: float
    h3: float
    F0: float
    F2: float
    f0: float
    f2: float

    def state(self, t: float) -> StateT:
        return StateT(
            t,
            self.h1 * t + self.h3 * t ** 3,
            self.h1 + 3 * self.h3 * t ** 2,
            self.F0 + self.F2 * t ** 2,
            2 * self.F2 * t,
            self.f0 + self.f2 * t ** 2,
            2 * self.f2 * t,
        )

    def second_derivatives(self, t: float):
        return 6 * self.h3 * t, 2 * self.F2, 2 * self.f2


def step_off_coefficients(params: AnsatzParams, shoot: ShootingConfig) -> StepOffCoefficients:
    """Taylor coefficients forced by the t -> 0 limits of the equations.

    The base equation's limit fixes ``F2``; the normal and fiber equations
    share the same limit, which fixes ``h3``.
    """
    validate(params)
    lam, m, k = params.lam, params.m, params.k
    F0, h1, f2 = shoot.F0, shoot.h1, shoot.f2
    F2 = (k - lam * F0 ** 2) / (4 * F0)
    h3 = h1 * (-lam - 4 * m * F2 / F0 + 2 * f2) / 6
    return StepOffCoefficients(h1, h3, F0, F2, shoot.f0, f2)


def step_off(params: AnsatzParams, shoot: ShootingConfig) -> StateT:
    """Regular state at ``t = eps`` next to the collapsing circle orbit."""
    return step_off_coefficients(params, shoot).state(shoot.eps)


def step_off_residual(params: AnsatzParams, shoot: ShootingConfig) -> float:
    """Max |residual| of the truncated series at ``t = eps``; O(eps^2)."""
    co = step_off_coefficients(params, shoot)
    st = co.state(shoot.eps)
    ddH, ddF, ddf = co.second_derivatives(shoot.eps)
    r = residual_t(params, st.H, st.dH, ddH, st.F, st.dF, ddF, st.df, ddf)
    return float(max(abs(v) for v in r))


def shoot(params: AnsatzParams, shoot_cfg: ShootingConfig,
          config: Optional[IntegratorConfig] = None, events=(), backend=None) -> Trajectory:
    """Step off the singular orbit and integrate to the horizon."""
    return integrate_t(params, step_off(params, shoot_cfg), shoot_cfg.horizon, config,
                       events, backend=backend)


# -------------------------------------------------------- qualitative report


def count_sign_changes(x, delta: float) -> int:
    """Strict sign changes of ``x``, ignoring excursions inside ``[-delta, delta]``."""
    count = 0
    current = 0
    for v in np.asarray(x, dtype=float):
        if v > delta:
            s = 1
        elif v < -delta:
            s = -1
        else:
            continue
        if current and s != current:
            count += 1
        current = s
    return count


@dataclass(frozen=True)
class QualitativeReport:
    sign_changes_dH: int
    sign_changes_dF: int
    sign_changes_ddf: int
    trL_bound_ok: bool
    S_nonincreasing: bool
    F_growth: float
    trivial_soliton: bool
    trL_bound_violations: int = 0
    S_max_increase: float = 0.0

    @property
    def H_increasing(self) -> bool:
        return self.sign_changes_dH == 0

    @property
    def F_extremum_count(self) -> int:
        return self.sign_changes_dF

    def to_dict(self) -> dict:
        return {
            "H_increasing": self.H_increasing,
            "sign_changes_dH": self.sign_changes_dH,
            "F_extremum_count": self.F_extremum_count,
            "sign_changes_ddf": self.sign_changes_ddf,
            "F_growth": self.F_growth,
            "trL_in_bound": self.trL_bound_ok,
            "trL_bound_violations": self.trL_bound_violations,
            "S_decreasing": self.S_nonincreasing,
            "S_max_increase": self.S_max_increase,
            "trivial_soliton": self.trivial_soliton,
        }


def qualitative_report(
    traj: Trajectory,
    delta: Optional[float] = None,
    t_min: Optional[float] = None,
    trL_slack: Optional[float] = None,
    S_slack: float = 1e-8,
    atol: float = IntegratorConfig.atol,
) -> QualitativeReport:
    """Trajectory-level checks of monotonicity and curvature bounds.

    ``delta`` is the hysteresis band for sign counting (default ``10*atol``);
    the bound ``0 < tr L <= n/t + trL_slack`` is checked on samples with
    ``t > t_min`` (default: the first sample time).
    """
    _require_t(traj)
    delta = 10 * atol if delta is None else delta
    trL_slack = delta if trL_slack is None else trL_slack
    t = traj.t
    t_min = t[0] if t_min is None else t_min
    diag = diagnostics_along(traj)
    dH, dF = traj.column("dH"), traj.column("dF")
    _, _, ddf = second_derivatives(traj.params, traj.column("H"), dH, traj.column("F"), dF,
                                   traj.column("df"))
    sel = t > t_min
    n = traj.params.dim_total
    trL = np.asarray(diag.trL)[sel]
    bad = (trL <= 0) | (trL > n / t[sel] + trL_slack)
    S = np.asarray(diag.S)
    rises = np.diff(S)
    F = traj.column("F")
    trivial = bool(np.all(np.abs(dH) <= delta) and np.all(np.abs(dF) <= delta))
    return QualitativeReport(
        sign_changes_dH=count_sign_changes(dH, delta),
        sign_changes_dF=count_sign_changes(dF, delta),
        sign_changes_ddf=count_sign_changes(ddf, delta),
        trL_bound_ok=bool(sel.any() and not bad.any()),
        S_nonincreasing=bool(np.all(rises <= S_slack)),
        F_growth=float(F[-1] / F.min()),
        trivial_soliton=trivial,
        trL_bound_violations=int(bad.sum()),
        S_max_increase=float(rises.max()) if rises.size else 0.0,
    )


def drift(values) -> float:
    """Max deviation of a supposedly conserved series from its first value."""
    v = np.asarray(values, dtype=float)
    return float(np.max(np.abs(v - v[0]))) if v.size else 0.0

