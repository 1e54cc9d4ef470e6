"""The (alpha, beta, phi) system in the H-arclength ``ds = H dt``.

``alpha = H^2``, ``beta = F^2``, ``phi = f``; dots are s-derivatives.  The
second-order equations are solved for general lambda:

    alpha'' = 4 m q^2 alpha/beta^2 - m alpha' beta'/beta + phi' alpha' - 2 lam
    beta''  = 2k/alpha - 4q^2/beta + (1-m) beta'^2/beta - alpha' beta'/alpha
              + phi' beta' - 2 lam beta/alpha
    phi''   = m (beta''/beta - beta'^2/(2 beta^2) + 2 q^2/beta^2)

The phi equation is the difference of the normal and fiber equations and
does not involve lambda.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .errors import EmptyTrajectoryError, InvalidInputError, SingularStateError
from .integrator import Action, EventSpec, IntegratorConfig, Trigger, integrate
from .model import AnsatzParams, Formulation, StateS, Trajectory, validate
from .ode_t import COLUMNS as T_COLUMNS
from .ode_t import STATE_NAMES as T_NAMES

STATE_NAMES = ("alpha", "dalpha", "beta", "dbeta", "phi", "dphi")
COLUMNS = STATE_NAMES + ("t",)


def _check(alpha, beta):
    if np.any(np.asarray(alpha) == 0) or np.any(np.asarray(beta) == 0):
        raise SingularStateError("alpha and beta must be nonzero")


def second_derivatives_s(params: AnsatzParams, alpha, dalpha, beta, dbeta, dphi):
    _check(alpha, beta)
    lam, m, q, k = params.lam, params.m, params.q, params.k
    # fiber equation solved for alpha''
    dda = 4 * m * q * q * alpha / (beta * beta) - m * dalpha * dbeta / beta + dphi * dalpha - 2 * lam
    # base equation times 2 beta/alpha, solved for beta''
    ddb = (2 * k / alpha - 4 * q * q / beta + (1 - m) * dbeta * dbeta / beta
           - dalpha * dbeta / alpha + dphi * dbeta - 2 * lam * beta / alpha)
    # normal minus fiber equation, divided by alpha
    ddphi = m * (ddb / beta - dbeta * dbeta / (2 * beta * beta) + 2 * q * q / (beta * beta))
    return dda, ddb, ddphi


def rhs_s(params: AnsatzParams, state: StateS):
    """Derivative ``(a', a'', b', b'', phi', phi'')`` of an s-state."""
    dda, ddb, ddphi = second_derivatives_s(
        params, state.alpha, state.dalpha, state.beta, state.dbeta, state.dphi
    )
    return (state.dalpha, dda, state.dbeta, ddb, state.dphi, ddphi)


def steady_reduced_second_derivatives(params: AnsatzParams, alpha, dalpha, beta, dbeta, dphi):
    """Steady-case field in the reduced form with unit ``alpha' beta'/beta``
    coefficient and ``-(1-m) beta'^2/beta`` in the beta equation.

    Agrees with :func:`second_derivatives_s` at ``lam = 0`` when ``m = 1``;
    for ``m > 1`` it is not the image of the t-system (see the tests).
    """
    _check(alpha, beta)
    m, q, k = params.m, params.q, params.k
    dda = alpha * q * q * 4 * m / (beta * beta) - dalpha * dbeta / beta + dphi * dalpha
    ddb = (2 * k / alpha - 4 * q * q / beta - dbeta * dalpha / alpha + dphi * dbeta
           - dbeta * dbeta * (1 - m) / beta)
    ddphi = m * (ddb / beta - dbeta * dbeta / (2 * beta * beta) + q * q * 2 / (beta * beta))
    return dda, ddb, ddphi


def residual_s(params: AnsatzParams, alpha, dalpha, ddalpha, beta, dbeta, ddbeta, dphi, ddphi):
    """Normal, fiber and base equations in s-form, each as ``rhs - lambda``."""
    _check(alpha, beta)
    lam, m, q, k = params.lam, params.m, params.q, params.k
    b2 = beta * beta
    r_a = (-ddalpha / 2 - m * alpha * ddbeta / beta + m * alpha * dbeta ** 2 / (2 * b2)
           - m * dbeta * dalpha / (2 * beta) + alpha * ddphi + dphi * dalpha / 2 - lam)
    r_b = (alpha * q * q * 2 * m / b2 - ddalpha / 2 - m * dalpha * dbeta / (2 * beta)
           + dphi * dalpha / 2 - lam)
    r_c = (k / beta - 2 * alpha * q * q / b2 - alpha * ddbeta / (2 * beta)
           + alpha * dbeta ** 2 / (4 * b2) - dbeta * dalpha / (2 * beta)
           - (2 * m - 1) * dbeta ** 2 * alpha / (4 * b2) + dphi * alpha * dbeta / (2 * beta) - lam)
    return r_a, r_b, r_c


def phi_constraint_residual(params: AnsatzParams, beta, dbeta, ddbeta, ddphi):
    """``phi'' - m(beta''/beta - beta'^2/(2 beta^2) + 2q^2/beta^2)``."""
    m, q = params.m, params.q
    return ddphi - (m * ddbeta / beta - m * dbeta ** 2 / (2 * beta ** 2) + q * q * 2 * m / beta ** 2)


# ------------------------------------------------------------ t <-> s maps


def state_t_to_s(H, dH, F, dF, f, df):
    """First-order part of the coordinate change; arrays allowed."""
    if np.any(np.asarray(H) <= 0):
        raise SingularStateError("H must be positive for the s-coordinate")
    return H * H, 2 * dH, F * F, 2 * F * dF / H, f, df / H


def state_s_to_t(alpha, dalpha, beta, dbeta, phi, dphi):
    if np.any(np.asarray(alpha) <= 0) or np.any(np.asarray(beta) <= 0):
        raise SingularStateError("alpha and beta must be positive")
    H = np.sqrt(alpha)
    F = np.sqrt(beta)
    return H, dalpha / 2, F, dbeta * H / (2 * F), phi, dphi * H


def second_derivatives_t_to_s(H, dH, ddH, F, dF, ddF, df, ddf):
    """s-second derivatives from t-data: ``a'' = 2H''/H`` and so on."""
    dda = 2 * ddH / H
    ddb = (2 * dF ** 2 + 2 * F * ddF) / H ** 2 - 2 * F * dF * dH / H ** 3
    ddphi = ddf / H ** 2 - df * dH / H ** 3
    return dda, ddb, ddphi


def _require(traj, formulation):
    if len(traj) == 0:
        raise EmptyTrajectoryError("trajectory has no samples")
    if traj.formulation is not formulation:
        raise InvalidInputError(f"expected {formulation}, got {traj.formulation}")


def to_s(traj: Trajectory, s0: float = 0.0) -> Trajectory:
    """Re-express a T-trajectory in the H-arclength.

    ``s`` is read from the trajectory's integrated ``s`` column (offset by
    ``s0``), never reconstructed from samples; the original ``t`` rides
    along as the inverse quadrature ``int ds/sqrt(alpha)``.
    """
    _require(traj, Formulation.T)
    cols = [traj.column(n) for n in T_NAMES]
    a, da, b, db, phi, dphi = state_t_to_s(*cols)
    s = s0 + traj.column("s")
    y = np.column_stack([a, da, b, db, phi, dphi, traj.t])
    return Trajectory(Formulation.S, s, y, COLUMNS, traj.termination, traj.params,
                      meta={"source": "to_s"})


def to_t(traj: Trajectory) -> Trajectory:
    """Inverse of :func:`to_s`; needs the ``t`` quadrature column."""
    _require(traj, Formulation.S)
    cols = [traj.column(n) for n in STATE_NAMES]
    H, dH, F, dF, f, df = state_s_to_t(*cols)
    t = traj.column("t")
    y = np.column_stack([H, dH, F, dF, f, df, traj.t - traj.t[0]])
    return Trajectory(Formulation.T, t, y, T_COLUMNS, traj.termination, traj.params,
                      meta={"source": "to_t"})


# ----------------------------------------------------------- integration


def field_s(params: AnsatzParams):
    """Vector field on ``(a, a', b, b', phi, phi', t)`` with ``t' = 1/sqrt(a)``."""

    def fun(s, y):
        a, da, b, db, phi, dphi, t = y
        dda, ddb, ddphi = second_derivatives_s(params, a, da, b, db, dphi)
        if a <= 0:
            raise SingularStateError("alpha must be positive")
        return np.array([da, dda, db, ddb, dphi, ddphi, 1.0 / np.sqrt(a)])

    return fun


def integrate_s(
    params: AnsatzParams,
    state0: StateS,
    s_end: float,
    config: Optional[IntegratorConfig] = None,
    events: Sequence[EventSpec] = (),
    t0: float = 0.0,
    vanish_threshold: float = 1e-20,
    backend: Optional[str] = None,
) -> Trajectory:
    """Integrate the s-system; the ``t`` column starts at ``t0``."""
    validate(params)
    if state0.alpha <= 0 or state0.beta <= 0:
        raise SingularStateError("alpha and beta must be positive at the start")
    y0 = np.append(state0.as_array(), t0)
    ev = list(events) + [
        EventSpec("vanish:alpha", lambda s, y: y[0], Trigger.FALLS_BELOW, vanish_threshold, Action.STOP),
        EventSpec("vanish:beta", lambda s, y: y[2], Trigger.FALLS_BELOW, vanish_threshold, Action.STOP),
    ]
    return integrate(
        field_s(params), y0, (state0.s, s_end), config, ev, names=COLUMNS,
        kernel=(kernels.SYS_S, [params.lam, params.m, params.q, params.k]),
        formulation=Formulation.S, params=params, backend=backend,
    )


# ------------------------------------------------ quadratic-beta candidates


@dataclass(frozen=True)
class QuadraticBetaCandidate:
    """Steady m = q = 1 triple with ``beta = 2s + c3`` and ``phi' = c``.

    ``residuals`` holds ``(alpha'' , beta'', phi'')`` minus the field value
    on the grid; all three vanish iff the candidate solves the system.
    """

    s: np.ndarray
    alpha: np.ndarray
    dalpha: np.ndarray
    ddalpha: np.ndarray
    beta: np.ndarray
    dbeta: np.ndarray
    ddbeta: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    ddphi: np.ndarray
    residuals: tuple

    @property
    def max_residual(self) -> float:
        return float(max(np.max(np.abs(r)) for r in self.residuals))


def quadratic_beta_candidate(k, c, c3, B, D, d=0.0, s=None) -> QuadraticBetaCandidate:
    """Closed-form candidate from ``X = alpha*beta`` solving ``X'' = 2k + c X'``.

    ``X = -2ks/c + (B/c) e^{cs} + D`` for ``c != 0`` and ``X = ks^2 + Bs + D``
    for ``c = 0``.  Which ``(B, D)`` are admissible is read off the
    residuals, not assumed.
    """
    if not c3 > 0:
        raise InvalidInputError(f"c3 must be positive so that beta(0) > 0, got {c3}")
    s = np.linspace(0.0, 1.0, 101) if s is None else np.asarray(s, dtype=float)
    if c != 0:
        e = np.exp(c * s)
        X = -2 * k * s / c + (B / c) * e + D
        dX = -2 * k / c + B * e
        ddX = c * B * e
    else:
        X = k * s ** 2 + B * s + D
        dX = 2 * k * s + B
        ddX = np.full_like(s, 2.0 * k)
    beta = 2 * s + c3
    dbeta = np.full_like(s, 2.0)
    ddbeta = np.zeros_like(s)
    alpha = X / beta
    dalpha = dX / beta - X * dbeta / beta ** 2
    ddalpha = ddX / beta - 2 * dX * dbeta / beta ** 2 + 2 * X * dbeta ** 2 / beta ** 3 - X * ddbeta / beta ** 2
    phi = c * s + d
    dphi = np.full_like(s, float(c))
    ddphi = np.zeros_like(s)
    params = AnsatzParams(0.0, 1, 1, k)
    fa, fb, fphi = second_derivatives_s(params, alpha, dalpha, beta, dbeta, dphi)
    res = (ddalpha - fa, ddbeta - fb, ddphi - fphi)
    return QuadraticBetaCandidate(s, alpha, dalpha, ddalpha, beta, dbeta, ddbeta, phi, dphi,
                                  ddphi, res)
