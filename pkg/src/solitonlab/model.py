"""Domain types shared by the three ODE formulations.

Everything here is an immutable value.  The two arclength variables used by
the formulations (``ds = H dt`` for :class:`StateS`, ``ds = gamma dt`` for
:class:`SpecialState`) live in distinct types and are never mixed; every
:class:`Trajectory` carries a mandatory :class:`Formulation` tag.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, fields
from typing import Any, Optional

import numpy as np

from .errors import RejectError


@dataclass(frozen=True)
class AnsatzParams:
    """One soliton problem instance.

    ``lam`` is the soliton constant, ``m`` half the real dimension of the
    Kähler–Einstein base, ``q`` the bundle twist and ``k`` the Einstein
    constant of the base.  ``dim_total`` is the dimension of the total space
    and defaults to ``2m + 2``.
    """

    lam: float
    m: int
    q: int
    k: float
    dim_total: Optional[int] = None

    def __post_init__(self):
        if self.dim_total is None:
            object.__setattr__(self, "dim_total", 2 * int(self.m) + 2)


def validate(params: AnsatzParams) -> AnsatzParams:
    """Return ``params`` unchanged if its invariants hold, else raise."""
    if params.q not in (0, 1):
        raise RejectError("q", f"bundle twist must be 0 or 1, got {params.q!r}")
    if int(params.m) != params.m or params.m < 1:
        raise RejectError("m", f"must be an integer >= 1, got {params.m!r}")
    if params.dim_total != 2 * params.m + 2:
        raise RejectError(
            "dim_total", f"must equal 2m+2={2 * params.m + 2}, got {params.dim_total!r}"
        )
    for name in ("lam", "k"):
        if not np.isfinite(getattr(params, name)):
            raise RejectError(name, "must be finite")
    return params


class _StateMixin:
    @classmethod
    def component_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))[1:]

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in self.component_names()], dtype=float)

    @classmethod
    def from_array(cls, x0: float, arr):
        return cls(float(x0), *(float(v) for v in arr))


@dataclass(frozen=True)
class StateT(_StateMixin):
    """Phase-space point in arclength coordinate ``t``."""

    t: float
    H: float
    dH: float
    F: float
    dF: float
    f: float
    df: float


@dataclass(frozen=True)
class StateS(_StateMixin):
    """Phase-space point in the H-arclength ``s`` (``ds = H dt``)."""

    s: float
    alpha: float
    dalpha: float
    beta: float
    dbeta: float
    phi: float
    dphi: float


@dataclass(frozen=True)
class SpecialState(_StateMixin):
    """Point of the reduced (X2, Y1, Y2) system in the gamma-arclength ``s``."""

    s: float
    x2: float
    y1: float
    y2: float


@dataclass(frozen=True)
class Diagnostics:
    """Curvature scalars and first integrals at one sample.

    Fields may be floats or equally shaped numpy arrays.
    """

    trL: Any
    trL2: Any
    S: Any
    C: Any
    C1: Any


class Formulation(enum.Enum):
    GENERIC = "generic"
    T = "T"
    S = "S"
    SPECIAL = "SPECIAL"


STATE_TYPES = {Formulation.T: StateT, Formulation.S: StateS, Formulation.SPECIAL: SpecialState}


class TerminationKind(enum.Enum):
    HORIZON = "horizon"
    BLOWUP = "blowup"
    VANISHING = "vanishing"
    STEP_UNDERFLOW = "step_underflow"
    EVENT = "event"


@dataclass(frozen=True)
class Termination:
    kind: TerminationKind
    time: Optional[float] = None
    component: Optional[str] = None
    name: Optional[str] = None

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "time": self.time,
                "component": self.component, "name": self.name}


@dataclass(frozen=True)
class EventRecord:
    """A localized event: ``t`` is the first bracket end with trigger status on."""

    name: str
    t: float
    y: np.ndarray
    t_lo: float
    t_hi: float
    stop: bool


@dataclass(frozen=True)
class Trajectory:
    """Ordered solution record.

    ``y`` holds one row per sample; ``names`` labels its columns (state
    components first, then any attached quadratures).  ``dense`` is the
    integrator's piecewise interpolant when the trajectory came straight out
    of :func:`solitonlab.integrator.integrate`.
    """

    formulation: Formulation
    t: np.ndarray
    y: np.ndarray
    names: tuple[str, ...]
    termination: Termination
    params: Optional[AnsatzParams] = None
    events: tuple[EventRecord, ...] = ()
    dense: Any = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if y.ndim != 2 or y.shape[0] != t.shape[0] or y.shape[1] != len(self.names):
            raise ValueError("sample array shape does not match times/names")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("sample times must be strictly increasing")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "y", y)

    def __len__(self) -> int:
        return self.t.shape[0]

    def column(self, name: str) -> np.ndarray:
        try:
            return self.y[:, self.names.index(name)]
        except ValueError:
            raise KeyError(f"no column {name!r} in {self.names}") from None

    def has_column(self, name: str) -> bool:
        return name in self.names

    def state(self, i: int):
        """Typed state of sample ``i`` (state components only)."""
        cls = STATE_TYPES[self.formulation]
        comps = cls.component_names()
        return cls(float(self.t[i]), *(float(self.y[i, self.names.index(c)]) for c in comps))

    def __call__(self, x):
        """Evaluate the dense interpolant at ``x`` (scalar or array)."""
        if self.dense is None:
            raise ValueError("trajectory carries no dense output")
        return self.dense(x)

    def event_times(self, name: Optional[str] = None) -> list[float]:
        return [e.t for e in self.events if name is None or e.name == name]
