"""Exact solution families of the t-system, used as ground truth."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidInputError
from .model import AnsatzParams, StateT


@dataclass(frozen=True)
class Jet:
    """Values and first two derivatives of ``(H, F, f)`` at ``t``."""

    t: object
    H: object
    dH: object
    ddH: object
    F: object
    dF: object
    ddF: object
    f: object
    df: object
    ddf: object

    def state(self) -> StateT:
        return StateT(float(self.t), float(self.H), float(self.dH), float(self.F),
                      float(self.dF), float(self.f), float(self.df))

    def residual_args(self):
        return (self.H, self.dH, self.ddH, self.F, self.dF, self.ddF, self.df, self.ddf)


class AnalyticSolution:
    params: AnsatzParams
    domain: tuple[float, float]

    def __call__(self, t) -> Jet:
        raise NotImplementedError

    def state(self, t: float) -> StateT:
        return self(t).state()


class ConstantSolution(AnalyticSolution):
    """``H = C1``, ``F = C2``, ``f = C3 + C4 t`` for ``lam = q = k = 0``."""

    def __init__(self, C1, C2, C3, C4, m=1):
        if not (C1 > 0 and C2 > 0):
            raise InvalidInputError("C1 and C2 must be positive")
        self.C1, self.C2, self.C3, self.C4 = C1, C2, C3, C4
        self.params = AnsatzParams(0.0, m, 0, 0.0)
        self.domain = (-math.inf, math.inf)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        z = np.zeros_like(t)
        return Jet(t, z + self.C1, z, z, z + self.C2, z, z, self.C3 + self.C4 * t, z + self.C4, z)


def constant_solution(C1, C2, C3, C4, m=1) -> ConstantSolution:
    return ConstantSolution(C1, C2, C3, C4, m)


class NewFamilySolution(AnalyticSolution):
    """``F = C``, ``H = 2/(c1 (c3 - t))``, ``f = -2 ln(sqrt(c1)(c3 - t)/2)`` on ``t < c3``.

    Steady, untwisted, flat base, m = 1.
    """

    def __init__(self, C, c1, c3):
        if not (C > 0 and c1 > 0):
            raise InvalidInputError("C and c1 must be positive")
        self.C, self.c1, self.c3 = C, c1, c3
        self.params = AnsatzParams(0.0, 1, 0, 0.0)
        self.domain = (-math.inf, c3)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t >= self.c3):
            raise DomainError(f"family defined only for t < {self.c3}")
        u = self.c3 - t
        z = np.zeros_like(t)
        H = 2 / (self.c1 * u)
        return Jet(
            t,
            H, 2 / (self.c1 * u ** 2), 4 / (self.c1 * u ** 3),
            z + self.C, z, z,
            -2 * np.log(math.sqrt(self.c1) * u / 2), 2 / u, 2 / u ** 2,
        )


def new_family_solution(C, c1, c3) -> NewFamilySolution:
    return NewFamilySolution(C, c1, c3)


class CylinderSolution(AnalyticSolution):
    """Constant ``H``, ``F`` with ``f = lam t^2/2 + b t + a`` for ``q = 1``.

    ``F^2 = k m/(lam (m+1))`` and ``H^2 = lam F^4/(2m)`` are forced by the
    fiber and base equations with ``H' = F' = 0``.
    """

    def __init__(self, m, lam, k, b=0.0, a=0.0):
        if not (lam > 0 and k > 0):
            raise InvalidInputError("cylinder family needs lam > 0 and k > 0")
        if m < 1:
            raise InvalidInputError("m must be >= 1")
        self.params = AnsatzParams(float(lam), m, 1, float(k))
        self.F0 = math.sqrt(k * m / (lam * (m + 1)))
        self.H0 = math.sqrt(lam * self.F0 ** 4 / (2 * m))
        self.b, self.a = b, a
        self.domain = (-math.inf, math.inf)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        z = np.zeros_like(t)
        lam = self.params.lam
        return Jet(t, z + self.H0, z, z, z + self.F0, z, z,
                   lam * t * t / 2 + self.b * t + self.a, lam * t + self.b, z + lam)


def cylinder_solution(m, lam, k, b=0.0, a=0.0) -> CylinderSolution:
    return CylinderSolution(m, lam, k, b, a)
