"""Backend selection for the Dormand–Prince step.

The compiled extension ``solitonlab._kernels`` evaluates the built-in fields
and the whole 7-stage step in C.  When it is missing (or the environment
variable ``SOLITONLAB_BACKEND=python`` is set) every step runs through the
pure-Python implementation in :mod:`solitonlab._dopri`.
"""
import os

import numpy as np

from ._dopri import dopri_step

SYS_T, SYS_S, SYS_SPECIAL = 0, 1, 2
SYSTEM_DIMS = {SYS_T: 7, SYS_S: 7, SYS_SPECIAL: 5}

try:
    from . import _kernels as _compiled
except ImportError:  # pragma: no cover - depends on the build
    _compiled = None

HAVE_COMPILED = _compiled is not None


def default_backend() -> str:
    env = os.environ.get("SOLITONLAB_BACKEND", "").strip().lower()
    if env == "python" or not HAVE_COMPILED:
        return "python"
    return "compiled"


class PyStepper:
    backend = "python"

    def __init__(self, fun, rtol, atol):
        self.fun = fun
        self.rtol = rtol
        self.atol = atol

    def rhs(self, t, y):
        return np.asarray(self.fun(t, y), dtype=float)

    def step(self, t, y, k1, h):
        try:
            return dopri_step(self.fun, t, y, k1, h, self.rtol, self.atol)
        except ArithmeticError:
            # singular stage state: reject and shrink
            return y, k1, np.inf, None


class CompiledStepper:
    backend = "compiled"

    def __init__(self, system, params, rtol, atol):
        self.system = int(system)
        self.params = np.ascontiguousarray(params, dtype=float)
        self.rtol = rtol
        self.atol = atol

    def rhs(self, t, y):
        return _compiled.rhs(self.system, self.params, t, np.ascontiguousarray(y, dtype=float))

    def step(self, t, y, k1, h):
        return _compiled.dopri_step(
            self.system, self.params, t, y, k1, h, self.rtol, self.atol
        )


def make_stepper(fun, kernel, rtol, atol, dim, backend=None):
    backend = backend or default_backend()
    if backend not in ("python", "compiled"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "compiled" and kernel is not None and HAVE_COMPILED:
        system, params = kernel
        if SYSTEM_DIMS.get(system) == dim:
            return CompiledStepper(system, params, rtol, atol)
    return PyStepper(fun, rtol, atol)
