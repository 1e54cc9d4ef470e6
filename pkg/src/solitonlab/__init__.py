"""Integrate, transform and verify gradient Ricci soliton ODEs on a
circle-bundle ansatz ``dt^2 + H^2 eta^2 + F^2 g_N``.

Submodules
----------
model       domain types and parameter validation
integrator  adaptive Dormand–Prince engine, events, quadrature, blow-up
ode_t       the system in arclength t, step-off, monitors
ode_s       the system in the H-arclength, t <-> s transforms
special     reduced (X2, Y1, Y2) system and blow-up bounds
oracles     exact solution families
cli         command-line interface
"""
from .kernels import HAVE_COMPILED, default_backend
from .model import (
    AnsatzParams,
    Diagnostics,
    Formulation,
    SpecialState,
    StateS,
    StateT,
    Termination,
    TerminationKind,
    Trajectory,
    validate,
)
from .integrator import Action, EventSpec, IntegratorConfig, Trigger, integrate, quadrature

__all__ = [
    "HAVE_COMPILED", "default_backend", "AnsatzParams", "Diagnostics", "Formulation",
    "SpecialState", "StateS", "StateT", "Termination", "TerminationKind", "Trajectory",
    "validate", "Action", "EventSpec", "IntegratorConfig", "Trigger", "integrate", "quadrature",
]
__version__ = "0.1.0"
