import math

import numpy as np
import pytest

from solitonlab import ode_t, oracles
from solitonlab.errors import DomainError, InvalidInputError

SOLUTIONS = {
    "constant": oracles.constant_solution(2.0, 3.0, 0.0, 5.0),
    "new_family": oracles.new_family_solution(1.0, 1.0, 1.0),
    "cylinder_m1": oracles.cylinder_solution(1, 0.5, 2.0, b=0.2),
    "cylinder_m2": oracles.cylinder_solution(2, 1.0, 3.0),
}


def _grid(sol):
    lo, hi = sol.domain
    if math.isfinite(hi):
        return hi - np.logspace(-2, 2, 1000)
    return np.concatenate([-np.logspace(2, -3, 500), np.logspace(-3, 2, 500)])


@pytest.mark.parametrize("name", SOLUTIONS)
def test_residual_vanishes(name):
    sol = SOLUTIONS[name]
    jet = sol(_grid(sol))
    r = ode_t.residual_t(sol.params, *jet.residual_args())
    scale = 1 + np.abs(jet.ddf) + np.abs(jet.ddH / jet.H)
    for v in r:
        assert np.max(np.abs(v) / scale) <= 1e-12


def test_constant_values():
    jet = SOLUTIONS["constant"](0.7)
    assert (float(jet.H), float(jet.F), float(jet.df)) == (2.0, 3.0, 5.0)


def test_constant_trivial_monitors():
    sol = oracles.constant_solution(2.0, 3.0, 1.0, 0.0)
    d = ode_t.monitors(sol.params, sol.state(1.0))
    assert d.C == 0.0 and d.C1 == 0.0


@pytest.mark.parametrize("args", [(2.0, 0.0, 0.0, 1.0), (0.0, 1.0, 0.0, 1.0)])
def test_constant_invalid(args):
    with pytest.raises(InvalidInputError):
        oracles.constant_solution(*args)


def test_new_family_values():
    jet = SOLUTIONS["new_family"](0.0)
    assert tuple(float(v) for v in (jet.H, jet.dH, jet.ddH, jet.df, jet.ddf)) == (2.0, 2.0, 4.0, 2.0, 2.0)
    d = ode_t.monitors(SOLUTIONS["new_family"].params, jet.state())
    assert d.S == pytest.approx(-4.0) and d.C == pytest.approx(0.0, abs=1e-15)


def test_new_family_first_integrals_identically_zero():
    sol = SOLUTIONS["new_family"]
    jet = sol(np.linspace(-5, 0.9, 1000))
    d = ode_t._monitors(sol.params, jet.H, jet.dH, jet.F, jet.dF, jet.f, jet.df)
    np.testing.assert_allclose(d.C, 0.0, atol=1e-11)
    np.testing.assert_allclose(d.C1, 0.0, atol=1e-11)


def test_new_family_domain():
    with pytest.raises(DomainError):
        SOLUTIONS["new_family"](1.0)


@pytest.mark.parametrize("m,lam,k,F2,H2", [(1, 0.5, 2.0, 2.0, 1.0), (2, 1.0, 3.0, 2.0, 1.0)])
def test_cylinder_values(m, lam, k, F2, H2):
    sol = oracles.cylinder_solution(m, lam, k)
    jet = sol(0.0)
    assert float(jet.F) ** 2 == pytest.approx(F2)
    assert float(jet.H) ** 2 == pytest.approx(H2)
    assert float(jet.ddf) == lam


@pytest.mark.parametrize("lam,k", [(0.0, 1.0), (1.0, 0.0)])
def test_cylinder_invalid(lam, k):
    with pytest.raises(InvalidInputError):
        oracles.cylinder_solution(1, lam, k)


@pytest.mark.parametrize("name,t0,t1", [("constant", -1.0, 2.0), ("new_family", -2.0, 0.5),
                                        ("cylinder_m1", 0.0, 3.0), ("cylinder_m2", -1.0, 1.0)])
def test_integration_reproduces_oracle(name, t0, t1):
    sol = SOLUTIONS[name]
    tr = ode_t.integrate_t(sol.params, sol.state(t0), t1)
    jet = sol(tr.t)
    want = np.column_stack([jet.H, jet.dH, jet.F, jet.dF, jet.f, jet.df])
    got = np.column_stack([tr.column(n) for n in ode_t.STATE_NAMES])
    assert np.max(np.abs(got - want)) <= 1e-8
