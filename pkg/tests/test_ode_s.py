import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from solitonlab import ode_s, ode_t, oracles, verify
from solitonlab.errors import EmptyTrajectoryError, InvalidInputError, SingularStateError
from solitonlab.model import AnsatzParams, Formulation, StateS, StateT, Termination, TerminationKind, Trajectory

STEADY = AnsatzParams(0.0, 1, 1, 2.0)


def test_state_transform_constants():
    a, da, b, db, phi, dphi = ode_s.state_t_to_s(2.0, 0.0, 3.0, 0.0, 0.0, 5.0)
    assert (a, da, b, db, dphi) == (4.0, 0.0, 9.0, 0.0, 2.5)


def test_to_s_constants_give_s_equal_2t():
    sol = oracles.constant_solution(2.0, 3.0, 0.0, 5.0)
    tr = ode_t.integrate_t(sol.params, sol.state(0.0), 1.0)
    s = ode_s.to_s(tr)
    np.testing.assert_allclose(s.t, 2 * tr.t, atol=1e-14)
    np.testing.assert_allclose(s.column("alpha"), 4.0)
    np.testing.assert_allclose(s.column("beta"), 9.0)
    np.testing.assert_allclose(s.column("dphi"), 2.5)


def test_quadratic_beta_phi_equation():
    beta = 2 * 0.3 + 1.0
    assert ode_s.phi_constraint_residual(STEADY, beta, 2.0, 0.0, 0.0) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("alpha,beta", [(0.0, 1.0), (1.0, 0.0)])
def test_singular_state(alpha, beta):
    with pytest.raises(SingularStateError):
        ode_s.rhs_s(STEADY, StateS(0.0, alpha, 0.1, beta, 0.1, 0.0, 0.0))


pos = st.floats(0.1, 10.0)
val = st.floats(-5.0, 5.0)


@given(pos, val, val, pos, val, val, val, val, st.floats(-1, 1), st.integers(1, 4), st.sampled_from([0, 1]),
       st.floats(-2, 2))
def test_subtraction_identity(a, da, dda, b, db, ddb, dphi, ddphi, lam, m, q, k):
    p = AnsatzParams(lam, m, q, k)
    r_a, r_b, _ = ode_s.residual_s(p, a, da, dda, b, db, ddb, dphi, ddphi)
    expected = a * ode_s.phi_constraint_residual(p, b, db, ddb, ddphi)
    assert r_a - r_b == pytest.approx(expected, abs=1e-9 * (1 + abs(r_a) + abs(r_b)))


@given(pos, val, pos, val, val, st.floats(-1, 1), st.integers(1, 4), st.sampled_from([0, 1]), st.floats(-2, 2))
def test_field_solves_all_three_equations(a, da, b, db, dphi, lam, m, q, k):
    p = AnsatzParams(lam, m, q, k)
    dda, ddb, ddphi = ode_s.second_derivatives_s(p, a, da, b, db, dphi)
    scale = 1 + abs(dda) + abs(ddb) * a / b + abs(ddphi) * a
    for r in ode_s.residual_s(p, a, da, dda, b, db, ddb, dphi, ddphi):
        assert abs(r) <= 1e-10 * scale


@given(pos, val, pos, val, val, st.sampled_from([0, 1]), st.floats(-2, 2))
def test_steady_field_matches_reduced_form_for_m1(a, da, b, db, dphi, q, k):
    p = AnsatzParams(0.0, 1, q, k)
    got = ode_s.second_derivatives_s(p, a, da, b, db, dphi)
    ref = ode_s.steady_reduced_second_derivatives(p, a, da, b, db, dphi)
    np.testing.assert_allclose(got, ref, rtol=1e-12, atol=1e-12)


def test_reduced_form_is_not_the_t_system_image_for_m2():
    p = AnsatzParams(0.0, 2, 1, 1.0)
    args = (1.3, 0.4, 2.1, 0.7, 0.2)
    got = ode_s.second_derivatives_s(p, *args)
    ref = ode_s.steady_reduced_second_derivatives(p, *args)
    assert not np.allclose(got, ref)
    res_ref = ode_s.residual_s(p, args[0], args[1], ref[0], args[2], args[3], ref[1], args[4], ref[2])
    assert max(abs(r) for r in res_ref) > 1e-3


@pytest.mark.parametrize("params,state", [
    (AnsatzParams(0.5, 1, 1, 2.0), StateT(0.3, 1.2, 0.3, 1.1, -0.2, 0.4, 0.5)),
    (AnsatzParams(-0.2, 3, 1, 1.0), StateT(0.3, 0.7, -0.1, 2.0, 0.6, 0.0, -0.3)),
    (AnsatzParams(0.0, 2, 0, -1.0), StateT(0.3, 1.0, 1.0, 1.0, 1.0, 0.0, 1.0)),
])
def test_t_field_maps_to_s_field(params, state):
    ddH, ddF, ddf = ode_t.second_derivatives(params, state.H, state.dH, state.F, state.dF, state.df)
    mapped = ode_s.second_derivatives_t_to_s(state.H, state.dH, ddH, state.F, state.dF, ddF, state.df, ddf)
    a, da, b, db, _, dphi = ode_s.state_t_to_s(state.H, state.dH, state.F, state.dF, state.f, state.df)
    np.testing.assert_allclose(mapped, ode_s.second_derivatives_s(params, a, da, b, db, dphi),
                               rtol=1e-12, atol=1e-12)


def test_new_family_s_residual():
    sol = oracles.new_family_solution(1.0, 1.0, 1.0)
    tr = ode_t.integrate_t(sol.params, sol.state(0.0), 0.5)
    s = ode_s.to_s(tr)
    jet = sol(tr.t)
    dda, ddb, ddphi = ode_s.second_derivatives_t_to_s(jet.H, jet.dH, jet.ddH, jet.F, jet.dF, jet.ddF,
                                                      jet.df, jet.ddf)
    cols = [s.column(n) for n in ode_s.STATE_NAMES]
    r = ode_s.residual_s(sol.params, cols[0], cols[1], dda, cols[2], cols[3], ddb, cols[5], ddphi)
    assert max(np.max(np.abs(v)) for v in r) <= 1e-8


@pytest.mark.parametrize("sol,t1", [
    (oracles.cylinder_solution(1, 0.5, 2.0, b=0.3), 2.0),
    (oracles.new_family_solution(1.0, 1.0, 1.0), 0.5),
])
def test_roundtrip_and_commutation(sol, t1):
    tr = ode_t.integrate_t(sol.params, sol.state(0.0), t1)
    assert verify.roundtrip_error(tr) <= 1e-8
    assert verify.commutation_error(sol, 0.0, t1) <= 1e-7


def test_to_t_constant_alpha_gives_half_s():
    p = AnsatzParams(0.0, 1, 0, 0.0)
    tr = ode_s.integrate_s(p, StateS(0.0, 4.0, 0.0, 1.0, 0.0, 0.0, 0.3), 2.0)
    np.testing.assert_allclose(tr.column("alpha"), 4.0)
    back = ode_s.to_t(tr)
    np.testing.assert_allclose(back.t, tr.t / 2, atol=1e-13)


def _s_traj(alpha):
    n = len(alpha)
    y = np.column_stack([alpha, np.zeros(n), np.ones(n), np.zeros(n), np.zeros(n), np.zeros(n),
                         np.arange(n, dtype=float)])
    return Trajectory(Formulation.S, np.arange(n, dtype=float), y, ode_s.COLUMNS,
                      Termination(TerminationKind.HORIZON), STEADY)


def test_to_t_alpha_zero_is_singular():
    with pytest.raises(SingularStateError):
        ode_s.to_t(_s_traj([1.0, 0.0, 1.0]))


def test_empty_trajectory():
    empty = Trajectory(Formulation.T, np.zeros(0), np.zeros((0, len(ode_t.COLUMNS))), ode_t.COLUMNS,
                       Termination(TerminationKind.HORIZON), STEADY)
    with pytest.raises(EmptyTrajectoryError):
        ode_s.to_s(empty)


def test_wrong_formulation():
    with pytest.raises(InvalidInputError):
        ode_s.to_t(ode_t.shoot(STEADY, ode_t.ShootingConfig(F0=1.0, horizon=1.0)))


def test_integrate_s_rejects_nonpositive_start():
    with pytest.raises(SingularStateError):
        ode_s.integrate_s(STEADY, StateS(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0), 1.0)


# admissible (B, D): for c != 0 exactly D = -k (c c3 + 2)/c^2 with B free;
# for c = 0 exactly B = c3 k with D free (symbolic solution of the residuals)
@pytest.mark.parametrize("k,c,c3,B,D,admissible", [
    (0.0, 1.0, 1.0, 0.7, 0.0, True),
    (0.0, 1.0, 1.0, 0.7, 0.5, False),
    (1.0, 1.0, 1.0, 2.0, -3.0, True),
    (1.0, 1.0, 1.0, 2.0, 0.0, False),
    (1.0, -0.5, 2.0, -10.0, -4.0, True),
    (1.0, 0.0, 2.0, 2.0, 5.0, True),
    (1.0, 0.0, 2.0, 1.0, 5.0, False),
])
def test_quadratic_beta_admissibility(k, c, c3, B, D, admissible):
    cand = ode_s.quadratic_beta_candidate(k, c, c3, B, D, s=np.linspace(0, 0.5, 51))
    np.testing.assert_array_equal(cand.ddphi, 0.0)
    np.testing.assert_allclose(cand.dbeta, 2.0)
    if admissible:
        assert cand.max_residual < 1e-10
    else:
        assert cand.max_residual > 1e-3


def test_quadratic_beta_needs_positive_c3():
    with pytest.raises(InvalidInputError):
        ode_s.quadratic_beta_candidate(0.0, 1.0, -1.0, 0.0, 0.0)


# ------------------------------------------------ steady shootings in s


@pytest.fixture(scope="module", params=[0.0, -0.5], ids=["f2=0", "f2=-0.5"])
def steady_s(request):
    tr = ode_t.shoot(STEADY, ode_t.ShootingConfig(F0=1.0, f2=request.param, horizon=50.0))
    return ode_s.to_s(tr)


def test_alpha_strictly_increasing(steady_s):
    assert np.all(steady_s.column("dalpha")[steady_s.t > 0] > 0)


def test_beta_single_extremum(steady_s):
    assert ode_t.count_sign_changes(steady_s.column("dbeta"), 1e-11) <= 1


def test_beta_unbounded_growth(steady_s):
    beta = steady_s.column("beta")
    assert beta[-1] > 10 * beta[0]
    tail = steady_s.column("dbeta")[len(beta) // 2:]
    assert np.all(tail > 0)


def test_beta_growth_proxy_against_midpoint(steady_s):
    # end value versus the value at the midpoint of the s-span
    s, beta = steady_s.t, steady_s.column("beta")
    mid = np.interp(0.5 * (s[0] + s[-1]), s, beta)
    ratio = beta[-1] / mid
    print(f"beta(end)/beta(mid) = {ratio:.4f}")
    assert beta[-1] > 10 * mid
