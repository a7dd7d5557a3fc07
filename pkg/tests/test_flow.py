import math

import numpy as np
import pytest
import sympy as sp
from numpy.testing import assert_allclose, assert_array_equal

from chetaev.errors import ContractViolation, StepRejected
from chetaev.flow import (Trajectory, integrate_lie, invariants_report, lie_series_evaluate, project_to_so3,
                          rk4_integrate, taylor_jet)
from chetaev.rigidbody import RigidBodyState, euler_poisson_rhs, hat, random_rotation

I_ASYM = np.array([2.0, 3.0, 4.0])


def axis_angle(R0, M0, lam, t):
    """Closed form for a spherical top: R(t) = R0 exp(t hat(M0 / lam)) by Rodrigues."""
    w = np.asarray(M0, dtype=float) / lam
    th = np.linalg.norm(w) * t
    if th == 0:
        return np.array(R0, dtype=float)
    K = hat(w / np.linalg.norm(w))
    return R0 @ (np.eye(3) + np.sin(th) * K + (1 - np.cos(th)) * K @ K)


def test_jet_spherical_top_terminates():
    jet = taylor_jet([1.5] * 3, RigidBodyState(np.eye(3), [0.3, -1, 2]), 10)
    assert_array_equal(jet.coeffs_M[1:], 0)


def test_jet_first_coefficient_is_rhs(rng):
    st_ = RigidBodyState(random_rotation(rng), rng.normal(size=3))
    jet = taylor_jet(I_ASYM, st_, 5)
    Rdot, Mdot = euler_poisson_rhs(I_ASYM, st_)
    assert_array_equal(jet.coeffs_M[0], st_.M)
    assert_array_equal(jet.coeffs_R[0], st_.R)
    assert_allclose(jet.coeffs_R[1], Rdot, atol=1e-15)
    assert_allclose(jet.coeffs_M[1], Mdot, atol=1e-15)
    jet = taylor_jet(I_ASYM, RigidBodyState(np.eye(3), [1, 1, 1]), 3)
    assert_allclose(jet.coeffs_M[1], [-1 / 12, 1 / 4, -1 / 6], atol=1e-15)


def test_jet_recurrence(rng):
    jet = taylor_jet(I_ASYM, RigidBodyState(random_rotation(rng), rng.normal(size=3)), 12)
    k = int(rng.integers(0, 12))
    W = jet.coeffs_M / I_ASYM
    lhs = (k + 1) * jet.coeffs_M[k + 1]
    rhs = sum(np.cross(jet.coeffs_M[j], W[k - j]) for j in range(k + 1))
    assert_allclose(lhs, rhs, atol=1e-14)
    for r in range(3):
        rhs = sum(np.cross(jet.coeffs_R[j, r], W[k - j]) for j in range(k + 1))
        assert_allclose((k + 1) * jet.coeffs_R[k + 1, r], rhs, atol=1e-14)


def test_jet_matches_symbolic_lie_derivatives(rng):
    # oracle: coefficient k equals X^k z / k! with X the Hamiltonian vector field, built symbolically
    z = sp.symbols("R0:9 M0:3")
    R = sp.Matrix(3, 3, z[:9])
    M = sp.Matrix(z[9:])
    Inv = sp.diag(sp.Rational(1, 2), sp.Rational(1, 3), sp.Rational(1, 4))
    Om = Inv * M
    field = [R.row(i).T.cross(Om)[j] for i in range(3) for j in range(3)] + list(M.cross(Om))

    def X(f):
        return sum(fi * sp.diff(f, zi) for fi, zi in zip(field, z))

    st_ = RigidBodyState(random_rotation(rng), rng.normal(size=3))
    subs = dict(zip(z, st_.as_vector()))
    jet = taylor_jet(I_ASYM, st_, 4)
    for idx in (0, 5, 10):
        f = z[idx]
        for k in range(5):
            got = jet.coeffs_R[k].ravel()[idx] if idx < 9 else jet.coeffs_M[k][idx - 9]
            assert float(f.subs(subs)) / math.factorial(k) == pytest.approx(got, abs=1e-13)
            f = sp.expand(X(f))


def test_evaluate_at_zero(rng):
    st_ = RigidBodyState(random_rotation(rng), rng.normal(size=3))
    out = lie_series_evaluate(taylor_jet(I_ASYM, st_, 8), 0.0)
    assert_array_equal(out.R, st_.R)
    assert_array_equal(out.M, st_.M)


def test_evaluate_spherical_closed_form(rng):
    lam = 1.7
    R0 = random_rotation(rng)
    M0 = np.array([0.4, -1.1, 0.9])
    jet = taylor_jet([lam] * 3, RigidBodyState(R0, M0), 22)
    for t in np.linspace(0, 1, 11):
        out = lie_series_evaluate(jet, t)
        assert np.max(np.abs(out.R - axis_angle(R0, M0, lam, t))) < 1e-12
        # each row rotates about M0 by the angle t |M0| / lam
        assert_allclose(out.a, axis_angle(R0, M0, lam, t)[0], atol=1e-12)


def test_evaluate_matches_rk4():
    st_ = RigidBodyState(np.eye(3), [1, 1, 1])
    jet = taylor_jet(I_ASYM, st_, 20)
    ref = rk4_integrate(I_ASYM, st_, 0.5, 1e-4)
    out = lie_series_evaluate(jet, 0.5)
    assert np.max(np.abs(out.as_vector() - ref.state(-1).as_vector())) < 1e-9


def test_series_truncation_sanity(rng):
    for _ in range(10):
        st_ = RigidBodyState(random_rotation(rng), rng.normal(size=3))
        N = int(rng.integers(4, 14))
        t = float(rng.uniform(-0.5, 0.5))
        hi = taylor_jet(I_ASYM, st_, N + 2)
        lo = taylor_jet(I_ASYM, st_, N)
        diff = lie_series_evaluate(hi, t).as_vector() - lie_series_evaluate(lo, t).as_vector()
        term = np.concatenate([hi.coeffs_R[N + 1].ravel(), hi.coeffs_M[N + 1]]) * t ** (N + 1)
        assert np.linalg.norm(diff) <= 1.5 * np.linalg.norm(term) + 1e-15


def test_lie_spherical_top_long_run(rng):
    lam = 2.0
    R0 = random_rotation(rng)
    M0 = np.array([1.0, 0.5, -0.7])
    traj = integrate_lie([lam] * 3, RigidBodyState(R0, M0), 10.0, 0.1, 16)
    assert len(traj) == 101
    assert np.max(np.abs(traj.M - M0)) < 1e-14
    err = max(np.max(np.abs(traj.R[i] - axis_angle(R0, M0, lam, t))) for i, t in enumerate(traj.times))
    assert err < 1e-10


def test_lie_principal_axis_spin():
    traj = integrate_lie(I_ASYM, RigidBodyState(np.eye(3), [3, 0, 0]), 5.0, 0.1, 16)
    assert_array_equal(traj.M, np.tile([3.0, 0, 0], (len(traj), 1)))
    # uniform rotation about e1 at rate 3 / 2
    for t, R in zip(traj.times, traj.R):
        assert_allclose(R, axis_angle(np.eye(3), [3, 0, 0], 2.0, t), atol=1e-12)


def test_lie_energy_audit():
    traj = integrate_lie(I_ASYM, RigidBodyState(np.eye(3), [1, 1, 1]), 10.0, 0.1, 16)
    H = traj.energy
    assert np.max(np.abs(H - H[0])) / H[0] < 1e-10


def test_lie_step_rejected():
    with pytest.raises(StepRejected) as info:
        integrate_lie(I_ASYM, RigidBodyState(np.eye(3), [1, 1, 1]), 10.0, 5.0, 16)
    assert 0 < info.value.suggested_step < 5.0
    # the suggestion is accepted
    integrate_lie(I_ASYM, RigidBodyState(np.eye(3), [1, 1, 1]), 10.0, info.value.suggested_step, 16)


def test_lie_argument_checks():
    st_ = RigidBodyState(np.eye(3), [1, 1, 1])
    with pytest.raises(ContractViolation):
        integrate_lie(I_ASYM, st_, 1.0, 0.1, 3)
    with pytest.raises(ContractViolation):
        integrate_lie(I_ASYM, st_, 1.0, -0.1, 8)
    with pytest.raises(ContractViolation):
        taylor_jet(I_ASYM, st_, 0)


def test_uneven_final_step():
    traj = integrate_lie(I_ASYM, RigidBodyState(np.eye(3), [1, 1, 1]), 1.05, 0.1, 16)
    assert traj.times[-1] == 1.05 and len(traj) == 12
    ref = rk4_integrate(I_ASYM, RigidBodyState(np.eye(3), [1, 1, 1]), 1.05, 1e-3)
    assert np.max(np.abs(traj.M[-1] - ref.M[-1])) < 1e-10


def test_rk4_spherical_top():
    M0 = np.array([0.3, 0.4, -2.0])
    traj = rk4_integrate([1.3] * 3, RigidBodyState(np.eye(3), M0), 5.0, 0.01)
    assert np.max(np.abs(traj.M[-1] - M0)) < 1e-12


def test_rk4_fourth_order():
    st_ = RigidBodyState(np.eye(3), [1, 1, 1])
    ref = lie_series_evaluate(taylor_jet(I_ASYM, st_, 30), 1.0).as_vector()
    errs = [np.max(np.abs(rk4_integrate(I_ASYM, st_, 1.0, h).state(-1).as_vector() - ref)) for h in (0.1, 0.05)]
    assert 12 < errs[0] / errs[1] < 20


def test_lie_and_rk4_agree():
    st_ = RigidBodyState(np.eye(3), [1, 1, 1])
    a = integrate_lie(I_ASYM, st_, 2.0, 0.1, 16)
    b = rk4_integrate(I_ASYM, st_, 2.0, 1e-3)
    assert np.max(np.abs(a.M[-1] - b.M[-1])) < 1e-10
    assert np.max(np.abs(a.R[-1] - b.R[-1])) < 1e-10


def test_time_reversal(rng):
    st_ = RigidBodyState(random_rotation(rng), rng.normal(size=3))
    T = 3.0
    fwd = integrate_lie(I_ASYM, st_, T, 0.1, 16)
    end = fwd.state(-1)
    back = integrate_lie(I_ASYM, RigidBodyState(end.R, -end.M), T, 0.1, 16)
    ref = rk4_integrate(I_ASYM, st_, T, 1e-3)
    one_way = max(np.max(np.abs(fwd.state(-1).as_vector() - ref.state(-1).as_vector())), 1e-15)
    ret = np.concatenate([back.R[-1].ravel(), -back.M[-1]])
    assert np.max(np.abs(ret - st_.as_vector())) < 10 * one_way + 1e-13


def test_invariants_report_constant_trajectory():
    R = np.tile(np.eye(3), (5, 1, 1))
    M = np.tile([3.0, 0, 0], (5, 1))
    rep = invariants_report(Trajectory(I_ASYM, np.arange(5.0), R, M))
    assert all(v == 0 for v in rep.as_dict().values())


def test_invariants_report_rk4_regression():
    traj = rk4_integrate(I_ASYM, RigidBodyState(np.eye(3), [1, 1, 1]), 10.0, 1e-3)
    assert all(v < 1e-8 for v in invariants_report(traj).as_dict().values())


def test_invariants_report_detects_corruption():
    traj = rk4_integrate(I_ASYM, RigidBodyState(np.eye(3), [1, 1, 1]), 1.0, 0.1)
    traj.R[3] *= 1.01
    assert invariants_report(traj).orthogonality_defect > 1e-3


def test_trajectory_requires_increasing_times():
    with pytest.raises(ContractViolation):
        Trajectory(I_ASYM, [0.0, 0.0], np.tile(np.eye(3), (2, 1, 1)), np.zeros((2, 3)))


def test_project_to_so3(rng):
    R = random_rotation(rng)
    noisy = R + 1e-3 * rng.normal(size=(3, 3))
    P = project_to_so3(noisy)
    assert_allclose(P.T @ P, np.eye(3), atol=1e-14)
    assert np.linalg.det(P) > 0
    assert np.max(np.abs(P - R)) < 1e-2
