import numpy as np
import pytest

from rsqp.qp import (
    DimensionMismatch,
    Infeasible,
    QpProblem,
    build_control_qp,
    solve,
)

from oracles import random_feasible_qp, solve_qp_projected_gradient


def objective(H, g, x):
    return 0.5 * x @ H @ x + g @ x


def test_unconstrained():
    c = np.array([1.0, -2.0, 3.0])
    p = QpProblem(H=np.eye(3), g=-c, A=np.zeros((0, 3)), lb=np.zeros(0), ub=np.zeros(0))
    sol = solve(p)
    assert np.allclose(sol.x, c, atol=1e-12)
    assert sol.kkt_residual < 1e-10


def test_clipped_scalar():
    # H=I, g=(-2), bounds [-1, 1] -> x* = 1
    p = QpProblem(H=np.eye(1), g=np.array([-2.0]), A=np.array([[1.0]]),
                  lb=np.array([-1.0]), ub=np.array([1.0]))
    sol = solve(p)
    assert np.isclose(sol.x[0], 1.0, atol=1e-10)
    assert sol.active_set == [(0, 1)]


def test_lower_bound_activation():
    p = QpProblem(H=np.eye(1), g=np.array([3.0]), A=np.array([[1.0]]),
                  lb=np.array([-1.0]), ub=np.array([1.0]))
    sol = solve(p)
    assert np.isclose(sol.x[0], -1.0, atol=1e-10)
    assert sol.active_set == [(0, -1)]


def test_random_instances_match_slow_oracle():
    rng = np.random.default_rng(7)
    for trial in range(60):
        H, g, A, lb, ub = random_feasible_qp(rng)
        p = QpProblem(H=H, g=g, A=A, lb=lb, ub=ub)
        sol = solve(p)
        assert sol.kkt_residual < 1e-6, trial
        Ax = A @ sol.x
        assert np.all(Ax >= lb - 1e-8) and np.all(Ax <= ub + 1e-8)
        x_ref = solve_qp_projected_gradient(H, g, A, lb, ub)
        assert objective(H, g, sol.x) <= objective(H, g, x_ref) + 1e-6
        assert abs(objective(H, g, sol.x) - objective(H, g, x_ref)) < 1e-6


def test_deterministic():
    rng = np.random.default_rng(3)
    H, g, A, lb, ub = random_feasible_qp(rng)
    p = QpProblem(H=H, g=g, A=A, lb=lb, ub=ub)
    x1 = solve(p).x
    x2 = solve(p).x
    assert np.array_equal(x1, x2)


def test_warm_start_fast_path():
    rng = np.random.default_rng(5)
    H, g, A, lb, ub = random_feasible_qp(rng)
    p = QpProblem(H=H, g=g, A=A, lb=lb, ub=ub)
    cold = solve(p)
    warm = solve(p, warm_start=cold.active_set)
    assert np.allclose(cold.x, warm.x, atol=1e-9)
    assert warm.iterations <= 2
    # a nearby problem warm-started from the old active set still solves
    g2 = g + 0.01 * rng.normal(size=g.shape)
    p2 = QpProblem(H=H, g=g2, A=A, lb=lb, ub=ub)
    w2 = solve(p2, warm_start=cold.active_set)
    c2 = solve(p2)
    assert np.allclose(w2.x, c2.x, atol=1e-8)


def test_infeasible_raises():
    # x <= -1 and x >= 1 cannot hold together
    p = QpProblem(H=np.eye(1), g=np.zeros(1), A=np.array([[1.0], [1.0]]),
                  lb=np.array([-5.0, 1.0]), ub=np.array([-1.0, 5.0]))
    with pytest.raises(Infeasible):
        solve(p)


def test_problem_validation():
    with pytest.raises(Exception):
        QpProblem(H=np.diag([1.0, -1.0]), g=np.zeros(2), A=np.zeros((0, 2)),
                  lb=np.zeros(0), ub=np.zeros(0))  # not PD
    with pytest.raises(ValueError):
        QpProblem(H=np.eye(1), g=np.zeros(1), A=np.array([[1.0]]),
                  lb=np.array([2.0]), ub=np.array([1.0]))  # lb > ub


def test_build_single_task_exact():
    rng = np.random.default_rng(11)
    J = rng.normal(size=(6, 6)) + 3 * np.eye(6)
    b = rng.normal(size=6)
    p = build_control_qp([(J, b, 1.0)], [])
    sol = solve(p)
    assert np.allclose(J @ sol.x, b, atol=1e-5)  # within rho regularization


def test_build_two_conflicting_tasks_least_squares():
    rng = np.random.default_rng(13)
    J1, b1 = rng.normal(size=(3, 4)), rng.normal(size=3)
    J2, b2 = rng.normal(size=(3, 4)), rng.normal(size=3)
    p = build_control_qp([(J1, b1, 1.0), (J2, b2, 1.0)], [])
    sol = solve(p)
    # normal-equations solution of the stacked system
    Js = np.vstack([J1, J2])
    bs = np.concatenate([b1, b2])
    x_ls = np.linalg.solve(Js.T @ Js + 1e-8 * np.eye(4), Js.T @ bs)
    assert np.allclose(sol.x, x_ls, atol=1e-8)


def test_build_torque_row_kkt():
    # a binding "torque" row M x + h <= tau_max is attained exactly
    rng = np.random.default_rng(17)
    n = 4
    B = rng.normal(size=(n, n))
    M = B @ B.T + n * np.eye(n)
    h = rng.normal(size=n)
    tau_max = np.full(n, 1.0)
    # task asks for a large acceleration along e_0
    J = np.eye(n)
    b = np.full(n, 50.0)
    p = build_control_qp([(J, b, 1.0)], [(M, -tau_max - h, tau_max - h)])
    sol = solve(p)
    tau = M @ sol.x + h
    assert np.all(tau <= tau_max + 1e-6)
    binding = np.isclose(tau, tau_max, atol=1e-6)
    assert binding.any()


def test_build_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        build_control_qp([(np.eye(3), np.zeros(2), 1.0)], [])


def test_removing_constraints_recovers_least_squares():
    rng = np.random.default_rng(19)
    for _ in range(10):
        H, g, A, lb, ub = random_feasible_qp(rng, m=8, k=12)
        p_con = QpProblem(H=H, g=g, A=A, lb=lb, ub=ub)
        p_free = QpProblem(H=H, g=g, A=np.zeros((0, 8)), lb=np.zeros(0), ub=np.zeros(0))
        x_free = solve(p_free).x
        assert np.allclose(x_free, np.linalg.solve(H, -g), atol=1e-8)
        # if the free optimum is feasible, constrained solve returns it
        Ax = A @ x_free
        if np.all(Ax <= ub) and np.all(Ax >= lb):
            assert np.allclose(solve(p_con).x, x_free, atol=1e-8)
