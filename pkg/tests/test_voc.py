import numpy as np
import pytest

import nonlocalwave as nlw
from nonlocalwave import ConfigurationError
from nonlocalwave.fixedpoint import gronwall_radius


def scalar_op(a, b=None):
    a_of_t = (lambda t: np.array([[a(t)]])) if callable(a) \
        else (lambda t: np.array([[float(a)]]))
    if b is None:
        return nlw.undamped_operator(a_of_t, 1)
    b_of_t = (lambda t: np.array([[b(t)]])) if callable(b) \
        else (lambda t: np.array([[float(b)]]))
    return nlw.damped_operator(a_of_t, b_of_t, 1)


@pytest.fixture(scope="module")
def harmonic_fs():
    op = scalar_op(1.0)
    grid = np.linspace(0.0, np.pi, 65)
    return op, nlw.fundamental_solution(op, grid, h=1e-3)


def test_homogeneous_solution_is_pure_propagation(harmonic_fs):
    op, fs = harmonic_fs
    p = nlw.LinearProblem(op, np.array([0.7]), np.array([-0.3]), None, np.pi)
    traj = nlw.solve_undamped(p, fs, fs.time_grid)
    for i in range(fs.n_nodes):
        expect = fs.C(i, 0) @ p.u0 + fs.S(i, 0) @ p.u1
        np.testing.assert_allclose(traj.u[i], expect, atol=1e-14)


def test_constant_forcing_closed_form(harmonic_fs):
    # u'' + u = 1, zero data: u(t) = 1 - cos t, u(pi) = 2
    op, fs = harmonic_fs
    p = nlw.LinearProblem(op, np.zeros(1), np.zeros(1),
                          lambda t: np.array([1.0]), np.pi)
    traj = nlw.solve_undamped(p, fs, fs.time_grid)
    assert abs(traj.u[-1, 0] - 2.0) < 1e-7
    np.testing.assert_allclose(traj.u[:, 0], 1.0 - np.cos(fs.time_grid),
                               atol=1e-7)


def test_zero_problem_gives_zero(harmonic_fs):
    op, fs = harmonic_fs
    p = nlw.LinearProblem(op, np.zeros(1), np.zeros(1), None, np.pi)
    traj = nlw.solve_undamped(p, fs, fs.time_grid)
    assert traj.sup_h_norm() == 0.0
    direct = nlw.direct_integrate(p, 1e-2)
    assert direct.sup_h_norm() == 0.0


def test_output_grid_must_refine_fs_grid(harmonic_fs):
    op, fs = harmonic_fs
    p = nlw.LinearProblem(op, np.zeros(1), np.zeros(1), None, np.pi)
    with pytest.raises(ConfigurationError):
        nlw.solve_undamped(p, fs, np.linspace(0, np.pi, 7))


def test_solver_kind_dispatch(harmonic_fs):
    op, fs = harmonic_fs
    p = nlw.LinearProblem(op, np.zeros(1), np.zeros(1), None, np.pi)
    with pytest.raises(ConfigurationError):
        nlw.solve_damped(p, fs, fs.time_grid)


def test_damped_critical_closed_form():
    op = scalar_op(1.0, 2.0)
    grid = np.linspace(0.0, 1.0, 41)
    fs = nlw.fundamental_solution(op, grid, h=1e-3)
    p = nlw.LinearProblem(op, np.array([1.0]), np.zeros(1), None, 1.0)
    traj = nlw.solve_damped(p, fs, grid)
    assert abs(traj.u[-1, 0] - 2.0 / np.e) < 1e-9
    np.testing.assert_allclose(traj.u[:, 0], (1 + grid) * np.exp(-grid),
                               atol=1e-9)


def test_damped_first_order_reduction_closed_form():
    # u'' + u' = 1, zero data: u(t) = t - 1 + exp(-t); u(1) = 1/e
    op = scalar_op(0.0, 1.0)
    grid = np.linspace(0.0, 1.0, 41)
    fs = nlw.fundamental_solution(op, grid, h=1e-3)
    p = nlw.LinearProblem(op, np.zeros(1), np.zeros(1),
                          lambda t: np.array([1.0]), 1.0)
    traj = nlw.solve_damped(p, fs, grid)
    assert abs(traj.u[-1, 0] - 1.0 / np.e) < 1e-7


def test_zero_damping_consistent_with_undamped_path():
    a_of_t = lambda t: np.array([[2.0 + np.sin(t)]])
    op_u = nlw.undamped_operator(a_of_t, 1)
    op_d = nlw.damped_operator(a_of_t, lambda t: np.zeros((1, 1)), 1)
    grid = np.linspace(0.0, 1.0, 21)
    fs_u = nlw.fundamental_solution(op_u, grid, h=1e-3)
    fs_d = nlw.fundamental_solution(op_d, grid, h=1e-3)
    forcing = lambda t: np.array([np.cos(2 * t)])
    pu = nlw.LinearProblem(op_u, np.array([0.4]), np.array([-0.2]), forcing, 1.0)
    pd = nlw.LinearProblem(op_d, np.array([0.4]), np.array([-0.2]), forcing, 1.0)
    tu = nlw.solve_undamped(pu, fs_u, grid)
    td = nlw.solve_damped(pd, fs_d, grid)
    assert np.abs(tu.u - td.u).max() < 1e-9


def test_resonance_closed_form_direct():
    # u'' + u = sin t: u(t) = (sin t - t cos t)/2, u(pi) = pi/2
    op = scalar_op(1.0)
    p = nlw.LinearProblem(op, np.zeros(1), np.zeros(1),
                          lambda t: np.array([np.sin(t)]), np.pi)
    grid = np.linspace(0.0, np.pi, 65)
    direct = nlw.direct_integrate(p, 1e-3, grid=grid)
    assert abs(direct.u[-1, 0] - np.pi / 2) < 1e-6
    fs = nlw.fundamental_solution(op, grid, h=1e-3)
    rep = nlw.solve_undamped(p, fs, grid)
    assert abs(rep.u[-1, 0] - np.pi / 2) < 1e-6


from conftest import random_smooth_problem


def test_oracle_equivalence_small_batch():
    grid = np.linspace(0.0, 1.0, 51)
    for seed in range(5):
        p = random_smooth_problem(np.random.default_rng(seed))
        fs = nlw.fundamental_solution(p.op, grid, h=1e-3)
        rep = nlw.solve_undamped(p, fs, grid)
        direct = nlw.direct_integrate(p, 1e-3, grid=grid)
        disagree = np.max(np.linalg.norm(rep.u - direct.u, axis=1))
        assert disagree < 1e-6


def test_linearity_superposition(rng):
    grid = np.linspace(0.0, 1.0, 51)
    p1 = random_smooth_problem(np.random.default_rng(7))
    op = p1.op
    fs = nlw.fundamental_solution(op, grid, h=1e-3)
    u0b, u1b = rng.standard_normal(8), rng.standard_normal(8)
    amp = rng.standard_normal(8)
    f2 = lambda t: amp * np.sin(t)
    p2 = nlw.LinearProblem(op, u0b, u1b, f2, 1.0)
    al, be = 0.6, -1.3
    p3 = nlw.LinearProblem(
        op, al * p1.u0 + be * p2.u0, al * p1.u1 + be * p2.u1,
        lambda t: al * p1.forcing(t) + be * p2.forcing(t), 1.0)
    t1 = nlw.solve_undamped(p1, fs, grid)
    t2 = nlw.solve_undamped(p2, fs, grid)
    t3 = nlw.solve_undamped(p3, fs, grid)
    assert np.abs(t3.u - (al * t1.u + be * t2.u)).max() < 1e-10


def test_gronwall_bound_for_linear_trajectories():
    grid = np.linspace(0.0, 1.0, 51)
    for seed in range(5):
        p = random_smooth_problem(np.random.default_rng(100 + seed))
        fs = nlw.fundamental_solution(p.op, grid, h=1e-3)
        traj = nlw.solve_undamped(p, fs, grid)
        sup = fs.sup_norms()
        b_l1 = np.trapezoid(
            [np.linalg.norm(p.forcing(t)) for t in grid], grid)
        radius = gronwall_radius(sup["C"], sup["S"],
                                 float(np.linalg.norm(p.u0)),
                                 float(np.linalg.norm(p.u1)),
                                 float(b_l1), 0.0, 1.0)
        assert traj.sup_h_norm() <= radius + 1e-8


def test_residual_exact_trajectory_second_order():
    op = scalar_op(1.0)
    errs = []
    for n in (33, 65):
        grid = np.linspace(0.0, np.pi, n)
        traj = nlw.Trajectory(grid, np.cos(grid)[:, None],
                              -np.sin(grid)[:, None])
        r = nlw.residual(traj, op, None, np.array([1.0]), np.array([0.0]))
        errs.append(r.equation)
        assert r.ic_u == 0.0 and r.ic_v == 0.0
    assert 3.0 < errs[0] / errs[1] < 5.0     # one halving: ~4x


def test_residual_of_solver_output():
    # default-resolution grid: fine enough that the second-difference floor
    # sits below 1e-4
    op = scalar_op(1.0)
    grid = np.linspace(0.0, np.pi, 257)
    fs = nlw.fundamental_solution(op, grid, h=1e-3)
    p = nlw.LinearProblem(op, np.array([1.0]), np.zeros(1),
                          lambda t: np.array([np.sin(2 * t)]), np.pi)
    traj = nlw.solve_undamped(p, fs, grid)
    r = nlw.residual(traj, op, p.forcing, p.u0, p.u1)
    assert r.equation < 1e-4
    assert r.ic_u < 1e-12 and r.ic_v < 1e-12


def test_residual_zero_everything():
    op = scalar_op(1.0)
    grid = np.linspace(0.0, 1.0, 11)
    traj = nlw.zero_trajectory(grid, 1)
    r = nlw.residual(traj, op, None, np.zeros(1), np.zeros(1))
    assert r.equation == 0.0 and r.ic_u == 0.0 and r.ic_v == 0.0


def test_residual_semilinear_right_side(harmonic_fs):
    op, fs = harmonic_fs
    grid = fs.time_grid
    traj = nlw.Trajectory(grid, np.cos(grid)[:, None], -np.sin(grid)[:, None])
    # residual against f(t, u) = u - cos(t) + ... checks the two-arg path
    r = nlw.residual(traj, op, lambda t, u: u - np.cos(t) + np.cos(t) * u * 0)
    r2 = nlw.residual(traj, op, lambda t: np.array([0.0]))
    assert abs(r.equation - r2.equation) < 1e-12
