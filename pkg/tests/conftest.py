import numpy as np
import pytest

import nonlocalwave as nlw


def random_smooth_problem(rng, m=8, T=1.0):
    """Random diagonal plus small time-modulated symmetric coupling."""
    lam = np.sort(rng.uniform(0.0, 9.0, m))
    base = np.diag(lam)
    sym = rng.standard_normal((m, m)) * 0.1
    sym = 0.5 * (sym + sym.T)
    freq = rng.uniform(0.5, 2.0)

    def a_of_t(t):
        return base + np.sin(freq * t) * sym
    op = nlw.undamped_operator(a_of_t, m)
    u0 = rng.standard_normal(m)
    u1 = rng.standard_normal(m)
    amp = rng.standard_normal(m)

    def forcing(t):
        return amp * np.cos(freq * t + 0.3)
    return nlw.LinearProblem(op, u0, u1, forcing, T)


@pytest.fixture(scope="session")
def basis_pi8():
    return nlw.build_basis(nlw.interval(np.pi), 8)


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture(scope="session")
def diag_operator():
    lam = np.array([0.0, 1.0, 4.0, 9.0])
    return nlw.undamped_operator(lambda t, _A=np.diag(lam): _A, 4), lam


@pytest.fixture(scope="session")
def diag_fs(diag_operator):
    op, _ = diag_operator
    grid = np.linspace(0.0, 2.0, 21)
    return nlw.fundamental_solution(op, grid, h=1e-3)


@pytest.fixture(scope="session")
def neumann_solved():
    """The undamped Neumann scenario at its shipped defaults, solved once."""
    rz = nlw.realize(nlw.scenario_undamped_neumann())
    traj, report = nlw.solve_realization(rz)
    return rz, traj, report


@pytest.fixture(scope="session")
def population_solved():
    """The damped population scenario at its shipped defaults, solved once."""
    rz = nlw.realize(nlw.scenario_population())
    traj, report = nlw.solve_realization(rz)
    return rz, traj, report
