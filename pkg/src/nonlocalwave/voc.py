"""Linear inhomogeneous solves via variation of constants, plus the
direct-integration oracle and a discrete residual certifier.

The representation path evaluates

    u(t) = C(t,0) u0 + S(t,0) u1 + int_0^t S(t,s) f(s) ds

(with v1, v2 for damped problems) using tabulated blocks and composite
quadrature on the fundamental-solution grid; velocities come from the
derivative blocks, never from differencing the u-track.  The oracle path
integrates the full inhomogeneous block system with the same one-step
method but no tables, giving an independent cross-check.
"""

from __future__ import annotations

import inspect
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import quadrature
from .errors import ConfigurationError
from .propagator import _Stepper
from .spectral import Trajectory


@dataclass
class LinearProblem:
    """u'' + B(t)u' + A(t)u = f(t) with plain initial data (u0, u1)."""

    op: object
    u0: np.ndarray
    u1: np.ndarray
    forcing: Callable | None
    horizon: float

    def __post_init__(self):
        dt = np.result_type(np.asarray(self.u0).dtype,
                            np.asarray(self.u1).dtype, float)
        self.u0 = np.asarray(self.u0, dtype=dt)
        self.u1 = np.asarray(self.u1, dtype=dt)
        if self.u0.shape != (self.op.dim,) or self.u1.shape != (self.op.dim,):
            raise ConfigurationError("initial data do not match the operator dim")
        if self.horizon <= 0:
            raise ConfigurationError("horizon must be positive")


def _grid_indices(fs, grid):
    grid = np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) <= 0):
        raise ConfigurationError("output grid must be strictly increasing")
    try:
        return grid, [fs.node_index(t) for t in grid]
    except ConfigurationError:
        raise ConfigurationError(
            "output grid must be a subset of the fundamental-solution grid; "
            "rebuild the tables on a refinement of the requested grid") from None


def single_interval_duhamel(fs, op, i, j0, F, dt):
    """Endpoint-corrected trapezoid for int_{t_j0}^{t_i} S(t_i,s)F(s)ds, i = j0+1.

    The plain trapezoid here is only third-order accurate, which the
    residual's second differences would amplify; the Euler-Maclaurin
    derivative correction restores smooth O(dt^5) startup error.  The
    s-derivative of S comes from the backward identity dE/ds = -E G(s).
    """
    m = fs.m
    q0 = fs.S(i, j0) @ F[j0]                      # S(t_i, t_i) F = 0 at s = t_i
    if j0 + 2 < F.shape[0]:
        fp0 = (-3.0 * F[j0] + 4.0 * F[j0 + 1] - F[j0 + 2]) / (2.0 * dt)
    else:
        fp0 = (F[j0 + 1] - F[j0]) / dt
    ds_s = -fs.C(i, j0)
    if op.b_of_t is not None:
        ds_s = fs.S(i, j0) @ np.asarray(op.b_of_t(fs.time_grid[j0])) - fs.C(i, j0)
    q1p = -F[i]
    q0p = ds_s @ F[j0] + fs.S(i, j0) @ fp0
    return 0.5 * dt * q0 - dt ** 2 / 12.0 * (q1p - q0p)


def _representation(p, fs, grid):
    grid, idx = _grid_indices(fs, grid)
    m = p.op.dim
    N = grid.size
    F = None
    dt = p.u0.dtype
    if p.forcing is not None:
        F = np.array([np.asarray(p.forcing(t)) for t in fs.time_grid])
        dt = np.result_type(dt, F.dtype)
    u = np.empty((N, m), dtype=dt)
    v = np.empty((N, m), dtype=dt)
    for out_i, gi in enumerate(idx):
        uu = fs.C(gi, 0) @ p.u0 + fs.S(gi, 0) @ p.u1
        vv = fs.dC(gi, 0) @ p.u0 + fs.dS(gi, 0) @ p.u1
        if F is not None and gi > 0:
            sub = fs.time_grid[: gi + 1]
            w = quadrature.composite_weights(sub)
            wF = w[:, None] * F[: gi + 1]
            row = fs.row(gi)       # (gi+1, 2m, 2m)
            if gi == 1:
                uu = uu + single_interval_duhamel(fs, p.op, gi, 0, F,
                                                  sub[1] - sub[0])
            else:
                uu = uu + np.einsum("jab,jb->a", row[:, :m, m:], wF)
            vv = vv + np.einsum("jab,jb->a", row[:, m:, m:], wF)
        u[out_i] = uu
        v[out_i] = vv
    return Trajectory(grid, u, v)


def solve_undamped(p, fs, grid):
    """Representation-formula solve on ``grid`` (each node must be an fs node)."""
    if fs.kind != "undamped":
        raise ConfigurationError("solve_undamped needs an undamped family")
    return _representation(p, fs, grid)


def solve_damped(p, fs, grid):
    """Damped representation u = v1 u0 + v2 u1 + int v2(t,s) f(s) ds."""
    if fs.kind != "damped":
        raise ConfigurationError("solve_damped needs a damped family")
    return _representation(p, fs, grid)


def solve(p, fs, grid):
    """Dispatch on the family kind."""
    return _representation(p, fs, grid)


def direct_integrate(p, h, grid=None):
    """Integrate the full inhomogeneous block system; the oracle path.

    ``grid`` defaults to a uniform grid of step ~h over the horizon.  The
    integrator substeps between output nodes with steps of size <= h.
    """
    if h <= 0:
        raise ConfigurationError("step h must be positive")
    if grid is None:
        n = max(1, int(np.ceil(p.horizon / h - 1e-12)))
        grid = np.linspace(0.0, p.horizon, n + 1)
    else:
        grid = np.asarray(grid, dtype=float)
    m = p.op.dim
    forcing = None
    if p.forcing is not None:
        forcing = lambda t: np.asarray(p.forcing(t))
    stepper = _Stepper(p.op, forcing)
    state = np.concatenate([p.u0, p.u1])
    if forcing is not None:
        state = state.astype(np.result_type(state.dtype, forcing(0.0).dtype))
    u = np.empty((grid.size, m), dtype=state.dtype)
    v = np.empty((grid.size, m), dtype=state.dtype)
    u[0], v[0] = p.u0, p.u1
    from .errors import PropagationError
    for i in range(1, grid.size):
        t0, t1 = grid[i - 1], grid[i]
        n = max(1, int(np.ceil((t1 - t0) / h - 1e-12)))
        dt = (t1 - t0) / n
        for k in range(n):
            state = stepper.step(t0 + k * dt, dt, state)
            if not np.all(np.isfinite(state)):
                raise PropagationError(
                    f"direct integration diverged at step {k} after t={t0:.6g}",
                    time=t0 + (k + 1) * dt, step_index=k)
        u[i], v[i] = state[:m], state[m:]
    return Trajectory(grid, u, v)


@dataclass
class ResidualReport:
    equation: float     # discrete L2(0,T;H) norm of u'' + B u' + A u - f
    ic_u: float         # |u(0) - u0|_H
    ic_v: float         # |u'(0) - u1|_H


def _rhs_adapter(rhs):
    if rhs is None:
        return lambda t, u: 0.0
    params = [p for p in inspect.signature(rhs).parameters.values()
              if p.kind in (p.POSITIONAL_ONLY, p.POSITIONAL_OR_KEYWORD)]
    if len(params) >= 2:
        return rhs
    return lambda t, u: rhs(t)


def residual(traj, op, rhs=None, u0=None, u1=None):
    """Discrete residual of u'' + B(t)u' + A(t)u = f along a trajectory.

    The second derivative is the three-point second difference of the
    u-track (so the residual of an exact solution decays like the square of
    the grid step); the damping term uses the trajectory's velocity track.
    ``rhs`` may be f(t) or a semilinear f(t, u).
    """
    grid = traj.grid
    if grid.size < 3:
        raise ConfigurationError("residual needs at least three grid nodes")
    dt = quadrature.require_uniform(grid)
    f = _rhs_adapter(rhs)
    total = 0.0
    for i in range(1, grid.size - 1):
        t = grid[i]
        udd = (traj.u[i + 1] - 2.0 * traj.u[i] + traj.u[i - 1]) / dt ** 2
        r = udd + np.asarray(op.a_of_t(t)) @ traj.u[i] - f(t, traj.u[i])
        if op.b_of_t is not None:
            r = r + np.asarray(op.b_of_t(t)) @ traj.v[i]
        total += float(np.sum(np.abs(r) ** 2)) * dt
    eq = float(np.sqrt(total))
    ic_u = 0.0 if u0 is None else float(np.linalg.norm(traj.u[0] - u0))
    ic_v = 0.0 if u1 is None else float(np.linalg.norm(traj.v[0] - u1))
    return ResidualReport(eq, ic_u, ic_v)
