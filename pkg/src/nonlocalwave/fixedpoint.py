"""Nonlocal initial-condition operators, superposition, and the two
fixed-point engines.

Both engines iterate on trajectories in C([0,T]; H_m) (sup norm).  The
contraction engine realises the map

    (P w)(t) = v1(t,0) g(w) + v2(t,0) h(w) + int_0^t v2(t,s) f(s, w(s)) ds

predicting its contraction coefficient q = (M1 Lg + M2 Lh) sqrt(T) + L M_2T
from measured block bounds and certified kernel constants; when q >= 1 and
the Duhamel part is reducible it concatenates sub-interval solves of length
T* chosen so the local coefficient stays below a safety threshold.  The
relaxed engine damps the iteration and falls back to homotopy continuation
in w = lambda T(w), reporting the reachable lambda honestly when it stalls.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import forms, quadrature, voc
from .errors import ConfigurationError, NonconvergenceError
from .expressions import Expression, as_expression
from .spectral import Trajectory, project, zero_trajectory


@dataclass
class NonlocalKernel:
    """g(u) = int_0^T kappa(s, .) u(s, .) ds + offset."""

    evaluator: Callable          # (s, x, y) -> values
    horizon: float
    offset: object = None        # spatial callable/Expression/coeff array/None
    expression: Expression | None = None
    offset_source: str | None = None

    def offset_coeffs(self, basis):
        if self.offset is None:
            return np.zeros(basis.m)
        if isinstance(self.offset, np.ndarray):
            if self.offset.shape != (basis.m,):
                raise ConfigurationError("offset coefficients do not match basis")
            return self.offset
        if isinstance(self.offset, Expression):
            e = self.offset
            return project(basis, lambda x, y=None:
                           np.broadcast_to(e(t=0.0, x=x,
                                             y=0.0 if y is None else y),
                                           np.shape(x)))
        return project(basis, self.offset)


def nonlocal_kernel(expr, horizon, offset=None):
    """Kernel from an expression (time variable written as t) or callable."""
    if callable(expr) and not isinstance(expr, (Expression, str)):
        return NonlocalKernel(lambda s, x, y=None: expr(s, x, y), horizon, offset)
    e = as_expression(expr)
    off = offset
    off_src = None
    if isinstance(offset, (str, Expression)):
        off = as_expression(offset)
        off_src = off.source
    return NonlocalKernel(
        lambda s, x, y=None: e(t=s, x=x, y=0.0 if y is None else y),
        horizon, off, expression=e, offset_source=off_src)


def apply_kernel(kernel, traj, basis):
    """Composite time quadrature of kappa(s,.) u(s,.), projected, plus offset."""
    grid = traj.grid
    if grid.size < 5:
        raise ConfigurationError(
            "trajectory grid too coarse for the kernel quadrature (need >= 5 nodes)")
    if abs(grid[0]) > 1e-12 or abs(grid[-1] - kernel.horizon) > 1e-9:
        raise ConfigurationError("trajectory must cover [0, T] of the kernel")
    w = quadrature.composite_weights(grid)
    expr = kernel.expression
    if expr is not None and not (expr.depends_on("x") or expr.depends_on("y")):
        scal = np.array([float(expr(t=s)) for s in grid])
        integ = (w * scal)[:, None] * traj.u
        return integ.sum(axis=0) + kernel.offset_coeffs(basis)
    out = np.zeros(basis.m)
    for i, s in enumerate(grid):
        vals = np.broadcast_to(
            np.asarray(kernel.evaluator(s, basis.nodes_x, basis.nodes_y),
                       dtype=float), basis.nodes_x.shape)
        K = (basis.eval_table * (basis.weights * vals)) @ basis.eval_table.T
        out += w[i] * (K @ traj.u[i])
    return out + kernel.offset_coeffs(basis)


@dataclass
class Nonlinearity:
    """f(t, u) acting on coefficient vectors, with declared constants.

    ``kind`` is 'lipschitz' (uniformly Lipschitz in u, constant L) or
    'growth' (sublinear growth |f(t,u)| <= a |u| + b(t)).
    """

    evaluator: Callable           # (t, coeffs) -> coeffs
    kind: str
    growth_a: float = 0.0
    growth_b: Callable = None
    lipschitz: float | None = None
    name: str = "custom"

    def __post_init__(self):
        if self.kind not in ("lipschitz", "growth"):
            raise ConfigurationError(f"unknown nonlinearity kind {self.kind!r}")
        if self.growth_b is None:
            self.growth_b = lambda t: 0.0

    def ball_growth(self, m):
        """(a, b) pair used for the a-priori trajectory ball."""
        if self.kind == "growth":
            return self.growth_a, self.growth_b
        L = self.lipschitz or 0.0
        zero = np.zeros(m)
        return L, lambda t: float(np.linalg.norm(self.evaluator(t, zero)))


def zero_nonlinearity():
    return Nonlinearity(lambda t, u: np.zeros_like(u), "lipschitz",
                        growth_a=0.0, lipschitz=0.0, name="none")


def linear_nonlinearity(rho):
    """f(t, u) = rho * u, mainly for closed-form fixtures."""
    return Nonlinearity(lambda t, u: rho * u, "lipschitz",
                        growth_a=abs(rho), lipschitz=abs(rho), name="linear")


def pointwise_nonlinearity(basis, fn, kind, growth_a=None, lipschitz=None,
                           name="custom", growth_b=None):
    """Superposition f(t,u)(x) = fn(t, u(x)) realised through quadrature."""
    def evaluator(t, coeffs):
        return project(basis, fn(t, basis.evaluate(coeffs)))
    return Nonlinearity(evaluator, kind, growth_a=growth_a or 0.0,
                        growth_b=growth_b, lipschitz=lipschitz, name=name)


def with_extra_forcing(nl, extra, extra_b=None):
    """Add a time-dependent forcing term (manufactured-solution hook)."""
    def evaluator(t, coeffs):
        return nl.evaluator(t, coeffs) + extra(t)
    base_b = nl.growth_b

    def growth_b(t):
        add = extra_b(t) if extra_b is not None else float(np.linalg.norm(extra(t)))
        return base_b(t) + add
    return Nonlinearity(evaluator, nl.kind, growth_a=nl.growth_a,
                        growth_b=growth_b, lipschitz=nl.lipschitz,
                        name=nl.name + "+forcing")


def growth_excess(nl, traj, values=None):
    """Largest violation of |f(t,u)| <= a|u| + b(t) along a trajectory."""
    a, b = nl.ball_growth(traj.m) if nl.kind == "lipschitz" else \
        (nl.growth_a, nl.growth_b)
    if values is None:
        values = superpose(nl, traj)
    worst = 0.0
    for i, t in enumerate(traj.grid):
        bound = a * float(np.linalg.norm(traj.u[i])) + float(b(t))
        worst = max(worst, float(np.linalg.norm(values[i])) - bound)
    return worst


def validate_growth(nl, m, horizon, rng, probes=20, radius=2.0, tol=1e-9):
    """Sample random coefficient vectors and check the declared growth bound."""
    a, b = (nl.growth_a, nl.growth_b) if nl.kind == "growth" else \
        nl.ball_growth(m)
    worst = 0.0
    for _ in range(probes):
        t = float(rng.uniform(0.0, horizon))
        u = rng.standard_normal(m) * radius
        worst = max(worst, float(np.linalg.norm(nl.evaluator(t, u)))
                    - (a * float(np.linalg.norm(u)) + float(b(t))))
    if worst > tol:
        raise ConfigurationError(
            f"nonlinearity {nl.name!r} violates its declared growth bound "
            f"by {worst:.3e} on random probes")
    return worst


def superpose(nl, traj):
    """Pointwise-in-time application N_f(u)(t) = f(t, u(t)); rows per node."""
    return np.array([nl.evaluator(t, traj.u[i])
                     for i, t in enumerate(traj.grid)])


def gronwall_radius(m1, m2, r1, r2, b_l1, a, horizon):
    """(M1 r1 + M2 r2 + M2 |b|_L1) * exp(M2 a T)."""
    return (m1 * r1 + m2 * r2 + m2 * b_l1) * float(np.exp(m2 * a * horizon))


@dataclass
class NonlocalProblem:
    """Semilinear problem with nonlocal data u(0) = g(u), u'(0) = h(u)."""

    op: object
    basis: object
    kernel_g: NonlocalKernel
    kernel_h: NonlocalKernel
    nonlinearity: Nonlinearity
    horizon: float


@dataclass
class SolveConfig:
    tol: float = 1e-8
    max_iter: int = 200
    theta: float = 1.0
    safety: float = 0.9
    inner_tol: float | None = None
    inner_max_iter: int = 60
    homotopy: str = "auto"          # auto | always | never
    lambda_steps: int = 6
    min_lambda_step: float = 0.05
    probe_count: int = 8
    probe_radius: float = 2.0
    seed: int = 0
    ball_tol: float = 1e-6
    force_partition: int | None = None   # chunk count; consistency checks only


@dataclass
class FixedPointReport:
    method: str
    converged: bool
    iterations: int
    update_norms: list = field(default_factory=list)
    measured_ratio: float | None = None
    predicted_q: float | None = None
    q_nonlocal: float | None = None
    q_duhamel: float | None = None
    t_star: float | None = None
    partition: list | None = None
    m1: float = 0.0
    m2: float = 0.0
    m2t: float = 0.0
    l_g: float | None = None
    l_h: float | None = None
    lipschitz: float | None = None
    r1: float = 0.0
    r2: float = 0.0
    residual_equation: float | None = None
    residual_ic_u: float | None = None
    residual_ic_v: float | None = None
    gronwall_radius: float | None = None
    gronwall_ok: bool | None = None
    growth_excess: float = 0.0
    homotopy_path: list = field(default_factory=list)
    lambda_reached: float | None = None
    message: str = ""

    def to_dict(self):
        out = {}
        for k, v in self.__dict__.items():
            if isinstance(v, np.floating):
                v = float(v)
            out[k] = v
        return out


class _Representation:
    """Precomputed weights/views for evaluating the solution map on a grid."""

    def __init__(self, fs, op):
        self.fs = fs
        self.op = op
        self.grid = fs.time_grid
        self.m = fs.m
        n = self.grid.size
        self.weights = [None] + [quadrature.composite_weights(self.grid[: i + 1])
                                 for i in range(1, n)]
        self.rows = [fs.row(i) for i in range(n)]

    def evaluate(self, x0, y0, F, start=0, stop=None, u_out=None, v_out=None):
        """Fill u/v tracks for nodes start..stop from data frozen at `start`.

        F holds f-samples on the full grid; the Duhamel sum runs over
        [t_start, t_i] with composite weights on that subrange and the
        endpoint-corrected startup rule on the first interval.
        """
        fs, m = self.fs, self.m
        n = self.grid.size if stop is None else stop + 1
        if u_out is None:
            u_out = np.empty((self.grid.size, m))
            v_out = np.empty((self.grid.size, m))
        for i in range(start, n):
            E0 = fs.E(i, start)
            uu = E0[:m, :m] @ x0 + E0[:m, m:] @ y0
            vv = E0[m:, :m] @ x0 + E0[m:, m:] @ y0
            if i > start:
                w = quadrature.composite_weights(self.grid[start: i + 1]) \
                    if start else self.weights[i]
                wF = w[:, None] * F[start: i + 1]
                row = self.rows[i][start:]
                if i - start == 1:
                    uu = uu + voc.single_interval_duhamel(
                        fs, self.op, i, start, F,
                        self.grid[i] - self.grid[start])
                else:
                    uu = uu + np.einsum("jab,jb->a", row[:, :m, m:], wF)
                vv = vv + np.einsum("jab,jb->a", row[:, m:, m:], wF)
            u_out[i] = uu
            v_out[i] = vv
        return u_out, v_out


def _solution_map(problem, rep, w, x0, y0, partition=None, cfg=None):
    """One application of the solution map, optionally by concatenation."""
    F = superpose(problem.nonlinearity, w)
    u = np.empty((rep.grid.size, rep.m))
    v = np.empty((rep.grid.size, rep.m))
    if partition is None:
        rep.evaluate(x0, y0, F, u_out=u, v_out=v)
        return Trajectory(rep.grid, u, v)
    # forward concatenation with an inner Picard solve per sub-interval
    inner_tol = cfg.inner_tol if cfg.inner_tol is not None else 0.1 * cfg.tol
    xa, ya = x0, y0
    local = w.u.copy()
    for a, b in zip(partition[:-1], partition[1:]):
        for _ in range(cfg.inner_max_iter):
            rep.evaluate(xa, ya, F, start=a, stop=b, u_out=u, v_out=v)
            upd = float(np.max(np.linalg.norm(u[a:b + 1] - local[a:b + 1],
                                              axis=1)))
            local[a:b + 1] = u[a:b + 1]
            chunk = Trajectory(rep.grid[a:b + 1], u[a:b + 1], v[a:b + 1])
            F[a:b + 1] = superpose_window(problem.nonlinearity, chunk)
            if upd < inner_tol:
                break
        else:
            raise NonconvergenceError(
                f"inner iteration stalled on sub-interval [{rep.grid[a]:.4g}, "
                f"{rep.grid[b]:.4g}]")
        xa, ya = u[b], v[b]
    return Trajectory(rep.grid, u, v)


def superpose_window(nl, traj):
    return np.array([nl.evaluator(t, traj.u[i])
                     for i, t in enumerate(traj.grid)])


def _measured_ratio(updates, tol):
    ratios = [updates[i] / updates[i - 1]
              for i in range(3, len(updates))
              if updates[i - 1] > max(10.0 * tol, 1e-300)]
    return max(ratios) if ratios else None


def _finalise(problem, rep, w, report, cfg, sup_w, r1, r2):
    x = apply_kernel(problem.kernel_g, w, problem.basis)
    y = apply_kernel(problem.kernel_h, w, problem.basis)
    report.residual_ic_u = float(np.linalg.norm(w.u[0] - x))
    report.residual_ic_v = float(np.linalg.norm(w.v[0] - y))
    res = voc.residual(w, problem.op,
                       rhs=lambda t, u: problem.nonlinearity.evaluator(t, u))
    report.residual_equation = res.equation
    a, b = problem.nonlinearity.ball_growth(rep.m)
    b_l1 = float(quadrature.integrate(
        np.array([abs(b(t)) for t in rep.grid]), rep.grid))
    report.r1, report.r2 = max(r1, float(np.linalg.norm(x))), \
        max(r2, float(np.linalg.norm(y)))
    report.gronwall_radius = gronwall_radius(
        report.m1, report.m2, report.r1, report.r2, b_l1, a, problem.horizon)
    report.gronwall_ok = bool(
        max(sup_w, default=0.0) <= report.gronwall_radius + cfg.ball_tol)
    report.measured_ratio = _measured_ratio(report.update_norms, cfg.tol)


def _block_bounds(fs):
    m1 = max(np.linalg.norm(fs.C(i, 0), 2) for i in range(fs.n_nodes))
    m2 = max(np.linalg.norm(fs.S(i, 0), 2) for i in range(fs.n_nodes))
    return float(m1), float(m2), fs.duhamel_bound()


def contraction_solve(problem, fs, cfg=None):
    """Banach iteration with predicted coefficient and optional partition.

    Requires a uniformly Lipschitz nonlinearity and certified kernel
    constants.  When the predicted q is >= 1 but the nonlocal part alone
    stays below the safety threshold, the horizon is split into sub-intervals
    of length T* and each solution-map application solves them forward; when
    even the nonlocal part is >= the threshold, no partition is admissible
    and the global iteration runs anyway, reported honestly.  Divergence
    raises :class:`NonconvergenceError` carrying the iterate history.
    """
    cfg = cfg or SolveConfig()
    if problem.nonlinearity.lipschitz is None:
        raise ConfigurationError(
            "contraction_solve needs a Lipschitz nonlinearity with declared L")
    rep = _Representation(fs, problem.op)
    grid = rep.grid
    T = problem.horizon
    m1, m2, m2t = _block_bounds(fs)
    lg = forms.kernel_lipschitz(problem.kernel_g, problem.basis).into_h
    lh = forms.kernel_lipschitz(problem.kernel_h, problem.basis).into_h
    L = problem.nonlinearity.lipschitz
    q_nonlocal = (m1 * lg + m2 * lh) * np.sqrt(T)
    q_duhamel = L * m2t
    q = q_nonlocal + q_duhamel

    partition = None
    t_star = None
    message = ""
    if cfg.force_partition:
        stride = max(1, int(np.ceil((grid.size - 1) / cfg.force_partition)))
        partition = sorted(set(
            list(range(0, grid.size - 1, stride)) + [grid.size - 1]))
        t_star = stride * (grid[1] - grid[0])
        message = f"partition of {cfg.force_partition} chunks forced by config"
    elif q >= 1.0:
        if L > 0 and m2 > 0 and q_nonlocal <= cfg.safety:
            tau = (cfg.safety - q_nonlocal) / (L * m2)
            dt = grid[1] - grid[0]
            stride = max(1, int(np.floor(tau / dt + 1e-12)))
            if stride < grid.size - 1:
                idx = list(range(0, grid.size - 1, stride)) + [grid.size - 1]
                partition = sorted(set(idx))
                t_star = stride * dt
                message = (f"predicted q={q:.4g} >= 1; partitioned with "
                           f"T*={t_star:.4g}")
        if partition is None:
            message = (f"predicted q={q:.4g} >= 1 and the nonlocal part "
                       f"{q_nonlocal:.4g} is irreducible by partition; "
                       "running the global iteration")

    report = FixedPointReport(
        method="contraction", converged=False, iterations=0,
        predicted_q=float(q), q_nonlocal=float(q_nonlocal),
        q_duhamel=float(q_duhamel), t_star=t_star, partition=partition,
        m1=m1, m2=m2, m2t=m2t, l_g=lg, l_h=lh, lipschitz=L, message=message)

    w = zero_trajectory(grid, rep.m)
    sup_w = []
    r1 = r2 = 0.0
    for k in range(1, cfg.max_iter + 1):
        x0 = apply_kernel(problem.kernel_g, w, problem.basis)
        y0 = apply_kernel(problem.kernel_h, w, problem.basis)
        r1, r2 = max(r1, float(np.linalg.norm(x0))), \
            max(r2, float(np.linalg.norm(y0)))
        w_new = _solution_map(problem, rep, w, x0, y0, partition, cfg)
        upd = float(np.max(np.linalg.norm(w_new.u - w.u, axis=1)))
        if not np.isfinite(upd):
            report.iterations = k
            raise NonconvergenceError("iteration diverged to non-finite state",
                                      report=report)
        report.update_norms.append(upd)
        w = w_new
        sup_w.append(w.sup_h_norm())
        report.iterations = k
        if upd < cfg.tol:
            report.converged = True
            break
    report.growth_excess = growth_excess(problem.nonlinearity, w)
    _finalise(problem, rep, w, report, cfg, sup_w, r1, r2)
    if not report.converged:
        report.message += " | no convergence within max_iter"
        raise NonconvergenceError(
            f"contraction iteration did not converge in {cfg.max_iter} "
            f"iterations (last update {report.update_norms[-1]:.3e})",
            report=report)
    return w, report


def _picard(problem, rep, w, cfg, report, sup_w, scale=1.0, budget=None,
            tol=None):
    """Damped Picard phase; returns (w, converged, r1, r2).

    Stagnation is judged on this phase's own update norms, not the
    accumulated record, so homotopy stages do not see each other's tails.
    """
    tol = tol if tol is not None else cfg.tol
    budget = budget or cfg.max_iter
    r1 = r2 = 0.0
    local = []
    for _ in range(budget):
        x0 = apply_kernel(problem.kernel_g, w, problem.basis)
        y0 = apply_kernel(problem.kernel_h, w, problem.basis)
        r1, r2 = max(r1, float(np.linalg.norm(x0))), \
            max(r2, float(np.linalg.norm(y0)))
        target = _solution_map(problem, rep, w, x0, y0)
        if scale != 1.0:
            target = Trajectory(rep.grid, scale * target.u, scale * target.v)
        u_new = (1.0 - cfg.theta) * w.u + cfg.theta * target.u
        v_new = (1.0 - cfg.theta) * w.v + cfg.theta * target.v
        upd = float(np.max(np.linalg.norm(u_new - w.u, axis=1)))
        w = Trajectory(rep.grid, u_new, v_new)
        local.append(upd)
        report.update_norms.append(upd)
        report.iterations += 1
        sup_w.append(w.sup_h_norm())
        if not np.isfinite(upd):
            return w, False, r1, r2
        if upd < tol:
            return w, True, r1, r2
        if len(local) >= 10 and local[-1] > 0.98 * local[-5]:
            return w, False, r1, r2
    return w, False, r1, r2


def relaxed_solve(problem, fs, cfg=None):
    """Damped iteration w <- (1-theta) w + theta T(w), with homotopy fallback.

    Existence is what the theory guarantees; convergence of this scheme is
    not, so stagnation below lambda = 1 produces a partial report and raises
    :class:`NonconvergenceError` rather than failing silently.
    """
    cfg = cfg or SolveConfig()
    rep = _Representation(fs, problem.op)
    rng = np.random.default_rng(cfg.seed)
    m1, m2, m2t = _block_bounds(fs)

    report = FixedPointReport(method="relaxed", converged=False, iterations=0,
                              m1=m1, m2=m2, m2t=m2t)
    # bounds r1, r2 verified on random probe trajectories
    r1 = r2 = 0.0
    for _ in range(cfg.probe_count):
        probe = Trajectory(
            rep.grid,
            rng.standard_normal((rep.grid.size, rep.m)) * cfg.probe_radius,
            np.zeros((rep.grid.size, rep.m)))
        r1 = max(r1, float(np.linalg.norm(
            apply_kernel(problem.kernel_g, probe, problem.basis))))
        r2 = max(r2, float(np.linalg.norm(
            apply_kernel(problem.kernel_h, probe, problem.basis))))

    sup_w = []
    w = zero_trajectory(rep.grid, rep.m)
    converged = False
    if cfg.homotopy != "always":
        w, converged, p1, p2 = _picard(problem, rep, w, cfg, report, sup_w)
        r1, r2 = max(r1, p1), max(r2, p2)
        report.lambda_reached = 1.0 if converged else 0.0

    if not converged and cfg.homotopy != "never":
        lambdas = np.linspace(0.0, 1.0, cfg.lambda_steps)
        w = zero_trajectory(rep.grid, rep.m)   # exact fixed point at lambda 0
        report.homotopy_path.append((0.0, 0, 0.0))
        report.lambda_reached = 0.0
        i = 1
        lam_list = lambdas.tolist()
        while i < len(lam_list):
            lam = lam_list[i]
            trial, ok, p1, p2 = _picard(problem, rep, w.copy(), cfg, report,
                                        sup_w, scale=lam,
                                        budget=cfg.inner_max_iter)
            r1, r2 = max(r1, p1), max(r2, p2)
            if ok:
                w = trial
                report.lambda_reached = lam
                report.homotopy_path.append(
                    (float(lam), report.iterations,
                     float(report.update_norms[-1])))
                i += 1
                continue
            prev = lam_list[i - 1]
            if lam - prev > cfg.min_lambda_step:
                lam_list.insert(i, 0.5 * (prev + lam))
                continue
            report.message = (f"homotopy stalled at lambda="
                              f"{report.lambda_reached:.3g}")
            _finalise(problem, rep, w, report, cfg, sup_w, r1, r2)
            raise NonconvergenceError(report.message, report=report)
        converged = True

    report.converged = converged
    report.growth_excess = growth_excess(problem.nonlinearity, w)
    _finalise(problem, rep, w, report, cfg, sup_w, r1, r2)
    if not converged:
        raise NonconvergenceError("relaxed iteration did not converge",
                                  report=report)
    return w, report


@dataclass
class RefinementLevel:
    m: int
    basis: object
    fs: object
    trajectory: Trajectory | None
    report: FixedPointReport | None
    error: str | None = None


@dataclass
class RefinementRow:
    m: int
    converged: bool
    traj_diff: float
    fs_action_diff: float
    residual_equation: float | None


@dataclass
class ConvergenceTable:
    finest_m: int
    rows: list

    def diffs_nonincreasing(self):
        vals = [r.traj_diff for r in self.rows if np.isfinite(r.traj_diff)]
        return all(b <= a for a, b in zip(vals[:-1], vals[1:]))


def galerkin_refine(solve_level, m_list, probe_count=5, rng=None):
    """Refinement sweep: solve at each m, compare against the finest level.

    ``solve_level(m)`` must return a :class:`RefinementLevel` on a grid
    shared by all levels.  Reports L2(0,T;H) trajectory differences and the
    largest fundamental-solution action difference
    |S_m(t,s) P_m y - S_M(t,s) y| over stored pairs and random probes y.
    A level that fails to converge is marked and the sweep continues.
    """
    m_list = list(m_list)
    if len(m_list) < 2 or any(b < a for a, b in zip(m_list[:-1], m_list[1:])):
        raise ConfigurationError("m_list must be nondecreasing with >= 2 entries")
    rng = rng or np.random.default_rng(0)
    levels = []
    for m in m_list:
        try:
            levels.append(solve_level(m))
        except NonconvergenceError as exc:
            levels.append(RefinementLevel(m, None, None, None,
                                          getattr(exc, "report", None),
                                          error=str(exc)))
    finest = levels[-1]
    if finest.error is not None:
        raise NonconvergenceError(
            f"finest level m={finest.m} failed: {finest.error}")
    M = finest.m
    ys = rng.standard_normal((probe_count, M))
    ys /= np.linalg.norm(ys, axis=1, keepdims=True)
    rows = []
    for lev in levels[:-1]:
        if lev.error is not None:
            rows.append(RefinementRow(lev.m, False, float("nan"),
                                      float("nan"), None))
            continue
        diff_u = finest.trajectory.u.copy()
        diff_u[:, :lev.m] -= lev.trajectory.u
        traj_diff = quadrature.l2_time_norm(diff_u, finest.trajectory.grid)
        act = 0.0
        for y in ys:
            for i in range(lev.fs.n_nodes):
                for j in range(i + 1):
                    small = lev.fs.S(i, j) @ y[:lev.m]
                    big = finest.fs.S(i, j) @ y
                    big[:lev.m] -= small
                    act = max(act, float(np.linalg.norm(big)))
        rows.append(RefinementRow(
            lev.m, True, float(traj_diff), act,
            None if lev.report is None else lev.report.residual_equation))
    rows.append(RefinementRow(M, True, 0.0, 0.0,
                              None if finest.report is None
                              else finest.report.residual_equation))
    return ConvergenceTable(M, rows)
