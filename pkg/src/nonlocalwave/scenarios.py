"""Ready-made problem instances and the scenario configuration format.

A :class:`Scenario` is a value object holding expression sources and
defaults; :func:`realize` turns it into concrete bases, operators,
fundamental-solution tables and a nonlocal problem at a chosen resolution.
Scenarios round-trip through a flat INI-style configuration file, the same
format the command line consumes.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass

import numpy as np

from . import fixedpoint, forms, propagator
from .errors import ConfigurationError
from .expressions import as_expression
from .spectral import SpatialDomain, Trajectory, build_basis, interval, project

_NONLINEARITIES = ("none", "tanh", "logistic")


@dataclass(frozen=True)
class Scenario:
    name: str
    kind: str                    # undamped | damped
    engine: str                  # relaxed | contraction
    domain: SpatialDomain
    gradient_coef: str
    zeroth_coef: str
    damping_coef: str | None
    nonlinearity: str
    kappa1: str
    offset1: str | None
    kappa2: str
    offset2: str | None
    horizon: float
    m: int
    h: float
    fs_step: float
    bounds: tuple = ()           # ((symbol, lower, upper), ...)
    manufactured_u: str | None = None

    def bound_for(self, symbol):
        for sym, lo, hi in self.bounds:
            if sym == symbol:
                return lo, hi
        return None, None


def scenario_undamped_neumann():
    """Undamped Neumann problem with integral-average nonlocal data.

    Interval (0, pi), a(t,x) = 1 + t/2, c = 1, f(t,u) = tanh(u) with
    declared growth (a=1, b=0), kappa_1 = kappa_2 = 1/(2T), T = 1.
    """
    return Scenario(
        name="undamped_neumann", kind="undamped", engine="relaxed",
        domain=interval(np.pi),
        gradient_coef="1 + t/2", zeroth_coef="1", damping_coef=None,
        nonlinearity="tanh",
        kappa1="0.5", offset1="0.5*cos(x)",
        kappa2="0.5", offset2=None,
        horizon=1.0, m=16, h=1e-3, fs_step=1.0 / 80.0,
        bounds=(("a", 1.0, 1.5), ("c", 1.0, 1.0)))


def scenario_population():
    """Damped population model with exponential memory kernels.

    Interval (0, pi), d(t,x) = 1 + 0.1 sin t, sigma = 0.5, mu = 0.2,
    logistic-type f(t,u) = u/(1+u^2) with L = 1, kappa_i = exp(-s)/T, T = 1.
    """
    return Scenario(
        name="population", kind="damped", engine="contraction",
        domain=interval(np.pi),
        gradient_coef="1 + 0.1*sin(t)", zeroth_coef="0.2", damping_coef="0.5",
        nonlinearity="logistic",
        kappa1="exp(-t)", offset1="0.5*cos(x)",
        kappa2="exp(-t)", offset2=None,
        horizon=1.0, m=16, h=1e-3, fs_step=1.0 / 80.0,
        bounds=(("d", 0.9, 1.1), ("mu", 0.2, 0.2), ("sigma", 0.5, 0.5)))


def manufactured(u_star, skeleton, name=None):
    """Scenario whose exact solution is ``u_star`` (an expression of t, x).

    The forcing and the kernel offsets are derived at realization time so
    that u_star solves the equation and reproduces its own nonlocal data.
    """
    expr = as_expression(u_star)
    return dataclasses.replace(
        skeleton, manufactured_u=expr.source,
        name=name or f"manufactured[{skeleton.name}]")


def builtin_scenarios():
    mk = manufactured("cos(t)*cos(x)", scenario_undamped_neumann(),
                      name="manufactured_coscos")
    return {s.name: s for s in
            (scenario_undamped_neumann(), scenario_population(), mk)}


def _build_nonlinearity(name, basis):
    if name == "none":
        return fixedpoint.zero_nonlinearity()
    if name == "tanh":
        return fixedpoint.pointwise_nonlinearity(
            basis, lambda t, vals: np.tanh(vals), kind="growth",
            growth_a=1.0, lipschitz=1.0, name="tanh")
    if name == "logistic":
        return fixedpoint.pointwise_nonlinearity(
            basis, lambda t, vals: vals / (1.0 + vals ** 2), kind="lipschitz",
            growth_a=1.0, lipschitz=1.0, name="logistic")
    raise ConfigurationError(
        f"unknown nonlinearity {name!r}; available: {_NONLINEARITIES}")


@dataclass
class Realization:
    """A scenario instantiated at a concrete resolution."""

    scenario: Scenario
    basis: object
    form: forms.FormSpec
    op: object
    fs: object
    problem: fixedpoint.NonlocalProblem
    grid: np.ndarray
    h: float
    exact: tuple | None = None      # (u*, du*/dt) expressions if manufactured
    span_defect: float | None = None


def _coef(scenario, symbol, source):
    lo, hi = scenario.bound_for(symbol)
    return forms.coefficient_field(symbol, source, lower=lo, upper=hi)


def realize(scenario, m=None, h=None, fs_step=None, span_tol=1e-8, seed=0,
            validate_nonlinearity=True):
    """Build basis, operators, tables and the nonlocal problem.

    ``span_tol`` guards manufactured solutions: if the chosen u_star is not
    in the basis span to that tolerance the configuration is rejected with
    the projection defect (pass None to skip, e.g. for refinement studies).
    """
    m = m or scenario.m
    h = h or scenario.h
    fs_step = fs_step or scenario.fs_step
    T = scenario.horizon
    if (scenario.kind == "damped") != (scenario.damping_coef is not None):
        raise ConfigurationError(
            f"scenario kind {scenario.kind!r} inconsistent with "
            f"damping_coef={scenario.damping_coef!r}")
    basis = build_basis(scenario.domain, m)

    symbols = ("a", "c", "sigma") if scenario.kind == "undamped" else \
        ("d", "mu", "sigma")
    form = forms.FormSpec(
        _coef(scenario, symbols[0], scenario.gradient_coef),
        _coef(scenario, symbols[1], scenario.zeroth_coef),
        None if scenario.damping_coef is None
        else _coef(scenario, symbols[2], scenario.damping_coef),
        horizon=T)
    op = propagator.BlockOperator(
        forms.stiffness_supplier(form, basis),
        forms.damping_supplier(form, basis), m)

    n_nodes = int(round(T / fs_step)) + 1
    grid = np.linspace(0.0, T, n_nodes)
    fs = propagator.fundamental_solution(op, grid, h=h)

    kernel_g = fixedpoint.nonlocal_kernel(scenario.kappa1, T, scenario.offset1)
    kernel_h = fixedpoint.nonlocal_kernel(scenario.kappa2, T, scenario.offset2)
    nl = _build_nonlinearity(scenario.nonlinearity, basis)

    exact = None
    span_defect = None
    if scenario.manufactured_u is not None:
        ustar = as_expression(scenario.manufactured_u)
        ut = ustar.diff("t")
        exact = (ustar, ut)

        def coeffs_of(expr, t):
            return project(basis, lambda x, y=None: np.broadcast_to(
                expr(t=t, x=x, y=0.0 if y is None else y), np.shape(x)))

        # spatial span check: compare u* against its projection in L2
        span_defect = 0.0
        for t in np.linspace(0.0, T, 5):
            vals = np.broadcast_to(ustar(t=t, x=basis.nodes_x,
                                         y=0.0 if basis.nodes_y is None
                                         else basis.nodes_y),
                                   basis.nodes_x.shape)
            back = basis.evaluate(project(basis, np.asarray(vals, dtype=float)))
            span_defect = max(span_defect, float(np.sqrt(
                np.sum(basis.weights * np.abs(vals - back) ** 2))))
        if span_tol is not None and span_defect > span_tol:
            raise ConfigurationError(
                f"manufactured solution is outside the basis span at m={m} "
                f"(projection defect {span_defect:.3e})")

        # forcing: f_total(t,u) = f_nl(t,u) + [u*'' + B u*' + A u* - f_nl(t,u*)]
        a_expr = as_expression(scenario.gradient_coef)
        c_expr = as_expression(scenario.zeroth_coef)
        rhs = ustar.diff("t").diff("t") + c_expr * ustar \
            - (a_expr * ustar.diff("x")).diff("x")
        if basis.nodes_y is not None:
            rhs = rhs - (a_expr * ustar.diff("y")).diff("y")
        if scenario.damping_coef is not None:
            rhs = rhs + as_expression(scenario.damping_coef) * ut

        def extra(t, _rhs=rhs, _nl=nl):
            return coeffs_of(_rhs, t) - _nl.evaluator(t, coeffs_of(ustar, t))

        nl = fixedpoint.with_extra_forcing(nl, extra)

        # offsets chosen with the engine's own quadrature so g, h reproduce
        # u*(0), u*'(0) exactly at the discrete level
        star_traj = Trajectory(
            grid, np.array([coeffs_of(ustar, t) for t in grid]),
            np.array([coeffs_of(ut, t) for t in grid]))
        bare_g = dataclasses.replace(kernel_g, offset=None, offset_source=None)
        bare_h = dataclasses.replace(kernel_h, offset=None, offset_source=None)
        off1 = coeffs_of(ustar, 0.0) - fixedpoint.apply_kernel(
            bare_g, star_traj, basis)
        off2 = coeffs_of(ut, 0.0) - fixedpoint.apply_kernel(
            bare_h, star_traj, basis)
        kernel_g = dataclasses.replace(kernel_g, offset=off1,
                                       offset_source="manufactured")
        kernel_h = dataclasses.replace(kernel_h, offset=off2,
                                       offset_source="manufactured")

    if validate_nonlinearity:
        fixedpoint.validate_growth(nl, m, T, np.random.default_rng(seed))

    problem = fixedpoint.NonlocalProblem(op, basis, kernel_g, kernel_h, nl, T)
    return Realization(scenario, basis, form, op, fs, problem, grid, h,
                       exact=exact, span_defect=span_defect)


def solve_realization(rz, cfg=None):
    """Run the engine the scenario prescribes."""
    if rz.scenario.engine == "contraction":
        return fixedpoint.contraction_solve(rz.problem, rz.fs, cfg)
    return fixedpoint.relaxed_solve(rz.problem, rz.fs, cfg)


def manufactured_errors(rz, traj):
    """(sup-in-time coefficient H-error, sup-in-time function-space L2 error)
    of a trajectory against the manufactured exact solution."""
    if rz.exact is None:
        raise ConfigurationError("realization has no manufactured solution")
    ustar, _ = rz.exact
    basis = rz.basis
    sup_coef = 0.0
    sup_fun = 0.0
    for i, t in enumerate(traj.grid):
        vals = np.broadcast_to(
            ustar(t=t, x=basis.nodes_x,
                  y=0.0 if basis.nodes_y is None else basis.nodes_y),
            basis.nodes_x.shape)
        star = project(basis, np.asarray(vals, dtype=float))
        sup_coef = max(sup_coef, float(np.linalg.norm(traj.u[i] - star)))
        diff = basis.evaluate(traj.u[i]) - vals
        sup_fun = max(sup_fun, float(np.sqrt(
            np.sum(basis.weights * np.abs(diff) ** 2))))
    return sup_coef, sup_fun


def refinement_sweep(scenario, m_list, h=None, fs_step=None, cfg=None,
                     span_tol=None, probe_count=5, seed=0):
    """Galerkin refinement sweep of a scenario over increasing mode counts."""
    fs_step = fs_step or scenario.fs_step

    def solve_level(m):
        rz = realize(scenario, m=m, h=h, fs_step=fs_step, span_tol=span_tol,
                     seed=seed)
        traj, report = solve_realization(rz, cfg)
        return fixedpoint.RefinementLevel(m, rz.basis, rz.fs, traj, report)

    return fixedpoint.galerkin_refine(solve_level, m_list,
                                      probe_count=probe_count,
                                      rng=np.random.default_rng(seed))


# -- configuration file round trip ------------------------------------------

def save_scenario(scenario, path):
    cp = configparser.ConfigParser()
    cp["scenario"] = {"name": scenario.name, "kind": scenario.kind,
                      "engine": scenario.engine,
                      "horizon": repr(scenario.horizon)}
    dom = {"kind": scenario.domain.kind}
    if scenario.domain.kind == "interval":
        dom["length"] = repr(scenario.domain.lengths[0])
    else:
        dom["length_x"] = repr(scenario.domain.lengths[0])
        dom["length_y"] = repr(scenario.domain.lengths[1])
    if scenario.domain.quadrature_order:
        dom["quadrature_order"] = str(scenario.domain.quadrature_order)
    cp["domain"] = dom
    frm = {"gradient_coef": scenario.gradient_coef,
           "zeroth_coef": scenario.zeroth_coef}
    if scenario.damping_coef is not None:
        frm["damping_coef"] = scenario.damping_coef
    for sym, lo, hi in scenario.bounds:
        if lo is not None:
            frm[f"{sym}_lower"] = repr(lo)
        if hi is not None:
            frm[f"{sym}_upper"] = repr(hi)
    cp["form"] = frm
    k1 = {"expr": scenario.kappa1}
    if scenario.offset1 is not None:
        k1["offset"] = scenario.offset1
    cp["kernel1"] = k1
    k2 = {"expr": scenario.kappa2}
    if scenario.offset2 is not None:
        k2["offset"] = scenario.offset2
    cp["kernel2"] = k2
    cp["nonlinearity"] = {"name": scenario.nonlinearity}
    if scenario.manufactured_u is not None:
        cp["manufactured"] = {"u_star": scenario.manufactured_u}
    cp["run"] = {"m": str(scenario.m), "h": repr(scenario.h),
                 "fs_step": repr(scenario.fs_step)}
    with open(path, "w") as fh:
        cp.write(fh)


def load_scenario(path):
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise ConfigurationError(f"cannot read configuration file {path!r}")
    try:
        sc = cp["scenario"]
        dom = cp["domain"]
        if dom["kind"] == "interval":
            domain = SpatialDomain("interval", (float(dom["length"]),),
                                   int(dom.get("quadrature_order", 0)))
        elif dom["kind"] == "rectangle":
            domain = SpatialDomain(
                "rectangle",
                (float(dom["length_x"]), float(dom["length_y"])),
                int(dom.get("quadrature_order", 0)))
        else:
            raise ConfigurationError(f"unknown domain kind {dom['kind']!r}")
        frm = cp["form"]
        bounds = []
        for key, val in frm.items():
            if key.endswith("_lower"):
                sym = key[:-6]
                hi = frm.get(f"{sym}_upper")
                bounds.append((sym, float(val),
                               None if hi is None else float(hi)))
        run = cp["run"] if cp.has_section("run") else {}
        return Scenario(
            name=sc.get("name", "custom"), kind=sc["kind"],
            engine=sc.get("engine", "relaxed"), domain=domain,
            gradient_coef=frm["gradient_coef"],
            zeroth_coef=frm["zeroth_coef"],
            damping_coef=frm.get("damping_coef"),
            nonlinearity=cp["nonlinearity"]["name"]
            if cp.has_section("nonlinearity") else "none",
            kappa1=cp["kernel1"]["expr"],
            offset1=cp["kernel1"].get("offset"),
            kappa2=cp["kernel2"]["expr"],
            offset2=cp["kernel2"].get("offset"),
            horizon=float(sc["horizon"]),
            m=int(run.get("m", 16)), h=float(run.get("h", 1e-3)),
            fs_step=float(run.get("fs_step", 0.0125)),
            bounds=tuple(bounds),
            manufactured_u=cp["manufactured"]["u_star"]
            if cp.has_section("manufactured") else None)
    except (KeyError, ValueError) as exc:
        raise ConfigurationError(f"invalid scenario configuration: {exc}") from exc
