"""Time-dependent sesquilinear forms, projected operators and certificates.

A form a(t; u, v) = int a(t,x) grad(u).grad(v) + int c(t,x) u v is assembled
against a :class:`~nonlocalwave.spectral.SpectralBasis` by quadrature.  The
module also certifies, numerically, the hypotheses the solver relies on:
uniform boundedness (operator norm measured V -> V' in coordinates),
(possibly shifted) coercivity, the time-regularity modulus omega with its
two Dini integrals, and Lipschitz constants of nonlocal kernels.

The square-root property is not checked: at finite dimension it holds by
construction (bounded perturbation of a symmetric operator, numerical range
in a parabola) and certificates record it as such.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import quadrature
from .errors import CertificationError, ConfigurationError
from .expressions import Expression, as_expression

BOUND_CHECK_TOL = 1e-12


@dataclass(frozen=True)
class CoefficientField:
    """A scalar coefficient (t, x[, y]) -> real with declared bounds."""

    symbol: str
    evaluator: Callable
    lower: float | None = None
    upper: float | None = None
    source: str | None = None

    def __call__(self, t, x, y=None):
        return np.broadcast_to(
            np.asarray(self.evaluator(t, x, y), dtype=float), np.shape(x)).copy()


def coefficient_field(symbol, expr, lower=None, upper=None):
    """Build a coefficient field from an expression string/number/callable."""
    if callable(expr) and not isinstance(expr, Expression):
        return CoefficientField(symbol, lambda t, x, y=None: expr(t, x, y),
                                lower, upper, source=None)
    e = as_expression(expr)

    def evaluator(t, x, y=None):
        return e(t=t, x=x, y=0.0 if y is None else y)

    return CoefficientField(symbol, evaluator, lower, upper, source=e.source)


def validate_coefficient(field, basis, horizon, time_samples=33):
    """Check finiteness and declared bounds on sampled (t, x).

    Raises :class:`CertificationError` carrying a witness (t, x) pair.
    """
    times = np.linspace(0.0, horizon, time_samples)
    for t in times:
        vals = field(t, basis.nodes_x, basis.nodes_y)
        bad = ~np.isfinite(vals)
        if not bad.any():
            if field.lower is not None:
                bad = vals < field.lower - BOUND_CHECK_TOL
            if field.upper is not None:
                bad |= vals > field.upper + BOUND_CHECK_TOL
        if bad.any():
            i = int(np.argmax(bad))
            point = (float(basis.nodes_x[i]),) if basis.nodes_y is None else \
                (float(basis.nodes_x[i]), float(basis.nodes_y[i]))
            raise CertificationError(
                f"coefficient {field.symbol!r} violates its declared bounds "
                f"at t={t:.6g}, x={point}", witness_time=float(t),
                witness_point=point)


@dataclass(frozen=True)
class FormSpec:
    """Coefficients of a(t;u,v) plus the optional damping form b(t;u,v)."""

    gradient_coef: CoefficientField | None
    zeroth_coef: CoefficientField | None
    damping_coef: CoefficientField | None
    horizon: float

    def __post_init__(self):
        if self.horizon <= 0:
            raise ConfigurationError("form horizon must be positive")

    @property
    def damped(self):
        return self.damping_coef is not None


@dataclass(frozen=True)
class OperatorMatrix:
    """Galerkin matrix of a form at one time; entry (j,k) = a(t; Psi_k, Psi_j)."""

    entries: np.ndarray
    time_stamp: float


@dataclass
class FormCertificate:
    """Numerically certified constants of a form.

    ``omega_deltas``/``omega_values`` tabulate the time-regularity modulus;
    ``dini_integrals`` are the integrals of omega(t)/t^(3/2) and
    (omega(t)/t)^2 over [delta_min, T].
    """

    bound_c: float
    coercivity_alpha: float
    shift: float
    gradient_coercivity: float | None
    omega_deltas: np.ndarray
    omega_values: np.ndarray
    dini_integrals: tuple
    dini_warning: bool
    square_root_property: str = "satisfied by construction (finite dimension)"


def _weighted_gram(table_a, table_b, weights, values):
    return (table_a * (weights * values)) @ table_b.T


def assemble(form, basis, t):
    """Assemble the Galerkin matrix of a(t; ., .) by quadrature."""
    m = basis.m
    entries = np.zeros((m, m))
    if form.gradient_coef is not None:
        vals = form.gradient_coef(t, basis.nodes_x, basis.nodes_y)
        entries += _weighted_gram(basis.grad_x, basis.grad_x, basis.weights, vals)
        if basis.grad_y is not None:
            entries += _weighted_gram(basis.grad_y, basis.grad_y, basis.weights, vals)
    if form.zeroth_coef is not None:
        vals = form.zeroth_coef(t, basis.nodes_x, basis.nodes_y)
        entries += _weighted_gram(basis.eval_table, basis.eval_table,
                                  basis.weights, vals)
    if not np.all(np.isfinite(entries)):
        name = (form.gradient_coef or form.zeroth_coef).symbol
        raise ConfigurationError(
            f"assembly produced non-finite entries (coefficient {name!r}) at t={t}")
    return OperatorMatrix(entries, float(t))


def assemble_damping(form, basis, t):
    """Galerkin matrix of the damping form b(t; u, v) = int sigma u v."""
    if form.damping_coef is None:
        raise ConfigurationError("form has no damping coefficient")
    vals = form.damping_coef(t, basis.nodes_x, basis.nodes_y)
    entries = _weighted_gram(basis.eval_table, basis.eval_table,
                             basis.weights, vals)
    if not np.all(np.isfinite(entries)):
        raise ConfigurationError(
            f"assembly produced non-finite entries (coefficient "
            f"{form.damping_coef.symbol!r}) at t={t}")
    return OperatorMatrix(entries, float(t))


def stiffness_supplier(form, basis):
    """Time -> ndarray supplier of A(t), for the block propagator."""
    return lambda t: assemble(form, basis, t).entries


def damping_supplier(form, basis):
    if form.damping_coef is None:
        return None
    return lambda t: assemble_damping(form, basis, t).entries


def build_Am(stiffness, basis, m_sub, alpha):
    """Projected operator: the m_sub block of A(t) plus the alpha-weighted
    V-inner-product operator on the complement.

    On the resolved subspace this acts as the plain projection of A(t); the
    complement block is diagonal alpha*(1 + lambda_k); coupling blocks vanish.
    """
    m = basis.m
    if not 0 < m_sub <= m:
        raise ConfigurationError(f"m_sub must lie in 1..{m}, got {m_sub}")
    if alpha <= 0:
        raise ConfigurationError("alpha must be positive")
    out = np.zeros_like(stiffness.entries)
    out[:m_sub, :m_sub] = stiffness.entries[:m_sub, :m_sub]
    comp = alpha * basis.v_weights[m_sub:]
    out[m_sub:, m_sub:] = np.diag(comp)
    return OperatorMatrix(out, stiffness.time_stamp)


def projected_supplier(form, basis, m_sub, alpha):
    return lambda t: build_Am(assemble(form, basis, t), basis, m_sub, alpha).entries


def vvprime_norm(entries, v_weights):
    """Coordinate V -> V' operator norm: ||D^-1/2 M D^-1/2||_2."""
    d = 1.0 / np.sqrt(v_weights)
    return float(np.linalg.norm(entries * np.outer(d, d), 2))


def _certify_supplier(a_of_t, basis, horizon, sample_count, shift,
                      delta_min, gradient_supplier=None):
    if sample_count < 2:
        raise ConfigurationError("sample_count must be at least 2")
    vw = basis.v_weights
    dinv = 1.0 / np.sqrt(vw)
    times = np.linspace(0.0, horizon, sample_count)
    mats = [np.asarray(a_of_t(t), dtype=float) for t in times]

    bound_c = max(vvprime_norm(M, vw) for M in mats)

    alpha = np.inf
    witness = None
    for t, M in zip(times, mats):
        herm = 0.5 * (M + M.conj().T) + shift * np.eye(basis.m)
        scaled = herm * np.outer(dinv, dinv)
        evals, evecs = np.linalg.eigh(scaled)
        if evals[0] < alpha:
            alpha = float(evals[0])
            witness = (float(t), dinv * evecs[:, 0])
    if alpha <= 0:
        raise CertificationError(
            f"coercivity failed: min Rayleigh quotient {alpha:.6g} at "
            f"t={witness[0]:.6g} (shift {shift})",
            witness_time=witness[0], witness_vector=witness[1])

    gradient_alpha = None
    if gradient_supplier is not None and np.any(basis.eigenvalues > 0):
        sel = basis.eigenvalues > 0
        lam = basis.eigenvalues[sel]
        gmin = np.inf
        for t in times:
            G = np.asarray(gradient_supplier(t), dtype=float)[np.ix_(sel, sel)]
            scaled = G / np.sqrt(np.outer(lam, lam))
            gmin = min(gmin, float(np.linalg.eigvalsh(scaled)[0]))
        gradient_alpha = gmin

    # omega(delta) from pairwise form differences on a log-spaced delta grid
    if delta_min is None:
        delta_min = horizon / 1.0e4
    deltas = np.geomspace(delta_min, horizon, 25)
    n_base = 12
    omegas = np.zeros_like(deltas)
    for i, d in enumerate(deltas):
        bases = np.linspace(0.0, max(horizon - d, 0.0), n_base)
        omegas[i] = max(
            vvprime_norm(np.asarray(a_of_t(b + d)) - np.asarray(a_of_t(b)), vw)
            for b in bases)
    omegas = np.maximum.accumulate(omegas)

    f1 = omegas / deltas ** 1.5
    f2 = (omegas / deltas) ** 2
    dini1 = float(np.trapezoid(f1, deltas))
    dini2 = float(np.trapezoid(f2, deltas))
    # flag a likely divergent Dini integral: the first decade dominates
    head = deltas <= deltas[0] * 10.0
    warn = False
    if dini1 > 0 or dini2 > 0:
        h1 = float(np.trapezoid(f1[head], deltas[head])) if head.sum() > 1 else 0.0
        h2 = float(np.trapezoid(f2[head], deltas[head])) if head.sum() > 1 else 0.0
        warn = (dini1 > 0 and h1 > 0.5 * dini1) or (dini2 > 0 and h2 > 0.5 * dini2)

    return FormCertificate(bound_c, alpha, shift, gradient_alpha,
                           deltas, omegas, (dini1, dini2), warn)


def certify(form, basis, sample_count=33, shift=0.0, delta_min=None):
    """Certify (A2)-(A4) constants of a form against a basis.

    ``shift`` is the H-norm shift omega in the coercivity estimate
    Re a(t;u,u) + shift*|u|_H^2 >= alpha*|u|_V^2; it is reported separately
    in the certificate.  Coefficient bound declarations are validated first.
    """
    for f in (form.gradient_coef, form.zeroth_coef, form.damping_coef):
        if f is not None:
            validate_coefficient(f, basis, form.horizon)
    grad_sup = None
    if form.gradient_coef is not None:
        grad_only = FormSpec(form.gradient_coef, None, None, form.horizon)
        grad_sup = stiffness_supplier(grad_only, basis)
    return _certify_supplier(stiffness_supplier(form, basis), basis,
                             form.horizon, sample_count, shift, delta_min,
                             gradient_supplier=grad_sup)


def certify_operator(a_of_t, basis, horizon, sample_count=33, shift=0.0,
                     delta_min=None):
    """Certify an arbitrary time -> matrix supplier (e.g. a projected A_m)."""
    return _certify_supplier(a_of_t, basis, horizon, sample_count, shift,
                             delta_min)


@dataclass(frozen=True)
class KernelConstants:
    """Certified Lipschitz constants of g(u) = int kappa(s,.) u(s,.) ds.

    ``into_h`` is the L2(0,T; L-infinity) norm of kappa, the Lipschitz
    constant of g: L2(0,T;H) -> H.  ``gradient`` is the same norm of the
    spatial gradient of kappa; together they bound the constant into V by
    sqrt(into_h^2 + gradient^2).
    """

    into_h: float
    gradient: float

    @property
    def into_v(self):
        return float(np.hypot(self.into_h, self.gradient))

    def __iter__(self):
        return iter((self.into_h, self.gradient))


def _kernel_gradient_samples(kernel, t, xs, ys):
    expr = getattr(kernel, "expression", None)
    if expr is not None:
        gx = expr.diff("x")(t=t, x=xs, y=0.0 if ys is None else ys)
        gx = np.broadcast_to(np.asarray(gx, dtype=float), xs.shape)
        if ys is None:
            return np.abs(gx)
        gy = expr.diff("y")(t=t, x=xs, y=ys)
        gy = np.broadcast_to(np.asarray(gy, dtype=float), xs.shape)
        return np.hypot(gx, gy)
    # central differences for opaque callables
    eps = 1e-6
    ev = kernel.evaluator
    gx = (np.asarray(ev(t, xs + eps, ys)) - np.asarray(ev(t, xs - eps, ys))) / (2 * eps)
    gx = np.broadcast_to(gx, xs.shape)
    if ys is None:
        return np.abs(gx)
    gy = (np.asarray(ev(t, xs, ys + eps)) - np.asarray(ev(t, xs, ys - eps))) / (2 * eps)
    gy = np.broadcast_to(gy, xs.shape)
    return np.hypot(gx, gy)


def kernel_lipschitz(kernel, basis, time_samples=129):
    """L2(0,T; L-infinity) norms of a nonlocal kernel and its gradient."""
    T = kernel.horizon
    if basis.nodes_y is None:
        L, = basis.domain.lengths
        xs = np.linspace(0.0, L, 513)
        ys = None
    else:
        L1, L2 = basis.domain.lengths
        g1 = np.linspace(0.0, L1, 65)
        g2 = np.linspace(0.0, L2, 65)
        xs = np.repeat(g1, 65)
        ys = np.tile(g2, 65)
    times = np.linspace(0.0, T, time_samples)
    sup_val = np.empty(time_samples)
    sup_grad = np.empty(time_samples)
    for i, t in enumerate(times):
        vals = np.broadcast_to(
            np.asarray(kernel.evaluator(t, xs, ys), dtype=float), xs.shape)
        if not np.all(np.isfinite(vals)):
            raise ConfigurationError(f"kernel non-finite at t={t}")
        sup_val[i] = np.max(np.abs(vals))
        sup_grad[i] = np.max(_kernel_gradient_samples(kernel, t, xs, ys))
    w = quadrature.composite_weights(times)
    return KernelConstants(
        float(np.sqrt(np.sum(w * sup_val ** 2))),
        float(np.sqrt(np.sum(w * sup_grad ** 2))),
    )


def time_reversed(field, horizon):
    """Coefficient of the returned adjoint form: value at T - t."""
    if field is None:
        return None
    return CoefficientField(
        field.symbol, lambda t, x, y=None: field.evaluator(horizon - t, x, y),
        field.lower, field.upper,
        source=None if field.source is None else f"reversed[{field.source}]")


def returned_adjoint(form):
    """The returned adjoint form a_r(t; u, v) = conj a(T - t; v, u).

    Coefficients here are real scalars, so reversal in time is all that is
    required; the fundamental solution of the result realises the adjoint of
    the original via S(t,s)* = S_r(T-s, T-t).
    """
    T = form.horizon
    return FormSpec(time_reversed(form.gradient_coef, T),
                    time_reversed(form.zeroth_coef, T),
                    time_reversed(form.damping_coef, T), T)
