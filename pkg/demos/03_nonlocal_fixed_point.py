"""Solve problems whose initial state depends on the whole trajectory,
u(0) = g(u), u'(0) = h(u), with the two fixed-point engines.

Run:  python3 demos/03_nonlocal_fixed_point.py
"""
import numpy as np

import nonlocalwave as nlw

# --- a toy with a closed form -----------------------------------------------
# u'' + u = 0 on [0, pi/2] with u(0) = (1/2) int_0^T u ds + 1, u'(0) = 0.
# The fixed point is u(t) = 2 cos t.
T = np.pi / 2
basis = nlw.build_basis(nlw.interval(1.0), 1)
op = nlw.undamped_operator(lambda t: np.array([[1.0]]), 1)
grid = np.linspace(0.0, T, 65)
fs = nlw.fundamental_solution(op, grid, h=1e-3)

g = nlw.nonlocal_kernel("0.5", T, offset="1")
h = nlw.nonlocal_kernel("0", T)
problem = nlw.NonlocalProblem(op, basis, g, h, nlw.zero_nonlinearity(), T)
traj, report = nlw.contraction_solve(problem, fs)

print("affine toy (closed form u(0) = 2):")
print(f"  computed u(0)        = {traj.u[0, 0]:.10f}")
print(f"  predicted q          = {report.predicted_q:.4f}  "
      f"(M1*Lg*sqrt(T), here = gamma*T)")
print(f"  measured ratio       = {report.measured_ratio:.4f}")
print(f"  |u(0) - g(u)|        = {report.residual_ic_u:.2e}")

# --- the damped population model at its shipped defaults --------------------
sc = nlw.scenario_population()
rz = nlw.realize(sc)
traj, report = nlw.solve_realization(rz)
print(f"\npopulation model ({sc.name}, m={rz.basis.m}):")
print(f"  predicted q          = {report.predicted_q:.3f} "
      f"(nonlocal {report.q_nonlocal:.3f} + Duhamel {report.q_duhamel:.3f})")
if report.t_star is not None:
    print(f"  sub-interval T*      = {report.t_star:.3f}")
else:
    print("  partition            : not admissible "
          "(nonlocal part irreducible); global iteration used")
print(f"  iterations           = {report.iterations}, "
      f"measured ratio {report.measured_ratio:.3f}")
print(f"  |u(0) - g(u)|        = {report.residual_ic_u:.2e}")
print(f"  |u'(0) - h(u)|       = {report.residual_ic_v:.2e}")
print(f"  equation residual    = {report.residual_equation:.2e}")
print(f"  a-priori ball radius = {report.gronwall_radius:.3f}, "
      f"iterates inside: {report.gronwall_ok}")
