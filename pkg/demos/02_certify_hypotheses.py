"""Certify the standing hypotheses of the undamped Neumann application:
boundedness, (shifted) coercivity, the time-regularity modulus with its Dini
integrals, and the Lipschitz constants of the memory kernels.

Run:  python3 demos/02_certify_hypotheses.py
"""
import numpy as np

import nonlocalwave as nlw

sc = nlw.scenario_undamped_neumann()
basis = nlw.build_basis(sc.domain, 16)
form = nlw.FormSpec(
    nlw.coefficient_field("a", sc.gradient_coef, lower=1.0, upper=1.5),
    nlw.coefficient_field("c", sc.zeroth_coef, lower=1.0),
    None, sc.horizon)

cert = nlw.certify(form, basis)
print(f"form: a(t,x) = {sc.gradient_coef},  c(t,x) = {sc.zeroth_coef}")
print(f"boundedness constant C (V -> V')  : {cert.bound_c:.6f}")
print(f"coercivity alpha (shift {cert.shift:g})     : "
      f"{cert.coercivity_alpha:.6f}")
print(f"square-root property              : {cert.square_root_property}")
print("time-regularity modulus omega(delta), log-spaced sample:")
for k in (0, 8, 16, 24):
    print(f"  omega({cert.omega_deltas[k]:.2e}) = {cert.omega_values[k]:.3e}")
print(f"Dini integrals on [delta_min, T]  : "
      f"{cert.dini_integrals[0]:.4f}, {cert.dini_integrals[1]:.4f} "
      f"(divergence flag: {cert.dini_warning})")

kg = nlw.nonlocal_kernel(sc.kappa1, sc.horizon)
consts = nlw.kernel_lipschitz(kg, basis)
print(f"\nkernel kappa = {sc.kappa1}:")
print(f"  |kappa|_L2(0,T;Linf)        = {consts.into_h:.6f}  (g into H)")
print(f"  |grad kappa|_L2(0,T;Linf)   = {consts.gradient:.6f}")
print(f"  combined constant into V    = {consts.into_v:.6f}")

# a coefficient that violates its declared positivity is caught with a witness
bad = nlw.FormSpec(nlw.coefficient_field("a", "t - 0.5", lower=0.0),
                   None, None, 1.0)
try:
    nlw.certify(bad, basis)
except nlw.CertificationError as exc:
    print(f"\nviolation detected as designed: {exc}")
