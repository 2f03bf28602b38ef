#!/usr/bin/env python3
"""Tangent (FOT) and fixed-point (FPL) linear models on the bundled toy.

Shows how the two surrogates are built at a solved base, how they are
evaluated, and how the a-priori error bound compares with observed errors.
"""

import numpy as np

import mplf
from mplf.datafiles import bundled_path
from mplf.linearize import stack_injections

model = mplf.network_from_file(bundled_path("three_bus_network.json"))
profile = mplf.zero_load_voltage(model)
s_ref = mplf.injections_from_file(bundled_path("three_bus_injections.json"), model)

base_sol = mplf.solve_fixed_point(model, profile, s_ref, tol_step=1e-12)
fot = mplf.fot_linearize(model, base_sol, s_ref)
fpl = mplf.fpl_linearize(model, profile, base_sol, s_ref)
print(f"built FOT/FPL at the solution for the bundled injections "
      f"({model.n_phases} phases, {model.n_delta} pairs)")

# Both interpolate the base; FPL also interpolates the zero-load point.
for name, lin in [("fot", fot), ("fpl", fpl)]:
    v, vabs = mplf.evaluate_linear(lin, stack_injections(s_ref))
    print(f"{name}: error at base {np.abs(v - base_sol.v).max():.2e}")
v0, _ = mplf.evaluate_linear(fpl, 0 * stack_injections(s_ref))
print("fpl at zero injections vs w:", np.abs(v0 - profile.w).max())

# Error growth along the injection ray.
print("\nkappa   |fot err|   |fpl err|")
for kappa in (0.5, 1.0, 1.5, 2.0, 3.0):
    target = s_ref.scaled(kappa)
    sol = mplf.solve_fixed_point(model, profile, target)
    x = stack_injections(target)
    e_fot = np.abs(mplf.evaluate_linear(fot, x)[0] - sol.v).max()
    e_fpl = np.abs(mplf.evaluate_linear(fpl, x)[0] - sol.v).max()
    print(f"{kappa:5.2f}   {e_fot:9.2e}   {e_fpl:9.2e}")

# A-priori bound for the FPL prediction under a passing certificate.
base = (profile.w, mplf.InjectionSet.zeros(model))
target = s_ref.scaled(2.0)
bound, q = mplf.fpl_error_bound(model, profile, base, target)
fpl0 = mplf.fpl_linearize(model, profile,
                          mplf.solve_fixed_point(model, profile, mplf.InjectionSet.zeros(model)),
                          mplf.InjectionSet.zeros(model))
sol = mplf.solve_fixed_point(model, profile, target)
observed = np.abs(mplf.evaluate_linear(fpl0, stack_injections(target))[0] - sol.v).max()
print(f"\nbound at kappa=2 around (w, 0): q={q:.4f}, bound={bound:.3e}, observed={observed:.3e}")

# Magnitude predictions come from their own affine map, not |complex model|.
x = stack_injections(s_ref.scaled(1.5))
v, vabs = mplf.evaluate_linear(fot, x)
sol = mplf.solve_fixed_point(model, profile, s_ref.scaled(1.5))
print("\nmagnitude model vs |v| at kappa=1.5:",
      np.abs(vabs - np.abs(sol.v)).max(), "(affine)",
      np.abs(np.abs(v) - np.abs(sol.v)).max(), "(|complex prediction|)")
