"""Convergence of the mixed method for the weighted Poisson problem.

The exact pressure p = sin(pi z) cos(pi r / 2) r^2 vanishes on the outer
boundary of the unit square; the flux is z = -grad^{k*} p and the source is
its weighted divergence, computed symbolically.

Run with ``python3 demos/02_mixed_convergence.py [max_level]``.
"""

import sys

from axihdiv import error_table, manufactured_solution

max_level = int(sys.argv[1]) if len(sys.argv) > 1 else 7

# %%
# A quick look at the data.  The azimuthal flux component carries a factor r.
ms = manufactured_solution(1)
print("p(0.5, 0.5) =", float(ms.p(0.5, 0.5)))
print("z(0.5, 0.5) =", ms.z(0.5, 0.5))
print("f(0.5, 0.5) =", float(ms.f(0.5, 0.5)))

# %%
# Flux and pressure errors halve with every refinement.  The distance between
# p_h and the piecewise-constant projection of p drops by a factor of four.
for k in (1, 2):
    print(f"\nk = {k}")
    print("level   |z - z_h|   rate   |p - p_h|   rate   |P p - p_h|  rate")
    for row in error_table("square", k, max_level):
        rates = ["  -  " if row.rate_z != row.rate_z else f"{v:5.2f}"
                 for v in (row.rate_z, row.rate_p, row.rate_pis)]
        print(f"{row.level:5d}   {row.err_z:.4e} {rates[0]}  {row.err_p:.4e} {rates[1]}  "
              f"{row.err_pis:.4e} {rates[2]}")
