"""Error decay of the quasi-interpolants.

All four operators reach first order in their weighted L2 norms; the
weighted Clement operator onto r P1 reaches second order on smooth data.

Run with ``python3 demos/04_interpolation_decay.py``.
"""

from axihdiv.verify import fitted_slope, interpolation_errors

levels = [2, 3, 4, 5, 6]
for domain in ("square", "lshape"):
    errs = interpolation_errors(domain, 1, levels)
    print(f"\n{domain}")
    for name, e in errs.items():
        cols = "  ".join(f"{v:.3e}" for v in e)
        print(f"  {name:17s} {cols}   slope {fitted_slope(levels, e):.2f}")
