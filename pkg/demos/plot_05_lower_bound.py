"""
A lower bound no grid method can beat
=====================================

Two drivers that agree at all N grid times produce solutions that differ at
the end. Half their mean distance bounds the error of every method that uses
only the grid values. We estimate it for both coupling variants.
"""

# %%
from cirlab import BesselParams, CouplingVariant, fit_rate, lower_bound_coupling

p = BesselParams(delta=0.5, b=0.0, z0=0.0)
rows = []
for n in (8, 16, 32, 64):
    est = lower_bound_coupling(p, n, reps=4000, fine_factor=32, seed=7)
    rows.append((n, est.mean_abs_error))
    print(f"N = {n:3d}  lower bound {est.mean_abs_error:.4f} +- {est.std_error:.4f}")
print("slope", round(fit_rate(rows).slope, 3), "(delta / 2 =", p.delta / 2, ")")

# %%
# Perturbing a single cell after the first zero hit is weaker but still positive
for cycles in (1, 8):
    est = lower_bound_coupling(p, 32, 4000, 32, CouplingVariant.SingleCellAfterZeroHit, seed=7, max_cycles=cycles)
    print(f"max_cycles={cycles}: {est.mean_abs_error:.4f} +- {est.std_error:.4f}")
