"""
Strong convergence rates
========================

When 4a < sigma^2 the best achievable strong order is 2a / sigma^2, and
truncated Milstein attains it. This script estimates strong errors against a
bridge-refined reference and fits the log-log slope.
"""

# %%
from cirlab import CirParams, SchemeKind, fit_rate, strong_error

p = CirParams(a=0.5, b=0.0, sigma=2.0, x0=0.0)  # 2a / sigma^2 = 0.25
points = []
for n in (8, 16, 32, 64, 128):
    est = strong_error(SchemeKind.TruncatedMilstein, p, n, reps=4000, refine_factor=32, seed=1)
    points.append((n, est.mean_abs_error))
    print(f"N = {n:4d}  error {est.mean_abs_error:.4f} +- {est.std_error:.4f}")

# %%
fit = fit_rate(points, drop_smallest=1)
print(f"slope {fit.slope:.3f}, r^2 {fit.r_squared:.3f}")

# %%
# In the regular regime the drift-implicit square-root scheme converges faster
q = CirParams(a=2.0, b=1.0, sigma=1.0, x0=1.0)
for n in (8, 32, 128):
    print(n, strong_error(SchemeKind.DriftImplicitSqrt, q, n, reps=2000, refine_factor=32, seed=2).mean_abs_error)
