"""
How long a process started at zero stays away from it
=====================================================

For dimension delta < 2 the chance of no zero on [eps, 1] decays like
eps^(1 - delta/2). With delta = 1 the square root is reflected Brownian
motion, so the arcsine law gives the exact answer to compare against.
"""

# %%
import math

from cirlab import BesselParams, fit_rate, hitting_probabilities, hitting_tail_shape, tail_constant

eps = [2.0**-k for k in (7, 6, 5, 4, 3)]
est = hitting_probabilities(BesselParams(1.0, 0.0, 0.0), eps, reps=20_000, mesh=2.0**-10, seed=1)
for e, q in zip(eps, est):
    print(f"eps {e:.4f}  P {q.prob_estimate:.4f} +- {q.std_error:.4f}  arcsine {2 / math.pi * math.asin(math.sqrt(e)):.4f}")
print("slope", round(fit_rate([(e, q.prob_estimate) for e, q in zip(eps, est)]).slope, 3))

# %%
# The survival shape z^nu * int_r^inf t^(-nu-1) exp(-z/2t) dt, with the constant fitted to one point
print(hitting_tail_shape(1.0, 1.0, 1.0))
c, se = tail_constant(BesselParams(0.5, 0.0, 1.0), 1.0, reps=10_000, mesh=2.0**-9, seed=2)
print(f"fitted constant for delta = 0.5: {c:.4f} +- {se:.4f}")
