"""
Exact transitions from a Poisson mixture
========================================

The transition law of a squared Bessel process is a scaled noncentral
chi-square. Here it is drawn as a Poisson mixture of central chi-squares and
compared with scipy's reference distribution.
"""

# %%
import numpy as np
from scipy import stats

from cirlab import BesselParams, SeedSpec, derive, exact_bessel_transition, noncentral_chisq

g = derive(SeedSpec(root_seed=7))
x = noncentral_chisq(g, 0.7, 2.5, 50_000)
print("KS p-value vs ncx2(0.7, 2.5):", stats.kstest(x, stats.ncx2(0.7, 2.5).cdf).pvalue)

# %%
# Started at zero and run for unit time, Z_1 is chi-square with delta degrees of freedom
for delta in (0.5, 1.0, 1.5):
    z = exact_bessel_transition(g, 0.0, BesselParams(delta, 0.0, 0.0), 1.0, 50_000)
    print(delta, round(stats.kstest(z, stats.chi2(delta).cdf).pvalue, 3))

# %%
# Two half steps give the same law as one full step
p = BesselParams(1.0, 1.0, 1.0)
one = exact_bessel_transition(g, 1.0, p, 1.0, 50_000)
two = exact_bessel_transition(g, exact_bessel_transition(g, np.ones(50_000), p, 0.5), p, 0.5)
print("two-sample KS p-value:", stats.ks_2samp(one, two).pvalue)

# %%
# Generators are keyed by (root, stream, replication): same key, same numbers
a = derive(SeedSpec(7, 3, 11)).standard_normal(3)
b = derive(SeedSpec(7, 3, 11)).standard_normal(3)
print(a, np.array_equal(a, b))
