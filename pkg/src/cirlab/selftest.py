"""Reduced-scale invariant suite behind ``cirlab selftest``."""
from __future__ import annotations

import math
import sys

import numpy as np
from scipy import stats

from . import experiments as ex
from .model import BesselParams, mean_at
from .paths import CellMarker, concat_with_cell, sample_bm, sample_bridge
from .sampling import SeedSpec, derive


def _check_means(reps, seed):
    for p, t in [(BesselParams(1, 0, 1), 1.0), (BesselParams(1, 1, 0), 1.0), (BesselParams(0.5, 1, 2), 1.0)]:
        m, se = ex.mean_estimate(p, t, reps, seed)
        if abs(m - mean_at(p, t)) > 3 * se:
            return False, f"mean {m:.5f} vs {mean_at(p, t):.5f} (se {se:.2g}) for {p}"
    return True, "closed-form means reproduced within 3 se"


def _check_chisq(reps, seed):
    for d in (0.5, 1.0, 1.5):
        z = ex.terminal_samples(BesselParams(d, 0, 0), 1.0, reps, seed)
        pv = stats.kstest(z, stats.chi2(d).cdf).pvalue
        if pv < 0.01:
            return False, f"KS p-value {pv:.3g} for delta={d}"
    return True, "Z_1 from 0 is chi-square(delta) (KS at 1%)"


def _check_bridge(reps, seed):
    g = derive(SeedSpec(seed, 99, 0))
    b = sample_bridge(g, 8, reps).values
    c = np.mean(b[2] * b[6])
    sd = np.std(b[2] * b[6], ddof=1) / math.sqrt(reps)
    ok = abs(c - 0.0625) <= 3 * sd
    return ok, f"bridge covariance at (1/4, 3/4): {c:.5f} vs 0.0625"


def _check_coupling(seed):
    g = derive(SeedSpec(seed, 98, 0))
    for _ in range(20):
        n = int(g.integers(1, 6))
        m = int(g.integers(2, 9))
        dt = 1.0 / (n * m)
        w1 = sample_bm(g, int(g.integers(1, 20)), dt)
        w_tri = sample_bm(g, m + int(g.integers(0, 5)), dt)
        w2 = sample_bm(g, int(g.integers(1, 20)), dt)
        f = sample_bridge(g, m)
        r = int(g.integers(0, w1.n_steps + 1)) * dt
        a = concat_with_cell(r, w1, w_tri, w2, f, n, CellMarker.Triangle).values
        b = concat_with_cell(r, w1, w_tri, w2, f, n, CellMarker.Box).values
        ir = round(r / dt)
        outside = np.ones(a.shape[0], dtype=bool)
        outside[ir + 1 : ir + m] = False
        if not np.array_equal(a[outside], b[outside]):
            return False, "coupled drivers differ outside the perturbed cell"
    return True, "coupled drivers agree bit for bit outside the perturbed cell"


def _check_determinism(seed):
    p = BesselParams(0.5, 0, 0)
    a = ex.lower_bound_coupling(p, 8, 300, 8, seed=seed, threads=1, block_size=64)
    b = ex.lower_bound_coupling(p, 8, 300, 8, seed=seed, threads=4, block_size=64)
    return a == b, "estimates identical for 1 and 4 threads"


def _check_feller(reps, seed):
    never = ex.zero_hit_fraction(BesselParams(2.5, 0, 1), 1.0, min(reps, 2000), 2.0**-10, seed=seed)
    return never.prob_estimate <= 0.01, f"delta=2.5 zero-hit fraction {never.prob_estimate:.4f}"


def run_selftest(reps: int = 20_000, seed: int = 0, out=sys.stdout) -> bool:
    checks = [
        ("first moment", lambda: _check_means(reps, seed)),
        ("chi-square law", lambda: _check_chisq(reps, seed)),
        ("bridge covariance", lambda: _check_bridge(reps, seed)),
        ("coupling exactness", lambda: _check_coupling(seed)),
        ("thread determinism", lambda: _check_determinism(seed)),
        ("Feller boundary", lambda: _check_feller(reps, seed)),
    ]
    all_ok = True
    for name, fn in checks:
        ok, detail = fn()
        all_ok &= bool(ok)
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}", file=out)
    return all_ok
