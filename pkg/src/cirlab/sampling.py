"""Reproducible random streams and exact samplers.

Streams come from the counter-based Philox bit generator keyed by a
``SeedSpec`` triple, so a stream depends only on the triple and never on
scheduling. Experiments vectorize over a fixed-size batch of replications;
in that case ``replication_index`` names the batch.

All samplers accept a ``size`` argument and return numpy arrays (or a float
when ``size`` is None).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import BesselParams

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SeedSpec:
    root_seed: int = 0
    stream_id: int = 0
    replication_index: int = 0

    def __post_init__(self):
        for name in ("root_seed", "stream_id", "replication_index"):
            v = getattr(self, name)
            if not 0 <= v <= _MASK64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {v}")

    def child(self, replication_index: int) -> "SeedSpec":
        return SeedSpec(self.root_seed, self.stream_id, replication_index)


def derive(seed: SeedSpec) -> np.random.Generator:
    """Generator whose output is a pure function of the seed triple."""
    ss = np.random.SeedSequence([seed.root_seed, seed.stream_id, seed.replication_index])
    return np.random.Generator(np.random.Philox(ss))


def std_normal(g: np.random.Generator, size=None):
    return g.standard_normal(size)


def gamma(g: np.random.Generator, shape: float, size=None):
    """Unit-scale gamma variates; valid for every ``shape > 0`` including ``shape < 1``."""
    shape = np.asarray(shape, dtype=float)
    if np.any(shape <= 0):
        raise ValueError("gamma shape must be > 0")
    return g.standard_gamma(shape, size)


def poisson(g: np.random.Generator, mean: float, size=None):
    mean = np.asarray(mean, dtype=float)
    if np.any(mean < 0) or not np.all(np.isfinite(mean)):
        raise ValueError("poisson mean must be finite and >= 0")
    return g.poisson(mean, size)


def noncentral_chisq(g: np.random.Generator, df: float, noncentrality, size=None):
    """Noncentral chi-square as a Poisson(lambda/2) mixture of central chi-squares.

    Works for any ``df > 0`` (in particular ``df < 1``). ``noncentrality`` may be
    an array, in which case ``size`` defaults to its shape.
    """
    if not df > 0:
        raise ValueError("df must be > 0")
    lam = np.asarray(noncentrality, dtype=float)
    if np.any(lam < 0):
        raise ValueError("noncentrality must be >= 0")
    if size is None and lam.ndim:
        size = lam.shape
    k = poisson(g, 0.5 * lam, size)
    x = 2.0 * g.standard_gamma(0.5 * df + k, size)
    if size is None and lam.ndim == 0:
        return float(x)
    return x


def exact_bessel_transition(g: np.random.Generator, z, p: BesselParams, dt: float, size=None):
    """Sample ``Z_{t+dt}`` given ``Z_t = z`` exactly; ``z`` may be an array of current values."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("current value must be >= 0")
    if p.b == 0:
        scale = dt
        lam = z / dt
    else:
        scale = -math.expm1(-p.b * dt) / p.b
        lam = z * math.exp(-p.b * dt) / scale
    if size is not None:
        lam = np.broadcast_to(lam, size)
    return scale * noncentral_chisq(g, p.delta, lam, size)


__all__ = [
    "SeedSpec",
    "derive",
    "exact_bessel_transition",
    "gamma",
    "noncentral_chisq",
    "poisson",
    "std_normal",
]
