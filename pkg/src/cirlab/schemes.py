"""Stepping kernels for ``dX = (a - b X) dt + sigma sqrt(X) dW`` and a pathwise solver.

Kernels take either :class:`~cirlab.model.CirParams` or
:class:`~cirlab.model.BesselParams` (the latter is the CIR model with
``a = delta`` and ``sigma = 2``) and work elementwise on numpy arrays, so one
call advances a whole batch of replications.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import sampling
from .model import BesselParams
from .paths import GridPath, refine


class SchemeKind(enum.Enum):
    EulerFullTruncation = "euler-ft"
    DriftImplicitSqrt = "drift-implicit"
    TruncatedMilstein = "truncated-milstein"
    ExactTransition = "exact"

    @classmethod
    def from_name(cls, name: str) -> "SchemeKind":
        for k in cls:
            if k.value == name or k.name == name:
                return k
        raise ValueError(f"unknown scheme {name!r}; choose from {[k.value for k in cls]}")


class SchemeError(ValueError):
    """Raised when a scheme is not well posed for the requested parameters."""


def check_scheme(kind: SchemeKind, p) -> None:
    if kind is SchemeKind.DriftImplicitSqrt and p.a < p.sigma**2 / 4:
        raise SchemeError(
            f"drift-implicit square-root scheme needs a >= sigma^2/4 (got a={p.a}, sigma^2/4={p.sigma**2 / 4})"
        )


def default_threshold(kind: SchemeKind) -> float:
    """Zero-hit threshold: exact zero where the scheme can land on 0, else 1e-12."""
    if kind in (SchemeKind.TruncatedMilstein, SchemeKind.ExactTransition):
        return 0.0
    return 1e-12


def _milstein(a, b, sigma, x, dW, dt):
    xp = np.maximum(x, 0.0)
    root = np.sqrt(xp) + 0.5 * sigma * dW
    # (sqrt(x) + sigma dW / 2)^2 expands to the Milstein correction sigma^2/4 (dW^2 - dt) plus the usual terms
    return np.maximum(0.0, root * root + (a - 0.25 * sigma**2 - b * xp) * dt), root


def step(kind: SchemeKind, p, x, dW, dt: float, g: Optional[np.random.Generator] = None):
    """Advance ``x`` by one step of size ``dt`` driven by the increment ``dW``.

    ``ExactTransition`` ignores ``dW`` and samples the exact transition law from ``g``.
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    a, b, sigma = p.a, p.b, p.sigma
    if kind is SchemeKind.EulerFullTruncation:
        xp = np.maximum(x, 0.0)
        return x + (a - b * xp) * dt + sigma * np.sqrt(xp) * dW
    if kind is SchemeKind.TruncatedMilstein:
        return _milstein(a, b, sigma, x, dW, dt)[0]
    if kind is SchemeKind.DriftImplicitSqrt:
        check_scheme(kind, p)
        y = np.sqrt(np.maximum(x, 0.0)) + 0.5 * sigma * dW
        c = 1.0 + 0.5 * b * dt
        y_new = (y + np.sqrt(y * y + 0.5 * c * (4.0 * a - sigma**2) * dt)) / (2.0 * c)
        return y_new * y_new
    if kind is SchemeKind.ExactTransition:
        if g is None:
            raise ValueError("ExactTransition needs a generator")
        bes, scale = _as_unit_diffusion(p)
        return sampling.exact_bessel_transition(g, np.maximum(x, 0.0) * scale, bes, dt, np.shape(x) or None) / scale
    raise ValueError(f"unknown scheme {kind}")


def _as_unit_diffusion(p):
    """Squared-Bessel parameters in the same time units plus the space scale ``4 / sigma^2``."""
    if isinstance(p, BesselParams):
        return p, 1.0
    scale = 4.0 / p.sigma**2
    return BesselParams(delta=4.0 * p.a / p.sigma**2, b=p.b, z0=p.x0 * scale), scale


@dataclass(frozen=True)
class SolveResult:
    """Outcome of :func:`solve_path`.

    ``zero_hit_time`` is a float (or None) for a single path and an array with
    NaN marking "no hit" for a batch.
    """

    terminal_value: np.ndarray
    path: Optional[GridPath] = None
    zero_hit_time: object = None
    zero_threshold: float = 0.0


def solve_path(
    kind: SchemeKind,
    p,
    x0,
    driver: GridPath,
    record: bool = False,
    zero_threshold: Optional[float] = None,
    g: Optional[np.random.Generator] = None,
    hit_rng: Optional[np.random.Generator] = None,
) -> SolveResult:
    """Run ``kind`` over every increment of ``driver`` starting from ``x0``.

    With ``hit_rng`` given, zero hits between grid points are also detected by
    sampling the Brownian-bridge crossing probability of ``sqrt(x)``
    (``exp(-2 u v / (sigma^2 dt / 4))`` for endpoint roots ``u``, ``v``).
    """
    check_scheme(kind, p)
    if np.any(np.asarray(x0) < 0):
        raise ValueError("x0 must be >= 0")
    thr = default_threshold(kind) if zero_threshold is None else zero_threshold
    if thr < 0:
        raise ValueError("zero_threshold must be >= 0")
    dt = driver.dt
    dws = driver.increments()
    batch = driver.values.shape[1:]
    x = np.broadcast_to(np.asarray(x0, dtype=float), batch).copy() if batch else float(x0)
    hit = np.where(np.asarray(x) <= thr, driver.t0, np.nan)
    out = None
    if record:
        out = np.empty((driver.n_steps + 1,) + batch)
        out[0] = x
    for i in range(driver.n_steps):
        dW = dws[i]
        if kind is SchemeKind.TruncatedMilstein:
            x_new, root = _milstein(p.a, p.b, p.sigma, x, dW, dt)
        else:
            x_new, root = step(kind, p, x, dW, dt, g=g), None
        crossed = x_new <= thr
        if hit_rng is not None:
            u = np.sqrt(np.maximum(x, 0.0))
            v = np.sqrt(np.maximum(x_new, 0.0))
            if root is not None:
                crossed = crossed | (root <= 0)
            prob = np.exp(-8.0 * u * v / (p.sigma**2 * dt))
            crossed = crossed | (hit_rng.random(np.shape(x_new)) < prob)
        hit = np.where(np.isnan(hit) & crossed, driver.time_at(i + 1), hit)
        x = x_new
        if record:
            out[i + 1] = x
    if not np.all(np.isfinite(x)):
        raise FloatingPointError("non-finite solution value")
    path = GridPath(driver.t0, dt, out) if record else None
    if not batch:
        hit = None if np.isnan(hit) else float(hit)
        x = float(x)
    return SolveResult(x, path, hit, thr)


def reference_solve(p, x0, coarse_driver: GridPath, refine_factor: int, g: np.random.Generator) -> np.ndarray:
    """Truncated Milstein on a bridge refinement of ``coarse_driver`` (mesh ``dt / refine_factor``)."""
    if refine_factor < 2:
        raise ValueError("refine_factor must be >= 2")
    fine = refine(g, coarse_driver, refine_factor)
    return solve_path(SchemeKind.TruncatedMilstein, p, x0, fine).terminal_value


__all__ = [
    "SchemeError",
    "SchemeKind",
    "SolveResult",
    "check_scheme",
    "default_threshold",
    "reference_solve",
    "solve_path",
    "step",
]
