"""Monte Carlo estimators: strong errors, the coupled lower bound, hitting probabilities.

Every estimator splits its replications into fixed-size blocks. Block ``k``
draws all of its randomness from ``derive(SeedSpec(root, stream, k))`` and
the per-replication results are concatenated in block order, so the numbers
do not depend on how many worker threads processed the blocks.

All simulation happens in the normalized squared Bessel form on ``[0, 1]``.
Errors for CIR inputs are mapped back to CIR units by the space scale.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .model import BesselParams, CirParams, hitting_tail_shape, to_bessel
from .paths import GridPath, cell_fill
from .sampling import SeedSpec, derive, exact_bessel_transition
from .schemes import SchemeKind, SolveResult, _milstein, check_scheme, step

BLOCK_SIZE = 4096

# stream ids keep the experiments statistically independent for a shared root seed
_STREAM_STRONG = 1
_STREAM_LOWER = 2
_STREAM_HITTING = 3
_STREAM_ZERO = 4
_STREAM_L1 = 5
_STREAM_MOMENT = 6
_STREAM_TAIL = 7


@dataclass(frozen=True)
class ErrorEstimate:
    n_grid: int
    mean_abs_error: float
    std_error: float
    reps: int
    seed: int


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    n_points: int
    dropped_smallest_n: int = 0


class CouplingVariant(enum.Enum):
    FullConditionalRefill = "full-refill"
    SingleCellAfterZeroHit = "single-cell"

    @classmethod
    def from_name(cls, name: str) -> "CouplingVariant":
        for v in cls:
            if v.value == name or v.name == name:
                return v
        raise ValueError(f"unknown coupling variant {name!r}; choose from {[v.value for v in cls]}")


@dataclass(frozen=True)
class ProbabilityEstimate:
    eps: float
    prob_estimate: float
    std_error: float
    reps: int


# --------------------------------------------------------------------------- plumbing


def _stream(kind: int, n: int = 0) -> int:
    return (kind << 40) | n


def _blocks(reps: int, block_size: int) -> list[tuple[int, int]]:
    return [(k, min(block_size, reps - k * block_size)) for k in range(math.ceil(reps / block_size))]


def run_blocks(
    fn: Callable[[np.random.Generator, int], np.ndarray],
    reps: int,
    seed: SeedSpec,
    threads: int = 1,
    block_size: int = BLOCK_SIZE,
) -> np.ndarray:
    """Evaluate ``fn(generator, count)`` over blocks and stack the per-replication outputs.

    ``fn`` returns an array whose last axis has length ``count``.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    blocks = _blocks(reps, block_size)

    def work(block):
        k, m = block
        return fn(derive(seed.child(k)), m)

    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, blocks))
    else:
        parts = [work(b) for b in blocks]
    return np.concatenate(parts, axis=-1)


def _summarize(values: np.ndarray, n_grid: int, seed: SeedSpec) -> ErrorEstimate:
    bad = int(np.count_nonzero(~np.isfinite(values)))
    if bad:
        raise FloatingPointError(f"{bad} of {values.size} replications produced non-finite values (N={n_grid})")
    reps = values.size
    sd = float(np.std(values, ddof=1)) if reps > 1 else 0.0
    return ErrorEstimate(n_grid, float(np.mean(values)), sd / math.sqrt(reps), reps, seed.root_seed)


def _normalize(p) -> tuple[BesselParams, float]:
    """Bessel parameters plus the factor converting Bessel-space errors back to the caller's units."""
    if isinstance(p, CirParams):
        bes, rho, _ = to_bessel(p)
        return bes, 1.0 / rho
    return p, 1.0


def _as_seed(seed) -> SeedSpec:
    return seed if isinstance(seed, SeedSpec) else SeedSpec(int(seed))


def _milstein_cell(bes: BesselParams, x, base, fill: np.ndarray, h: float):
    """Truncated Milstein through one refined cell whose driver values are ``base + fill``."""
    dws = np.diff(base + fill, axis=0)
    for dw in dws:
        x = _milstein(bes.delta, bes.b, 2.0, x, dw, h)[0]
    return x


# --------------------------------------------------------------------------- strong error


def strong_error(
    kind: SchemeKind,
    p,
    N: int,
    reps: int,
    refine_factor: int = 64,
    seed=0,
    threads: int = 1,
    block_size: int = BLOCK_SIZE,
) -> ErrorEstimate:
    """Mean absolute terminal error of ``kind`` on ``N`` steps against a bridge-refined reference.

    The scheme and the reference (truncated Milstein on mesh ``1/(N refine_factor)``)
    share the same coarse Brownian increments.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if reps < 2:
        raise ValueError("reps must be >= 2")
    if refine_factor < 2:
        raise ValueError("refine_factor must be >= 2")
    if kind is SchemeKind.ExactTransition:
        raise ValueError("ExactTransition samples its own noise and has no pathwise error")
    bes, unit = _normalize(p)
    check_scheme(kind, bes)
    seed = _as_seed(seed)
    h = 1.0 / N
    fine = h / refine_factor

    def block(g, m):
        x = np.full(m, bes.z0)
        ref = np.full(m, bes.z0)
        w = np.zeros(m)
        for _ in range(N):
            dw = g.standard_normal(m) * math.sqrt(h)
            x = step(kind, bes, x, dw, h)
            ref = _milstein_cell(bes, ref, w, cell_fill(g, dw, h, refine_factor), fine)
            w = w + dw
        return np.abs(x - ref) * unit

    vals = run_blocks(block, reps, SeedSpec(seed.root_seed, _stream(_STREAM_STRONG, N)), threads, block_size)
    return _summarize(vals, N, seed)


# --------------------------------------------------------------------------- lower bound


def _draw_cell(g, m, h, factor, share_fill=False):
    """Coarse increment of one cell plus two conditionally independent bridge fillings."""
    dw = g.standard_normal(m) * math.sqrt(h)
    f1 = cell_fill(g, dw, h, factor)
    f2 = f1 if share_fill else cell_fill(g, dw, h, factor)
    return dw, f1, f2


def coupled_drivers(
    g: np.random.Generator,
    N: int,
    fine_factor: int,
    batch: int,
    variant: CouplingVariant = CouplingVariant.FullConditionalRefill,
    cell=None,
) -> tuple[GridPath, GridPath]:
    """The two fine-mesh drivers used by :func:`lower_bound_coupling`, as explicit paths.

    Draws randomness in the same order as the estimator. For the single-cell
    variant ``cell`` (int or per-replication array, -1 for none) selects the
    perturbed coarse cell. Both drivers agree bit for bit at every coarse time.
    """
    h = 1.0 / N
    tri = np.empty((N * fine_factor + 1, batch))
    box = np.empty_like(tri)
    tri[0] = box[0] = 0.0
    target = np.broadcast_to(np.asarray(-1 if cell is None else cell), (batch,))
    w = np.zeros(batch)
    for i in range(N):
        dw, f1, f2 = _draw_cell(g, batch, h, fine_factor)
        sl = slice(i * fine_factor + 1, (i + 1) * fine_factor + 1)
        tri[sl] = (w + f1)[1:]
        if variant is CouplingVariant.FullConditionalRefill:
            box[sl] = (w + f2)[1:]
        else:
            box[sl] = np.where(target == i, w + f2, w + f1)[1:]
        w = w + dw
    return GridPath(0.0, h / fine_factor, tri), GridPath(0.0, h / fine_factor, box)


def lower_bound_coupling(
    p,
    N: int,
    reps: int,
    fine_factor: int = 64,
    variant: CouplingVariant = CouplingVariant.FullConditionalRefill,
    seed=0,
    threads: int = 1,
    block_size: int = BLOCK_SIZE,
    max_cycles: int = 1,
    share_fill: bool = False,
) -> ErrorEstimate:
    """Half the mean distance of two solutions whose drivers agree at all ``N`` grid times.

    Both drivers are bridge fillings of one coarse path on a mesh ``1/(N fine_factor)``
    and are solved with truncated Milstein. Since any grid-based approximation
    is equally close to both, the returned mean estimates a lower bound on the
    best achievable mean absolute error.

    ``max_cycles`` (single-cell variant only) repeats the perturbation after the
    two solutions have coalesced at zero again. ``share_fill`` makes both
    drivers identical, which must give exactly zero.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if reps < 2:
        raise ValueError("reps must be >= 2")
    if fine_factor < 8:
        raise ValueError("fine_factor must be >= 8")
    if max_cycles < 1:
        raise ValueError("max_cycles must be >= 1")
    bes, unit = _normalize(p)
    seed = _as_seed(seed)
    h = 1.0 / N
    fine = h / fine_factor
    last_start = (N - 2) * fine_factor  # perturbation only if the zero hit happens by T - 2/N

    def full_block(g, m):
        x1 = np.full(m, bes.z0)
        x2 = np.full(m, bes.z0)
        w = np.zeros(m)
        for _ in range(N):
            dw, f1, f2 = _draw_cell(g, m, h, fine_factor, share_fill)
            x1 = _milstein_cell(bes, x1, w, f1, fine)
            x2 = _milstein_cell(bes, x2, w, f2, fine)
            w = w + dw
        return 0.5 * np.abs(x1 - x2) * unit

    def single_block(g, m):
        x1 = np.full(m, bes.z0)
        x2 = np.full(m, bes.z0)
        w = np.zeros(m)
        target = np.full(m, -1)  # index of the cell to perturb, -1 while waiting for a hit
        cycles = np.zeros(m, dtype=int)
        armed = np.ones(m, dtype=bool)  # waiting for a (re)coalescence zero hit
        for i in range(N):
            start_hit = armed & (target < 0) & (x1 <= 0.0) & (x2 <= 0.0) & (i * fine_factor <= last_start)
            target = np.where(start_hit, i, target)
            armed &= ~start_hit
            dw, f1, f2 = _draw_cell(g, m, h, fine_factor, share_fill)
            box = target == i
            d1 = np.diff(w + f1, axis=0)
            d2 = np.where(box, np.diff(w + f2, axis=0), d1)
            w = w + dw
            for j in range(fine_factor):
                x1 = _milstein(bes.delta, bes.b, 2.0, x1, d1[j], fine)[0]
                x2 = _milstein(bes.delta, bes.b, 2.0, x2, d2[j], fine)[0]
                tick = i * fine_factor + j + 1
                hit = armed & (target < 0) & (x1 <= 0.0) & (x2 <= 0.0) & (tick <= last_start)
                # next full cell at or after the hit time
                target = np.where(hit, (tick + fine_factor - 1) // fine_factor, target)
                armed &= ~hit
            done = box
            cycles += done
            target = np.where(done, -1, target)
            armed |= done & (cycles < max_cycles)
        return 0.5 * np.abs(x1 - x2) * unit

    fn = full_block if variant is CouplingVariant.FullConditionalRefill else single_block
    stream = _stream(_STREAM_LOWER, N) | (0 if variant is CouplingVariant.FullConditionalRefill else 1 << 32)
    vals = run_blocks(fn, reps, SeedSpec(seed.root_seed, stream), threads, block_size)
    return _summarize(vals, N, seed)


# --------------------------------------------------------------------------- hitting


def _check_hitting(p: BesselParams):
    if not p.delta < 2:
        raise ValueError(
            f"hitting probabilities need delta < 2 (got {p.delta}); for delta >= 2 the process never reaches zero"
        )
    if p.z0 != 0:
        raise ValueError("hitting probabilities are defined for a start at z0 = 0")


def hitting_probabilities(
    p: BesselParams,
    eps_list: Sequence[float],
    T: float = 1.0,
    reps: int = 100_000,
    mesh: float = 2.0**-12,
    seed=0,
    threads: int = 1,
    block_size: int = BLOCK_SIZE,
) -> list[ProbabilityEstimate]:
    """Estimate ``P(inf_{[eps, T]} Z > 0)`` for every ``eps`` from one set of fine-grid paths.

    Paths use truncated Milstein; zeros between grid points are detected by
    Brownian-bridge crossing of ``sqrt(Z)`` (see :func:`cirlab.schemes.solve_path`).
    """
    _check_hitting(p)
    eps = np.asarray(list(eps_list), dtype=float)
    if np.any(eps <= 0) or np.any(eps > T):
        raise ValueError("each eps must lie in (0, T]")
    n = round(T / mesh)
    if abs(n * mesh - T) > 1e-9 * T:
        raise ValueError("mesh must divide T")
    k_eps = np.array([round(e / mesh) for e in eps])
    if np.any(np.abs(k_eps * mesh - eps) > 1e-9 * T):
        raise ValueError("each eps must be a grid time")
    seed = _as_seed(seed)
    sq = math.sqrt(mesh)

    def block(g, m):
        x = np.zeros(m)
        last = np.zeros(m, dtype=np.int64)  # last step index whose interval contained a zero
        for i in range(n):
            dw = g.standard_normal(m) * sq
            u = np.sqrt(x)
            x, root = _milstein(p.delta, p.b, 2.0, x, dw, mesh)
            v = np.sqrt(x)
            crossed = (x <= 0.0) | (root <= 0.0) | (g.random(m) < np.exp(-2.0 * u * v / mesh))
            last = np.where(crossed, i + 1, last)
        return (last[None, :] <= k_eps[:, None]).astype(float)

    survive = run_blocks(block, reps, SeedSpec(seed.root_seed, _stream(_STREAM_HITTING, n)), threads, block_size)
    out = []
    for e, row in zip(eps, survive):
        q = float(row.mean())
        out.append(ProbabilityEstimate(float(e), q, math.sqrt(max(q * (1 - q), 0.0) / reps), reps))
    return out


def hitting_probability(
    p: BesselParams, eps: float, T: float = 1.0, reps: int = 100_000, mesh: float = 2.0**-12, seed=0, threads: int = 1
) -> ProbabilityEstimate:
    return hitting_probabilities(p, [eps], T, reps, mesh, seed, threads)[0]


def first_zero_hit(result: SolveResult):
    """Earliest grid time at which the solution was at or below its zero threshold."""
    return result.zero_hit_time


def zero_hit_fraction(
    p: BesselParams,
    horizon: float,
    reps: int,
    mesh: float = 2.0**-12,
    zero_threshold: float = 1e-12,
    seed=0,
    threads: int = 1,
    block_size: int = BLOCK_SIZE,
) -> ProbabilityEstimate:
    """Fraction of truncated Milstein paths from ``p.z0`` that reach ``zero_threshold`` by ``horizon``."""
    n = round(horizon / mesh)
    seed = _as_seed(seed)
    sq = math.sqrt(mesh)

    def block(g, m):
        x = np.full(m, p.z0)
        hit = x <= zero_threshold
        for _ in range(n):
            x = _milstein(p.delta, p.b, 2.0, x, g.standard_normal(m) * sq, mesh)[0]
            hit |= x <= zero_threshold
        return hit.astype(float)

    vals = run_blocks(block, reps, SeedSpec(seed.root_seed, _stream(_STREAM_ZERO, n)), threads, block_size)
    q = float(vals.mean())
    return ProbabilityEstimate(horizon, q, math.sqrt(q * (1 - q) / reps), reps)


def tail_constant(
    p: BesselParams,
    r: float,
    reps: int,
    mesh: float = 2.0**-12,
    seed=0,
    threads: int = 1,
    block_size: int = BLOCK_SIZE,
) -> tuple[float, float]:
    """Empirical constant matching ``P(no zero on [0, r])`` from ``p.z0`` to :func:`hitting_tail_shape`.

    Returns the estimate and its standard error. The shape formula is for the
    driftless process, so ``p.b`` must be 0. Zeros are detected as in
    :func:`hitting_probabilities`.
    """
    if p.b != 0:
        raise ValueError("the tail shape is for b = 0")
    if not p.delta < 2 or p.z0 <= 0:
        raise ValueError("need delta < 2 and z0 > 0")
    n = round(r / mesh)
    seed = _as_seed(seed)
    sq = math.sqrt(mesh)

    def block(g, m):
        x = np.full(m, p.z0)
        alive = np.ones(m, dtype=bool)
        for _ in range(n):
            u = np.sqrt(x)
            x, root = _milstein(p.delta, 0.0, 2.0, x, g.standard_normal(m) * sq, mesh)
            v = np.sqrt(x)
            alive &= ~((x <= 0.0) | (root <= 0.0) | (g.random(m) < np.exp(-2.0 * u * v / mesh)))
        return alive.astype(float)

    vals = run_blocks(block, reps, SeedSpec(seed.root_seed, _stream(_STREAM_TAIL, n)), threads, block_size)
    q = float(vals.mean())
    shape = hitting_tail_shape(p.z0, r, p.delta)
    return q / shape, math.sqrt(q * (1 - q) / reps) / shape


# --------------------------------------------------------------------------- moments and Lipschitz


def coupled_l1_distance(
    p: BesselParams,
    z1: float,
    z2: float,
    t: float,
    reps: int,
    mesh: float = 2.0**-12,
    seed=0,
    threads: int = 1,
    block_size: int = BLOCK_SIZE,
) -> ErrorEstimate:
    """``E|Z_t^{z1} - Z_t^{z2}|`` from two truncated Milstein solves sharing every increment."""
    n = round(t / mesh)
    seed = _as_seed(seed)
    sq = math.sqrt(mesh)

    def block(g, m):
        x1 = np.full(m, float(z1))
        x2 = np.full(m, float(z2))
        for _ in range(n):
            dw = g.standard_normal(m) * sq
            x1 = _milstein(p.delta, p.b, 2.0, x1, dw, mesh)[0]
            x2 = _milstein(p.delta, p.b, 2.0, x2, dw, mesh)[0]
        return np.abs(x1 - x2)

    vals = run_blocks(block, reps, SeedSpec(seed.root_seed, _stream(_STREAM_L1, n)), threads, block_size)
    return _summarize(vals, n, seed)


def terminal_samples(
    p: BesselParams, t: float, reps: int, seed=0, n_steps: int = 1, threads: int = 1, block_size: int = 1 << 16
) -> np.ndarray:
    """Exact-transition samples of ``Z_t`` (``n_steps`` chained exact steps)."""
    seed = _as_seed(seed)
    dt = t / n_steps

    def block(g, m):
        z = np.full(m, p.z0)
        for _ in range(n_steps):
            z = exact_bessel_transition(g, z, p, dt)
        return z

    return run_blocks(block, reps, SeedSpec(seed.root_seed, _stream(_STREAM_MOMENT, n_steps)), threads, block_size)


def mean_estimate(p: BesselParams, t: float, reps: int, seed=0, threads: int = 1) -> tuple[float, float]:
    """Monte Carlo mean of ``Z_t`` and its standard error."""
    z = terminal_samples(p, t, reps, seed, threads=threads)
    return float(z.mean()), float(z.std(ddof=1) / math.sqrt(z.size))


# --------------------------------------------------------------------------- regression


def fit_rate(points, drop_smallest: int = 0) -> RateFit:
    """Least-squares line through ``(log N, log error)``.

    The slope keeps its sign, so a convergence order ``r`` shows up as ``-r``.
    ``drop_smallest`` discards that many points with the smallest ``N``.
    """
    pts = sorted((float(n), float(e)) for n, e in points)[drop_smallest:]
    if len(pts) < 3:
        raise ValueError("need at least 3 points to fit a rate")
    ns, errs = np.array(pts).T
    if np.any(errs <= 0):
        raise ValueError("errors must be > 0 to take logs; increase the number of replications")
    lx, ly = np.log(ns), np.log(errs)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1.0 - float(np.sum(resid**2)) / ss_tot)
    return RateFit(float(slope), float(intercept), r2, len(pts), drop_smallest)


__all__ = [
    "BLOCK_SIZE",
    "CouplingVariant",
    "ErrorEstimate",
    "ProbabilityEstimate",
    "RateFit",
    "coupled_drivers",
    "coupled_l1_distance",
    "first_zero_hit",
    "fit_rate",
    "hitting_probabilities",
    "hitting_probability",
    "lower_bound_coupling",
    "mean_estimate",
    "run_blocks",
    "strong_error",
    "tail_constant",
    "terminal_samples",
    "zero_hit_fraction",
]
