"""Grid-sampled Brownian paths, bridges and the one-cell coupling operators.

Arrays follow one convention: axis 0 is time, any trailing axes index
independent replications. A ``GridPath`` with ``values.shape == (n + 1, m)``
therefore holds ``m`` paths with ``n`` steps each.

Times are always ``t0 + i * dt`` for an integer index ``i``; nothing here
accumulates time by repeated addition, so junction points of concatenated
paths coincide exactly.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass

import numpy as np

_REL_TOL = 1e-9


@dataclass(frozen=True)
class GridPath:
    t0: float
    dt: float
    values: np.ndarray

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 0 or values.shape[0] < 1:
            raise ValueError("values must hold at least one grid point")
        object.__setattr__(self, "values", values)

    @property
    def n_steps(self) -> int:
        return self.values.shape[0] - 1

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.n_steps + 1) * self.dt

    @property
    def horizon(self) -> float:
        return self.t0 + self.n_steps * self.dt

    def increments(self) -> np.ndarray:
        return np.diff(self.values, axis=0)

    def time_at(self, i: int) -> float:
        return self.t0 + i * self.dt

    def index_of(self, t: float) -> int:
        """Grid index of time ``t``; raises if ``t`` is not a grid time."""
        x = (t - self.t0) / self.dt
        i = round(x)
        if abs(x - i) > _REL_TOL * max(1.0, abs(x)):
            raise ValueError(f"time {t} is not on the grid (dt={self.dt})")
        return int(i)

    def at(self, t: float) -> np.ndarray:
        return self.values[self.index_of(t)]

    def to_csv(self, path) -> None:
        """Write ``index,time,value`` rows; batched paths get one value column per replication."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            vals = self.values.reshape(self.n_steps + 1, -1)
            if vals.shape[1] == 1:
                writer.writerow(["index", "time", "value"])
            else:
                writer.writerow(["index", "time"] + [f"value_{k}" for k in range(vals.shape[1])])
            for i, row in enumerate(vals):
                writer.writerow([i, repr(self.time_at(i))] + [repr(float(v)) for v in row])


@dataclass(frozen=True)
class BridgePath:
    """Brownian bridge on ``[0, 1]`` sampled at ``values.shape[0]`` equidistant points."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape[0] < 2:
            raise ValueError("a bridge needs at least two grid points")
        if np.any(values[0] != 0) or np.any(values[-1] != 0):
            raise ValueError("bridge values must vanish at both endpoints")
        object.__setattr__(self, "values", values)

    @property
    def n_steps(self) -> int:
        return self.values.shape[0] - 1


class CellMarker(enum.Enum):
    """Triangle keeps the driver, Box replaces its first cell by a fresh bridge."""

    Triangle = 3
    Box = 4


def _batch_shape(batch) -> tuple:
    if batch is None:
        return ()
    if isinstance(batch, int):
        return (batch,)
    return tuple(batch)


def sample_bm(g: np.random.Generator, n_steps: int, dt: float, batch=None, t0: float = 0.0) -> GridPath:
    """Brownian motion started at the origin with ``n_steps`` increments of variance ``dt``."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if not dt > 0:
        raise ValueError("dt must be > 0")
    shape = (n_steps,) + _batch_shape(batch)
    values = np.zeros((n_steps + 1,) + shape[1:])
    np.cumsum(g.standard_normal(shape), axis=0, out=values[1:])
    values[1:] *= math.sqrt(dt)
    return GridPath(t0, dt, values)


def bridge_cov(s: float, t: float, T: float) -> float:
    if not (0 <= s <= T and 0 <= t <= T):
        raise ValueError("s and t must lie in [0, T]")
    return min(s, t) - s * t / T


def bridge_values(g: np.random.Generator, n_steps: int, batch=None) -> np.ndarray:
    """Raw array form of :func:`sample_bridge` (no validation wrapper)."""
    shape = (n_steps,) + _batch_shape(batch)
    w = np.zeros((n_steps + 1,) + shape[1:])
    np.cumsum(g.standard_normal(shape), axis=0, out=w[1:])
    w[1:] *= math.sqrt(1.0 / n_steps)
    s = np.arange(n_steps + 1) / n_steps
    s = s.reshape((-1,) + (1,) * (w.ndim - 1))
    b = w - s * w[-1]
    b[0] = 0.0
    b[-1] = 0.0
    return b


def sample_bridge(g: np.random.Generator, n_steps: int, batch=None) -> BridgePath:
    """Brownian bridge ``B_s = W_s - s W_1`` on ``[0, 1]``, independent of ``W_1``."""
    if n_steps < 2:
        raise ValueError("n_steps must be >= 2")
    return BridgePath(bridge_values(g, n_steps, batch))


def _ramp(m: int, ndim: int) -> np.ndarray:
    return (np.arange(m + 1) / m).reshape((-1,) + (1,) * (ndim - 1))


def bm_from_bridge(w_T, bridge: BridgePath, T: float) -> GridPath:
    """Brownian path on ``[0, T]`` with endpoint ``w_T``: ``t -> (t/T) w_T + sqrt(T) B_{t/T}``."""
    if not 0 < T <= 1:
        raise ValueError("T must lie in (0, 1]")
    b = bridge.values
    m = bridge.n_steps
    w_T = np.asarray(w_T, dtype=float)
    values = _ramp(m, b.ndim) * w_T + math.sqrt(T) * b
    values[0] = 0.0
    values[-1] = w_T
    return GridPath(0.0, T / m, values)


def cell_fill(g: np.random.Generator, dw, h: float, factor: int) -> np.ndarray:
    """Conditional Brownian interpolation of one cell of length ``h``.

    Returns offsets from the cell's left value at ``factor + 1`` points; the
    first is exactly 0 and the last exactly ``dw``.
    """
    dw = np.asarray(dw, dtype=float)
    b = bridge_values(g, factor, dw.shape)
    out = _ramp(factor, b.ndim) * dw + math.sqrt(h) * b
    out[0] = 0.0
    out[-1] = dw
    return out


def refine(g: np.random.Generator, w: GridPath, factor: int) -> GridPath:
    """Refine ``w`` by ``factor`` with independent Brownian bridges in every cell.

    Coarse grid values are copied, so the result restricted to the coarse grid
    equals ``w`` bit for bit.
    """
    if factor < 2:
        raise ValueError("factor must be >= 2")
    n = w.n_steps
    vals = w.values
    out = np.empty((n * factor + 1,) + vals.shape[1:])
    for i in range(n):
        fill = cell_fill(g, vals[i + 1] - vals[i], w.dt, factor)
        out[i * factor : (i + 1) * factor] = vals[i] + fill[:-1]
    out[::factor] = vals
    return GridPath(w.t0, w.dt / factor, out)


def grid_ceil_offsets(n: int, t: float) -> tuple[float, float]:
    """Distance from ``t`` up to the next point of the mesh ``1/n`` and that distance plus ``1/n``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if t < 0:
        raise ValueError("t must be >= 0")
    x = t * n
    k = round(x)
    if abs(x - k) <= _REL_TOL * max(1.0, x):
        tau1 = 0.0
    else:
        tau1 = math.ceil(x) / n - t
    return tau1, tau1 + 1.0 / n


def _cell_points(dt: float, n: int) -> int:
    m = round(1.0 / (n * dt))
    if m < 1 or abs(m * n * dt - 1.0) > _REL_TOL:
        raise ValueError(f"mesh {dt} does not divide the cell length 1/{n}")
    return m


def perturb_first_cell(w: GridPath, f: BridgePath, n: int, marker: CellMarker) -> GridPath:
    """Apply the one-cell operator: Box swaps the bridge part of ``w`` on ``[0, 1/n]`` for ``f``."""
    m = _cell_points(w.dt, n)
    if w.n_steps < m:
        raise ValueError("path is shorter than one cell")
    if f.n_steps != m:
        raise ValueError(f"bridge resolution {f.n_steps} does not match the cell sub-grid {m}")
    if marker is CellMarker.Triangle:
        return w
    vals = w.values.copy()
    cell = _ramp(m, vals.ndim) * vals[m] + f.values / math.sqrt(n)
    vals[1:m] = cell[1:m]
    return GridPath(w.t0, w.dt, vals)


def concat_with_cell(
    r: float,
    w1: GridPath,
    w_tri: GridPath,
    w2: GridPath,
    f: BridgePath,
    n: int,
    marker: CellMarker,
) -> GridPath:
    """Concatenate ``w1`` on ``[0, r]``, a (possibly perturbed) cell of ``w_tri`` and ``w2`` afterwards.

    ``r`` is snapped to the common mesh. The output is continuous at ``r`` and
    ``r + 1/n`` and has length ``r + 1/n`` plus the span of ``w2``.
    """
    dt = w1.dt
    for p in (w_tri, w2):
        if abs(p.dt - dt) > _REL_TOL * dt:
            raise ValueError("all paths must share one mesh")
    m = _cell_points(dt, n)
    ir = round(r / dt)
    if ir < 0 or w1.n_steps < ir:
        raise ValueError("w1 does not cover [0, r]")
    cell = perturb_first_cell(w_tri, f, n, marker).values[: m + 1]
    base = w1.values[ir]
    out = np.empty((ir + m + w2.n_steps + 1,) + w1.values.shape[1:])
    out[: ir + 1] = w1.values[: ir + 1]
    out[ir + 1 : ir + m + 1] = cell[1:] + base
    out[ir + m] = w_tri.values[m] + base
    out[ir + m + 1 :] = w2.values[1:] + (w_tri.values[m] + base)
    return GridPath(w1.t0, dt, out)


def scale_path(w: GridPath, c: float) -> GridPath:
    """Brownian scaling ``s -> c^{-1/2} w(c s)``; the grid spacing becomes ``dt / c``."""
    if not c > 0:
        raise ValueError("c must be > 0")
    return GridPath(w.t0 / c, w.dt / c, w.values / math.sqrt(c))


def path_from_increments(increments: np.ndarray, dt: float, start=0.0, t0: float = 0.0) -> GridPath:
    inc = np.asarray(increments, dtype=float)
    vals = np.empty((inc.shape[0] + 1,) + inc.shape[1:])
    vals[0] = start
    np.cumsum(inc, axis=0, out=vals[1:])
    vals[1:] += start
    return GridPath(t0, dt, vals)


__all__ = [
    "BridgePath",
    "CellMarker",
    "GridPath",
    "bm_from_bridge",
    "bridge_cov",
    "bridge_values",
    "cell_fill",
    "concat_with_cell",
    "grid_ceil_offsets",
    "path_from_increments",
    "perturb_first_cell",
    "refine",
    "sample_bm",
    "sample_bridge",
    "scale_path",
]
