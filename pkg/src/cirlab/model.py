"""Parameter types and closed-form quantities for CIR / squared Bessel processes.

Two parameterizations are used throughout the package:

* CIR form ``dX = (a - b X) dt + sigma sqrt(X) dW`` on ``[0, T]``;
* normalized squared Bessel form ``dZ = (delta - b Z) dt + 2 sqrt(Z) dW`` on ``[0, 1]``.

They are linked by ``Z_t = rho * X_{tT}`` with ``rho = 4 / (T sigma^2)``,
``delta = 4 a / sigma^2`` and drift rate ``b' = T b``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from scipy import integrate


@dataclass(frozen=True)
class CirParams:
    """CIR model ``dX = (a - b X) dt + sigma sqrt(X) dW``, ``X_0 = x0`` on ``[0, T]``."""

    a: float
    b: float
    sigma: float
    x0: float
    T: float = 1.0

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"a must be > 0, got {self.a}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if not self.T > 0:
            raise ValueError(f"T must be > 0, got {self.T}")
        if not self.b >= 0:
            raise ValueError(f"b must be >= 0, got {self.b}")
        if not self.x0 >= 0:
            raise ValueError(f"x0 must be >= 0, got {self.x0}")

    @property
    def delta(self) -> float:
        return delta_of(self)


@dataclass(frozen=True)
class BesselParams:
    """Squared Bessel process with drift, ``dZ = (delta - b Z) dt + 2 sqrt(Z) dW``."""

    delta: float
    b: float
    z0: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"delta must be > 0, got {self.delta}")
        if not self.b >= 0:
            raise ValueError(f"b must be >= 0, got {self.b}")
        if not self.z0 >= 0:
            raise ValueError(f"z0 must be >= 0, got {self.z0}")

    # CIR-style accessors so schemes can treat both parameterizations alike
    @property
    def a(self) -> float:
        return self.delta

    @property
    def sigma(self) -> float:
        return 2.0

    @property
    def x0(self) -> float:
        return self.z0


class FellerClass(enum.Enum):
    HitsZeroAlmostSurely = "hits-zero"
    NeverHitsZero = "never-hits-zero"


def delta_of(cir: CirParams) -> float:
    """Dimension ``4a / sigma^2``; the strong rate exponent ``2a / sigma^2`` is half of it."""
    return 4.0 * cir.a / cir.sigma**2


def to_bessel(cir: CirParams) -> tuple[BesselParams, float, float]:
    """Map CIR parameters to the normalized squared Bessel process on ``[0, 1]``.

    Returns ``(bessel, space_scale, time_scale)`` where ``Z_t = space_scale * X_{t * time_scale}``.
    """
    rho = 4.0 / (cir.T * cir.sigma**2)
    bes = BesselParams(delta=delta_of(cir), b=cir.T * cir.b, z0=rho * cir.x0)
    return bes, rho, cir.T


def from_bessel(bes: BesselParams, sigma: float, T: float) -> CirParams:
    """Inverse of :func:`to_bessel` for a given diffusion coefficient and horizon."""
    rho = 4.0 / (T * sigma**2)
    return CirParams(a=bes.delta * sigma**2 / 4.0, b=bes.b / T, sigma=sigma, x0=bes.z0 / rho, T=T)


def _mean(z: float, drift: float, b: float, t: float) -> float:
    if b == 0:
        return z + drift * t
    decay = math.exp(-b * t)
    return z * decay + drift * (-math.expm1(-b * t)) / b


def mean_at(p: BesselParams, t: float) -> float:
    """``E[Z_t]`` for the squared Bessel process started at ``p.z0``."""
    if t < 0:
        raise ValueError("t must be >= 0")
    return _mean(p.z0, p.delta, p.b, t)


def mean_at_cir(cir: CirParams, t: float) -> float:
    """``E[X_t]`` for the CIR process; same closed form with ``a`` in place of ``delta``."""
    if t < 0:
        raise ValueError("t must be >= 0")
    return _mean(cir.x0, cir.a, cir.b, t)


def l1_distance_exact(z1: float, z2: float, b: float, t: float) -> float:
    """``E|Z_t^{z1} - Z_t^{z2}|`` for two solutions sharing one Brownian motion."""
    return math.exp(-b * t) * abs(z1 - z2)


def feller_class(delta: float) -> FellerClass:
    if not delta > 0:
        raise ValueError("delta must be > 0")
    if delta < 2:
        return FellerClass.HitsZeroAlmostSurely
    return FellerClass.NeverHitsZero


def _check_subcritical(delta: float) -> float:
    if not 0 < delta < 2:
        raise ValueError(f"requires 0 < delta < 2 (exponent 1 - delta/2 must be positive), got {delta}")
    return 1.0 - delta / 2.0


def chi_moment(delta: float) -> float:
    """``E[(chi^2_delta)^(1 - delta/2)] = 2^(1 - delta/2) / Gamma(delta/2)``."""
    nu = _check_subcritical(delta)
    return 2.0**nu / math.gamma(delta / 2.0)


def hitting_tail_shape(z: float, r: float, delta: float) -> float:
    """C-free survival shape ``z^nu * int_r^inf t^(-nu-1) exp(-z / 2t) dt`` with ``nu = 1 - delta/2``.

    Up to a multiplicative constant this is the probability that the driftless
    squared Bessel process started at ``z`` stays positive on ``[0, r]``.
    """
    nu = _check_subcritical(delta)
    if z < 0:
        raise ValueError("z must be >= 0")
    if not r > 0:
        raise ValueError("r must be > 0")
    if z == 0:
        return 0.0
    # u = 1/t maps [r, inf) onto (0, 1/r]: integrand u^(nu-1) exp(-z u / 2)
    val, _ = integrate.quad(
        lambda u: u ** (nu - 1.0) * math.exp(-0.5 * z * u), 0.0, 1.0 / r, epsabs=1e-10, epsrel=1e-12, limit=200
    )
    return z**nu * val


def hitting_tail_bound(z: float, r: float, delta: float) -> float:
    """Upper bound ``z^nu r^(-nu) / nu`` of :func:`hitting_tail_shape` (drops the exponential)."""
    nu = _check_subcritical(delta)
    return z**nu * r ** (-nu) / nu


def as_bessel(p: CirParams | BesselParams) -> BesselParams:
    if isinstance(p, BesselParams):
        return p
    return to_bessel(p)[0]


__all__ = [
    "BesselParams",
    "CirParams",
    "FellerClass",
    "as_bessel",
    "chi_moment",
    "delta_of",
    "feller_class",
    "from_bessel",
    "hitting_tail_bound",
    "hitting_tail_shape",
    "l1_distance_exact",
    "mean_at",
    "mean_at_cir",
    "to_bessel",
]
