"""Hull-White with sinusoidal mean-reversion speed.

    dr_t = (kappa0 + amp sin(omega t)) (theta - r_t) dt + sigma dW_t

The affine ansatz still separates, but B(t, T) now solves

    dB/dt = (kappa0 + amp sin(omega t)) B - 1,    B(T, T) = 0,

which has no closed form. Two independent evaluations are provided: a fixed-step
RK4 integration and quadrature of the integrating-factor representation

    B(t, T) = int_t^T exp(F(t) - F(s)) ds,   F(s) = kappa0 s - (amp/omega) cos(omega s).

Bond prices for this model come from Monte Carlo (:mod:`ratecycle.mc`).
Time is in years and omega in radians per year throughout.
"""

from __future__ import annotations

import math
from dataclasses import astuple, dataclass

import numpy as np
from scipy import integrate

from .hw import HwParams

__all__ = [
    "SinHwParams",
    "kappa_t",
    "omega_from_period_years",
    "b_factor_numeric",
    "b_factor_integral",
    "DEFAULT_PERIOD_YEARS",
]

DEFAULT_PERIOD_YEARS = 22.0


@dataclass(frozen=True)
class SinHwParams:
    kappa0: float
    amp: float
    omega: float
    theta: float
    sigma: float

    def __post_init__(self) -> None:
        for name, v in zip(("kappa0", "amp", "omega", "theta", "sigma"), astuple(self)):
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        if self.omega <= 0:
            raise ValueError(f"omega must be positive, got {self.omega!r}")
        if self.amp < 0:
            raise ValueError(f"amp must be non-negative, got {self.amp!r}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be non-negative, got {self.sigma!r}")

    @property
    def kappa_changes_sign(self) -> bool:
        """True when kappa0 < amp, i.e. the reversion speed goes negative part of each cycle."""
        return self.kappa0 < self.amp

    @property
    def period_years(self) -> float:
        return 2 * math.pi / self.omega

    def as_vector(self) -> np.ndarray:
        return np.array(astuple(self))

    @classmethod
    def from_hw(cls, p: HwParams, omega: float = 2 * math.pi / DEFAULT_PERIOD_YEARS) -> "SinHwParams":
        return cls(p.kappa, 0.0, omega, p.theta, p.sigma)


def kappa_t(p: SinHwParams, t):
    return p.kappa0 + p.amp * np.sin(p.omega * t)


def omega_from_period_years(period: float) -> float:
    if not period > 0:
        raise ValueError(f"period must be positive, got {period}")
    return 2 * math.pi / period


def _check_interval(t: float, T: float) -> None:
    if T < t:
        raise ValueError(f"maturity T={T} precedes evaluation time t={t}")


def b_factor_numeric(p: SinHwParams, t: float, T: float, step: float = 0.01) -> float:
    """Integrate the B ODE backward from B(T, T) = 0 to t with classical RK4.

    The interval is split into ceil((T - t) / step) equal steps.
    """
    _check_interval(t, T)
    if not 0 < step <= 0.05:
        raise ValueError(f"step must lie in (0, 0.05], got {step}")
    if T == t:
        return 0.0
    n = math.ceil((T - t) / step - 1e-12)
    h = -(T - t) / n
    k0, a, w = p.kappa0, p.amp, p.omega

    def rhs(s: float, b: float) -> float:
        return (k0 + a * math.sin(w * s)) * b - 1.0

    b = 0.0
    for i in range(n):
        s = T + i * h
        k1 = rhs(s, b)
        k2 = rhs(s + 0.5 * h, b + 0.5 * h * k1)
        k3 = rhs(s + 0.5 * h, b + 0.5 * h * k2)
        k4 = rhs(s + h, b + h * k3)
        b += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return b


def b_factor_integral(p: SinHwParams, t: float, T: float) -> float:
    """Adaptive quadrature of the integrating-factor form (positive for T > t)."""
    _check_interval(t, T)
    if T == t:
        return 0.0
    k0, a, w = p.kappa0, p.amp, p.omega

    def F(s: float) -> float:
        return k0 * s - (a / w) * math.cos(w * s)

    Ft = F(t)
    limit = max(50, int(4 * w * (T - t)) + 50)
    val, _ = integrate.quad(lambda s: math.exp(Ft - F(s)), t, T, epsabs=0.0, epsrel=1e-13, limit=limit)
    return val
