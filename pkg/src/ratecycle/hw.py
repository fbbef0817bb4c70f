"""Standard Hull-White (Vasicek-type, constant theta) short-rate model.

    dr_t = kappa (theta - r_t) dt + sigma dW_t

Zero-coupon bonds have the affine form P(t, T) = A(t, T) exp(-B(t, T) r_t) with

    B(t, T) = (1 - exp(-kappa (T - t))) / kappa
    ln A(t, T) = (theta - sigma^2 / (2 kappa^2)) (B - (T - t)) - sigma^2 B^2 / (4 kappa)
"""

from __future__ import annotations

import math
from dataclasses import astuple, dataclass

import numpy as np

__all__ = ["HwParams", "b_factor", "a_factor", "bond_price", "bond_prices"]


@dataclass(frozen=True)
class HwParams:
    """kappa in 1/years, theta as a decimal rate, sigma in decimal/sqrt(year).

    Only finiteness and the sign constraints the formulas need are checked here;
    calibration bounds are applied by :mod:`ratecycle.calib`.
    """

    kappa: float
    theta: float
    sigma: float

    def __post_init__(self) -> None:
        for name, v in zip(("kappa", "theta", "sigma"), astuple(self)):
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        if self.kappa <= 0:
            raise ValueError(f"kappa must be positive, got {self.kappa!r}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be non-negative, got {self.sigma!r}")

    def as_vector(self) -> np.ndarray:
        return np.array(astuple(self))


def _horizon(t: float, T: float) -> float:
    if T < t:
        raise ValueError(f"maturity T={T} precedes evaluation time t={t}")
    if t < 0:
        raise ValueError(f"evaluation time must be non-negative, got {t}")
    return T - t


def b_factor(p: HwParams, t: float, T: float) -> float:
    """Rate sensitivity B(t, T); lies in [0, 1/kappa].

    Singular at kappa = 0; kappa >= 0.01 inside the calibration bounds.
    """
    tau = _horizon(t, T)
    return -math.expm1(-p.kappa * tau) / p.kappa


def a_factor(p: HwParams, t: float, T: float) -> float:
    tau = _horizon(t, T)
    k, th, s = p.kappa, p.theta, p.sigma
    b = -math.expm1(-k * tau) / k
    return math.exp((th - s * s / (2 * k * k)) * (b - tau) - s * s * b * b / (4 * k))


def bond_price(p: HwParams, r0: float, T: float) -> float:
    """Analytical zero-coupon price P(0, T) given the current short rate."""
    if not T > 0:
        raise ValueError(f"maturity must be positive, got {T}")
    return a_factor(p, 0.0, T) * math.exp(-b_factor(p, 0.0, T) * r0)


def bond_prices(p: HwParams, r0: float, maturities) -> np.ndarray:
    return np.array([bond_price(p, r0, float(T)) for T in np.atleast_1d(maturities)])
