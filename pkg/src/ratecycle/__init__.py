"""Hull-White and sinusoidal-mean-reversion short-rate toolkit."""

__version__ = "0.1.0"

from .hw import HwParams, a_factor, b_factor, bond_price
from .mc import PriceCache, SimConfig, mc_bond_price, mc_bond_prices, simulate_paths
from .sinhw import SinHwParams, b_factor_integral, b_factor_numeric, kappa_t, omega_from_period_years
from .termstructure import Tenor, YieldCurve, YieldHistory, latest_curve, load_history, price_from_yield, yield_from_price

__all__ = [
    "HwParams",
    "SinHwParams",
    "SimConfig",
    "PriceCache",
    "Tenor",
    "YieldCurve",
    "YieldHistory",
    "a_factor",
    "b_factor",
    "bond_price",
    "b_factor_numeric",
    "b_factor_integral",
    "kappa_t",
    "omega_from_period_years",
    "mc_bond_price",
    "mc_bond_prices",
    "simulate_paths",
    "price_from_yield",
    "yield_from_price",
    "load_history",
    "latest_curve",
]
