"""Least-squares calibration of both short-rate models to an observed curve.

The objective is the sum of squared differences between model and observed
zero-coupon prices. The standard model is priced in closed form; the sinusoidal
model by Monte Carlo with one seed for the whole optimisation (common random
numbers), which keeps the objective surface deterministic.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .hw import HwParams, bond_prices
from .mc import PriceCache, SimConfig, mc_bond_prices
from .sinhw import DEFAULT_PERIOD_YEARS, SinHwParams, omega_from_period_years
from .termstructure import YieldCurve, yield_from_price

log = logging.getLogger(__name__)

__all__ = [
    "ParamBounds",
    "HW_BOUNDS",
    "SIN_HW_BOUNDS",
    "HW_X0",
    "SIN_HW_X0",
    "PENALTY_WEIGHT",
    "NelderMeadResult",
    "TenorFit",
    "CalibrationResult",
    "nelder_mead",
    "objective",
    "calibrate_hw",
    "calibrate_sin_hw",
    "rmse_yield",
]

PENALTY_WEIGHT = 1e6
HW_NAMES = ("kappa", "theta", "sigma")
SIN_HW_NAMES = ("kappa0", "amp", "omega", "theta", "sigma")


@dataclass(frozen=True)
class ParamBounds:
    names: tuple[str, ...]
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self) -> None:
        if not len(self.names) == len(self.lower) == len(self.upper):
            raise ValueError("bounds vectors differ in length")
        if any(not lo < hi for lo, hi in zip(self.lower, self.upper)):
            raise ValueError("each lower bound must be strictly below its upper bound")

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    def violation(self, x: np.ndarray) -> float:
        """Squared Euclidean distance from x to the box."""
        return float(np.sum((x - self.clip(x)) ** 2))

    def contains(self, x: np.ndarray) -> bool:
        return self.violation(x) == 0.0

    def subset(self, names: Sequence[str]) -> "ParamBounds":
        idx = [self.names.index(n) for n in names]
        return ParamBounds(tuple(names), tuple(self.lower[i] for i in idx), tuple(self.upper[i] for i in idx))


HW_BOUNDS = ParamBounds(HW_NAMES, (0.01, 0.001, 0.001), (5.0, 0.2, 0.05))
SIN_HW_BOUNDS = ParamBounds(SIN_HW_NAMES, (0.01, 0.0, 0.01, 0.001, 0.001), (5.0, 1.0, 20.0, 0.2, 0.05))

HW_X0 = HwParams(kappa=0.1, theta=0.03, sigma=0.01)
SIN_HW_X0 = SinHwParams(
    kappa0=0.3, amp=0.2, omega=omega_from_period_years(DEFAULT_PERIOD_YEARS), theta=0.03, sigma=0.01
)


# --------------------------------------------------------------------------- Nelder-Mead


@dataclass
class NelderMeadResult:
    x: np.ndarray
    fun: float
    nit: int
    nfev: int
    converged: bool
    history: list[float] = field(default_factory=list)  # best value after each iteration


def nelder_mead(
    f: Callable[[np.ndarray], float],
    x0,
    xatol: float = 1e-3,
    max_iter: int | None = None,
    callback: Callable[[int, np.ndarray, float], None] | None = None,
    restarts: int = 0,
) -> NelderMeadResult:
    """Minimise `f` with the Nelder-Mead simplex method.

    Coefficients: reflection 1, expansion 2, contraction 0.5, shrink 0.5. The
    initial simplex perturbs each coordinate of x0 by 5% (0.00025 where it is
    zero). Iteration stops once every vertex lies within `xatol` of the best
    vertex in every coordinate, or after `max_iter` iterations (default 200 per
    dimension).

    After convergence the search restarts from the best vertex with a fresh
    simplex, up to `restarts` times, and stops early once a restart no longer
    lowers the best value. This guards against a simplex that has collapsed
    inside a curved valley.
    """
    x0 = np.asarray(x0, dtype=float).ravel()
    if not np.all(np.isfinite(x0)):
        raise ValueError("x0 must be finite")
    if not xatol > 0:
        raise ValueError("xatol must be positive")
    if restarts < 0:
        raise ValueError("restarts must be non-negative")
    n = x0.size
    max_iter = 200 * n if max_iter is None else max_iter
    res = _nelder_mead_run(f, x0, xatol, max_iter, callback, 0, 0, [])
    for _ in range(restarts):
        if not res.converged:
            break
        again = _nelder_mead_run(f, res.x, xatol, max_iter, callback, res.nit, res.nfev, res.history)
        improved = again.fun < res.fun
        res = again if improved else NelderMeadResult(res.x, res.fun, again.nit, again.nfev, again.converged, again.history)
        if not improved:
            break
    return res


def _nelder_mead_run(f, x0, xatol, max_iter, callback, it0, nfev0, history0) -> NelderMeadResult:
    n = x0.size

    sim = np.empty((n + 1, n))
    sim[0] = x0
    for k in range(n):
        y = x0.copy()
        y[k] = 1.05 * y[k] if y[k] != 0 else 0.00025
        sim[k + 1] = y

    nfev = nfev0

    def fx(x: np.ndarray) -> float:
        nonlocal nfev
        nfev += 1
        return float(f(x))

    fsim = np.array([fx(v) for v in sim])
    history = list(history0)
    it = it0
    converged = False
    while True:
        order = np.argsort(fsim, kind="stable")
        sim, fsim = sim[order], fsim[order]
        if np.max(np.abs(sim[1:] - sim[0])) < xatol:
            converged = True
            break
        if it - it0 >= max_iter:
            break
        it += 1

        centroid = sim[:-1].mean(axis=0)
        worst = sim[-1]
        xr = centroid + (centroid - worst)
        fr = fx(xr)
        shrink = False
        if fr < fsim[0]:
            xe = centroid + 2.0 * (xr - centroid)
            fe = fx(xe)
            if fe < fr:
                sim[-1], fsim[-1] = xe, fe
            else:
                sim[-1], fsim[-1] = xr, fr
        elif fr < fsim[-2]:
            sim[-1], fsim[-1] = xr, fr
        elif fr < fsim[-1]:
            xc = centroid + 0.5 * (xr - centroid)
            fc = fx(xc)
            if fc <= fr:
                sim[-1], fsim[-1] = xc, fc
            else:
                shrink = True
        else:
            xcc = centroid + 0.5 * (worst - centroid)
            fcc = fx(xcc)
            if fcc < fsim[-1]:
                sim[-1], fsim[-1] = xcc, fcc
            else:
                shrink = True
        if shrink:
            for j in range(1, n + 1):
                sim[j] = sim[0] + 0.5 * (sim[j] - sim[0])
                fsim[j] = fx(sim[j])

        best = int(np.argmin(fsim))
        history.append(float(fsim[best]))
        if callback is not None:
            callback(it, sim[best].copy(), float(fsim[best]))
        log.debug("nelder-mead iter %d best %.6g", it, fsim[best])

    return NelderMeadResult(sim[0].copy(), float(fsim[0]), it, nfev, converged, history)


# --------------------------------------------------------------------------- objective


@dataclass(frozen=True)
class TenorFit:
    tenor: float
    observed_yield: float
    fitted_yield: float
    observed_price: float
    model_price: float

    @property
    def yield_error(self) -> float:
        return self.observed_yield - self.fitted_yield


@dataclass
class CalibrationResult:
    model: str
    params: HwParams | SinHwParams
    objective: float
    per_tenor: list[TenorFit]
    rmse_yield: float
    iterations: int
    converged: bool
    sim_config: SimConfig | None = None
    fixed: dict[str, float] = field(default_factory=dict)


def _hw_from(x: np.ndarray) -> HwParams:
    return HwParams(*map(float, x))


def _sin_from(x: np.ndarray) -> SinHwParams:
    return SinHwParams(*map(float, x))


def model_prices(model: str, params, curve: YieldCurve, cfg: SimConfig | None, cache: PriceCache | None = None):
    if model == "hw":
        r0 = cfg.r0 if cfg is not None else curve.short_rate_proxy()
        return bond_prices(params, r0, curve.maturities)
    if model == "sin-hw":
        if cfg is None:
            raise ValueError("Monte Carlo pricing needs a SimConfig")
        return mc_bond_prices(params, cfg, curve.maturities, cache=cache)
    raise ValueError(f"unknown model kind {model!r}")


def objective(
    model: str,
    raw,
    curve: YieldCurve,
    cfg: SimConfig | None = None,
    cache: PriceCache | None = None,
    bounds: ParamBounds | None = None,
) -> float:
    """Sum of squared price errors plus a quadratic out-of-bounds penalty.

    `raw` is the full parameter vector in model order. Prices are computed at the
    point clamped into `bounds`, so the value is finite everywhere and strictly
    larger outside the box than at its projection.
    """
    x = np.asarray(raw, dtype=float)
    names = HW_NAMES if model == "hw" else SIN_HW_NAMES
    if x.size != len(names):
        raise ValueError(f"{model} expects {len(names)} parameters, got {x.size}")
    if bounds is None:
        bounds = HW_BOUNDS if model == "hw" else SIN_HW_BOUNDS
    if not np.all(np.isfinite(x)):
        return math.inf
    inside = bounds.clip(x)
    params = _hw_from(inside) if model == "hw" else _sin_from(inside)
    resid = model_prices(model, params, curve, cfg, cache) - curve.observed_prices()
    return float(resid @ resid) + PENALTY_WEIGHT * bounds.violation(x)


def rmse_yield(per_tenor: Sequence[TenorFit] | Sequence[float]) -> float:
    """Root mean square of observed minus fitted yields (decimal units).

    Accepts TenorFit rows or bare yield errors.
    """
    if len(per_tenor) == 0:
        raise ValueError("need at least one tenor")
    errs = np.array([r.yield_error if isinstance(r, TenorFit) else float(r) for r in per_tenor])
    return float(np.sqrt(np.mean(errs**2)))


def _fit_table(curve: YieldCurve, prices: np.ndarray) -> list[TenorFit]:
    obs = curve.observed_prices()
    return [
        TenorFit(t.years, y, yield_from_price(t, float(p)), float(po), float(p))
        for t, y, p, po in zip(curve.tenors, curve.yields, prices, obs)
    ]


def calibrate_hw(
    curve: YieldCurve,
    x0: HwParams = HW_X0,
    r0: float | None = None,
    xatol: float = 1e-3,
    max_iter: int | None = None,
    restarts: int = 0,
) -> CalibrationResult:
    r0 = curve.short_rate_proxy() if r0 is None else r0
    cfg = SimConfig(r0=r0)  # only r0 is used by the analytical pricer

    def f(x):
        return objective("hw", x, curve, cfg)

    res = nelder_mead(f, x0.as_vector(), xatol=xatol, max_iter=max_iter, restarts=restarts)
    params = _hw_from(HW_BOUNDS.clip(res.x))
    table = _fit_table(curve, bond_prices(params, r0, curve.maturities))
    if not res.converged:
        log.warning("HW calibration stopped after %d iterations without meeting xatol", res.nit)
    return CalibrationResult("hw", params, res.fun, table, rmse_yield(table), res.nit, res.converged)


def calibrate_sin_hw(
    curve: YieldCurve,
    x0: SinHwParams = SIN_HW_X0,
    fix_omega: float | None = None,
    cfg: SimConfig | None = None,
    fixed: Mapping[str, float] | None = None,
    xatol: float = 1e-3,
    max_iter: int | None = None,
    free_omega: bool = False,
    restarts: int = 0,
) -> CalibrationResult:
    """Calibrate the sinusoidal model by Monte Carlo pricing.

    omega is held at `fix_omega` (default: 2*pi/22 rad/year) unless
    `free_omega` is set, in which case it joins the search starting at x0.omega.
    Other parameters can be pinned through `fixed`.
    """
    cfg = SimConfig(r0=curve.short_rate_proxy()) if cfg is None else cfg
    pinned = dict(fixed or {})
    if not free_omega:
        pinned.setdefault("omega", omega_from_period_years(DEFAULT_PERIOD_YEARS) if fix_omega is None else fix_omega)
    unknown = set(pinned) - set(SIN_HW_NAMES)
    if unknown:
        raise ValueError(f"cannot fix unknown parameters {sorted(unknown)}")
    free = [n for n in SIN_HW_NAMES if n not in pinned]
    full0 = dict(zip(SIN_HW_NAMES, x0.as_vector()))
    cache = PriceCache()

    def assemble(x: np.ndarray) -> np.ndarray:
        vals = dict(pinned)
        vals.update(zip(free, x))
        return np.array([vals[n] for n in SIN_HW_NAMES])

    # bounds on pinned coordinates are irrelevant; widen so pinned values never incur a penalty
    lo = [(-math.inf if n in pinned else b) for n, b in zip(SIN_HW_NAMES, SIN_HW_BOUNDS.lower)]
    hi = [(math.inf if n in pinned else b) for n, b in zip(SIN_HW_NAMES, SIN_HW_BOUNDS.upper)]
    bounds = ParamBounds(SIN_HW_NAMES, tuple(lo), tuple(hi))

    def f(x):
        return objective("sin-hw", assemble(x), curve, cfg, cache, bounds)

    res = nelder_mead(f, [full0[n] for n in free], xatol=xatol, max_iter=max_iter, restarts=restarts)
    params = _sin_from(bounds.clip(assemble(res.x)))
    table = _fit_table(curve, mc_bond_prices(params, cfg, curve.maturities, cache=cache))
    if not res.converged:
        log.warning("Sin-HW calibration stopped after %d iterations without meeting xatol", res.nit)
    return CalibrationResult(
        "sin-hw", params, res.fun, table, rmse_yield(table), res.nit, res.converged, cfg, pinned
    )
