"""Euler-Maruyama short-rate simulation and Monte Carlo zero-coupon pricing.

Recursion (both models; for the standard model the bracket is constant):

    r_{j+1} = r_j + kappa(t_j) (theta - r_j) dt + sigma sqrt(dt) eps_{j}

Price estimate with left-endpoint discounting:

    P(0, T) ~ mean_i exp(-sum_{j < T/dt} r_{j,i} dt)

Path i draws its normals from its own stream ``SeedSequence(seed, spawn_key=(i,))``,
so a path's shocks do not depend on how many paths run or on the horizon: a
shorter horizon sees a prefix of the same draws.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np

from . import _kernels
from .hw import HwParams, bond_price
from .sinhw import SinHwParams

__all__ = [
    "SimConfig",
    "PathMatrix",
    "PriceCache",
    "ModelParams",
    "simulate_paths",
    "mc_bond_price",
    "mc_bond_prices",
    "mc_discount_factors",
    "mc_price_error",
    "n_steps_for",
]

ModelParams = Union[HwParams, SinHwParams]

_MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.05
    n_paths: int = 200
    seed: int = 42
    r0: float = 0.0122

    def __post_init__(self) -> None:
        if not (math.isfinite(self.dt) and 0 < self.dt <= 0.25):
            raise ValueError(f"dt must lie in (0, 0.25], got {self.dt!r}")
        if int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise ValueError(f"n_paths must be a positive integer, got {self.n_paths!r}")
        if int(self.seed) != self.seed or not 0 <= self.seed <= _MAX_SEED:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if not math.isfinite(self.r0):
            raise ValueError(f"r0 must be finite, got {self.r0!r}")

    def fingerprint(self) -> str:
        return f"dt={self.dt!r};n={self.n_paths};seed={self.seed};r0={self.r0!r}"


@dataclass(frozen=True)
class PathMatrix:
    times: np.ndarray
    rates: np.ndarray  # (n_paths, n_steps + 1)

    @property
    def n_paths(self) -> int:
        return self.rates.shape[0]

    def negative_count(self) -> int:
        return int((self.rates < 0).sum())


def _model_kind(p: ModelParams) -> str:
    if isinstance(p, HwParams):
        return "hw"
    if isinstance(p, SinHwParams):
        return "sin-hw"
    raise TypeError(f"unsupported parameter type {type(p).__name__}")


def _quantize(v: float) -> float:
    return float(f"{v:.12e}")


class PriceCache:
    """Thread-safe map (model, quantized params, maturity, SimConfig) -> price."""

    def __init__(self) -> None:
        self._data: dict[tuple, float] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    @staticmethod
    def key(params: ModelParams, cfg: SimConfig, T: float) -> tuple:
        return (
            _model_kind(params),
            tuple(_quantize(v) for v in params.as_vector()),
            _quantize(T),
            cfg.fingerprint(),
        )

    def get(self, key: tuple) -> float | None:
        with self._lock:
            val = self._data.get(key)
            if val is None:
                self.misses += 1
            else:
                self.hits += 1
            return val

    def put(self, key: tuple, price: float) -> float:
        with self._lock:
            return self._data.setdefault(key, price)

    def __len__(self) -> int:
        return len(self._data)

    def clear(self) -> None:
        with self._lock:
            self._data.clear()


def n_steps_for(T: float, dt: float) -> int:
    n = int(round(T / dt))
    if n < 1:
        raise ValueError(f"horizon {T} is shorter than half a time step ({dt})")
    return n


@lru_cache(maxsize=8)
def _shock_block(seed: int, n_paths: int, n_steps: int) -> np.ndarray:
    out = np.empty((n_paths, n_steps))
    for i in range(n_paths):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))
        out[i] = rng.standard_normal(n_steps)
    out.setflags(write=False)
    return out


def _shocks(cfg: SimConfig, n_steps: int) -> np.ndarray:
    return _shock_block(int(cfg.seed), int(cfg.n_paths), n_steps)


def _kappa_grid(params: ModelParams, dt: float, n_steps: int) -> np.ndarray:
    if isinstance(params, HwParams):
        return np.full(n_steps, params.kappa)
    t = np.arange(n_steps) * dt
    return params.kappa0 + params.amp * np.sin(params.omega * t)


def _validated(params: ModelParams) -> ModelParams:
    _model_kind(params)
    if not np.all(np.isfinite(params.as_vector())):
        raise ValueError("model parameters must be finite")
    return params


def simulate_paths(params: ModelParams, cfg: SimConfig, horizon: float, use_numba: bool | None = None) -> PathMatrix:
    """Short-rate paths on the grid 0, dt, ..., round(horizon/dt)*dt."""
    _validated(params)
    if not horizon > 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    n = n_steps_for(horizon, cfg.dt)
    rates = _kernels.euler_paths(
        cfg.r0,
        _kappa_grid(params, cfg.dt, n),
        params.theta,
        cfg.dt,
        params.sigma * math.sqrt(cfg.dt),
        _shocks(cfg, n),
        use_numba=use_numba,
    )
    return PathMatrix(np.arange(n + 1) * cfg.dt, rates)


def mc_discount_factors(
    params: ModelParams, cfg: SimConfig, maturities, use_numba: bool | None = None
) -> np.ndarray:
    """Per-path discount factors, shape (n_paths, len(maturities))."""
    _validated(params)
    mats = np.atleast_1d(np.asarray(maturities, dtype=float))
    if np.any(~(mats > 0)):
        raise ValueError("maturities must be positive")
    steps = np.array([n_steps_for(T, cfg.dt) for T in mats], dtype=np.int64)
    order = np.argsort(steps, kind="stable")
    uniq, inverse = np.unique(steps[order], return_inverse=True)
    n = int(uniq[-1])
    integrals = _kernels.discount_integrals(
        cfg.r0,
        _kappa_grid(params, cfg.dt, n),
        params.theta,
        cfg.dt,
        params.sigma * math.sqrt(cfg.dt),
        _shocks(cfg, n),
        uniq,
        use_numba=use_numba,
    )
    out = np.empty((cfg.n_paths, mats.size))
    out[:, order] = np.exp(-integrals[:, inverse])
    return out


def mc_bond_prices(
    params: ModelParams,
    cfg: SimConfig,
    maturities,
    cache: PriceCache | None = None,
    use_numba: bool | None = None,
) -> np.ndarray:
    """Monte Carlo prices for several maturities from one set of paths."""
    mats = np.atleast_1d(np.asarray(maturities, dtype=float))
    prices = np.empty(mats.size)
    todo = []
    keys = []
    for i, T in enumerate(mats):
        key = PriceCache.key(params, cfg, float(T)) if cache is not None else None
        keys.append(key)
        hit = cache.get(key) if cache is not None else None
        if hit is None:
            todo.append(i)
        else:
            prices[i] = hit
    if todo:
        disc = mc_discount_factors(params, cfg, mats[todo], use_numba=use_numba)
        # column-wise contiguous means: the reduction order must not depend on how many maturities ride along
        fresh = [np.ascontiguousarray(disc[:, c]).mean() for c in range(disc.shape[1])]
        for i, p in zip(todo, fresh):
            prices[i] = cache.put(keys[i], float(p)) if cache is not None else p
    return prices


def mc_bond_price(
    params: ModelParams, cfg: SimConfig, T: float, cache: PriceCache | None = None
) -> float:
    return float(mc_bond_prices(params, cfg, [T], cache=cache)[0])


def mc_price_error(params: HwParams, cfg: SimConfig, T: float) -> float:
    """Analytical minus Monte Carlo price for the standard model."""
    return bond_price(params, cfg.r0, T) - mc_bond_price(params, cfg, T)
