"""Euler-Maruyama inner loops, compiled with numba when available.

Set ``RATECYCLE_NO_NUMBA=1`` to force the pure-numpy path. Both backends evaluate
the same expression in the same order per path, so they agree bit-for-bit on
IEEE hardware without FMA contraction (checked in the test-suite).

``RATECYCLE_THREADS`` caps the numba worker count. Paths are independent, so
results do not depend on it.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
    from numba import njit, prange

    HAS_NUMBA = True
    if "NUMBA_THREADING_LAYER" not in os.environ:
        # the bundled TBB is too old for numba; avoid the import-time warning
        numba.config.THREADING_LAYER = "workqueue"
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and os.environ.get("RATECYCLE_NO_NUMBA", "").strip().lower() not in ("1", "true", "yes")


def thread_cap() -> int | None:
    raw = os.environ.get("RATECYCLE_THREADS", "").strip()
    if not raw:
        return None
    n = int(raw)
    if n < 1:
        raise ValueError(f"RATECYCLE_THREADS must be >= 1, got {raw!r}")
    return n


def euler_paths_numpy(r0, kappa, theta, dt, vol, shocks):
    n_paths, n_steps = shocks.shape
    out = np.empty((n_paths, n_steps + 1))
    r = np.full(n_paths, r0)
    out[:, 0] = r
    for j in range(n_steps):
        r = r + kappa[j] * (theta - r) * dt + vol * shocks[:, j]
        out[:, j + 1] = r
    return out


def discount_integrals_numpy(r0, kappa, theta, dt, vol, shocks, stops):
    """Left-endpoint integrals sum_{j<m} r_j dt for each m in `stops` (sorted, >= 1)."""
    n_paths = shocks.shape[0]
    out = np.empty((n_paths, stops.size))
    r = np.full(n_paths, r0)
    acc = np.zeros(n_paths)
    k = 0
    for j in range(int(stops[-1])):
        acc = acc + r * dt
        r = r + kappa[j] * (theta - r) * dt + vol * shocks[:, j]
        while k < stops.size and stops[k] == j + 1:
            out[:, k] = acc
            k += 1
    return out


if HAS_NUMBA:

    @njit(parallel=True, cache=True)
    def euler_paths_numba(r0, kappa, theta, dt, vol, shocks):
        n_paths, n_steps = shocks.shape
        out = np.empty((n_paths, n_steps + 1))
        for i in prange(n_paths):
            r = r0
            out[i, 0] = r
            for j in range(n_steps):
                r = r + kappa[j] * (theta - r) * dt + vol * shocks[i, j]
                out[i, j + 1] = r
        return out

    @njit(parallel=True, cache=True)
    def discount_integrals_numba(r0, kappa, theta, dt, vol, shocks, stops):
        n_paths = shocks.shape[0]
        n_stops = stops.size
        last = stops[n_stops - 1]
        out = np.empty((n_paths, n_stops))
        for i in prange(n_paths):
            r = r0
            acc = 0.0
            k = 0
            for j in range(last):
                acc = acc + r * dt
                r = r + kappa[j] * (theta - r) * dt + vol * shocks[i, j]
                while k < n_stops and stops[k] == j + 1:
                    out[i, k] = acc
                    k += 1
        return out

else:  # pragma: no cover
    euler_paths_numba = euler_paths_numpy
    discount_integrals_numba = discount_integrals_numpy


def _with_threads(fn):
    def call(*args):
        if fn is euler_paths_numba or fn is discount_integrals_numba:
            cap = thread_cap()
            if cap is not None and HAS_NUMBA:
                numba.set_num_threads(min(cap, numba.config.NUMBA_NUM_THREADS))
        return fn(*args)

    return call


def euler_paths(r0, kappa, theta, dt, vol, shocks, use_numba: bool | None = None):
    fn = euler_paths_numba if (USE_NUMBA if use_numba is None else use_numba) else euler_paths_numpy
    return _with_threads(fn)(float(r0), kappa, float(theta), float(dt), float(vol), shocks)


def discount_integrals(r0, kappa, theta, dt, vol, shocks, stops, use_numba: bool | None = None):
    fn = discount_integrals_numba if (USE_NUMBA if use_numba is None else use_numba) else discount_integrals_numpy
    stops = np.ascontiguousarray(stops, dtype=np.int64)
    return _with_threads(fn)(float(r0), kappa, float(theta), float(dt), float(vol), shocks, stops)
