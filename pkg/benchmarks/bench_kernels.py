"""Compare the numba kernels with the numpy fallback.

Run: python benchmarks/bench_kernels.py --paths 200 --horizon 30 --repeats 20
"""

from __future__ import annotations

import argparse
import math
import time

import numpy as np

from ratecycle import _kernels
from ratecycle.calib import objective
from ratecycle.mc import SimConfig, _shocks
from ratecycle.sinhw import SinHwParams, omega_from_period_years
from ratecycle.termstructure import YieldCurve

TENORS = [1.0, 2.0, 3.0, 5.0, 7.0, 10.0, 20.0, 30.0]
YIELDS = [0.0122, 0.0175, 0.0191, 0.0196, 0.0201, 0.0200, 0.0245, 0.0236]


def timed(fn, repeats: int) -> float:
    """Best wall time in milliseconds over `repeats` calls."""
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best * 1000.0


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--paths", type=int, default=200)
    p.add_argument("--horizon", type=float, default=30.0)
    p.add_argument("--dt", type=float, default=0.05)
    p.add_argument("--repeats", type=int, default=20)
    args = p.parse_args(argv)

    if not _kernels.HAS_NUMBA:
        print("numba is not installed; nothing to compare")
        return 1

    params = SinHwParams(0.3068, 0.2110, omega_from_period_years(22.0), 0.0256, 0.0101)
    cfg = SimConfig(dt=args.dt, n_paths=args.paths, seed=42, r0=0.0122)
    n = int(round(args.horizon / args.dt))
    shocks = _shocks(cfg, n)
    kappa = params.kappa0 + params.amp * np.sin(params.omega * np.arange(n) * args.dt)
    vol = params.sigma * math.sqrt(args.dt)
    stops = np.array([int(round(t / args.dt)) for t in TENORS if t <= args.horizon] or [n], dtype=np.int64)
    curve = YieldCurve.from_pairs(list(zip(TENORS, YIELDS)))
    x = params.as_vector()

    # warm-up compiles (or loads cached) kernels
    _kernels.euler_paths(cfg.r0, kappa, params.theta, args.dt, vol, shocks, use_numba=True)
    _kernels.discount_integrals(cfg.r0, kappa, params.theta, args.dt, vol, shocks, stops, use_numba=True)

    rows = []
    for name, fn in (
        ("euler_paths", lambda nb: _kernels.euler_paths(cfg.r0, kappa, params.theta, args.dt, vol, shocks, use_numba=nb)),
        ("discount_integrals", lambda nb: _kernels.discount_integrals(cfg.r0, kappa, params.theta, args.dt, vol, shocks, stops, use_numba=nb)),
    ):
        rows.append((name, timed(lambda: fn(False), args.repeats), timed(lambda: fn(True), args.repeats)))
        assert np.array_equal(fn(False), fn(True)), f"{name}: backends disagree"

    saved = _kernels.USE_NUMBA
    times = {}
    try:
        for flag in (False, True):
            _kernels.USE_NUMBA = flag
            objective("sin-hw", x, curve, cfg)
            times[flag] = timed(lambda: objective("sin-hw", x, curve, cfg), args.repeats)
    finally:
        _kernels.USE_NUMBA = saved
    rows.append(("sin-hw objective", times[False], times[True]))

    print(f"paths={args.paths} steps={n} repeats={args.repeats} threads={_kernels.numba.get_num_threads()}")
    print(f"{'kernel':<20}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for name, t_np, t_nb in rows:
        print(f"{name:<20}{t_np:>12.3f}{t_nb:>12.3f}{t_np / max(t_nb, 1e-9):>9.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
