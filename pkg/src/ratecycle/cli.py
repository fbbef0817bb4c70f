"""Command-line front end: ``ratecycle {periodicity,calibrate,price,simulate}``.

Every command writes its outputs plus ``manifest.json`` into ``--out``. CSV
numbers carry 6 significant digits; JSON keeps full precision. Set
SOURCE_DATE_EPOCH to pin the manifest timestamp for byte-stable reruns.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import re
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .calib import (
    HW_X0,
    SIN_HW_X0,
    CalibrationResult,
    calibrate_hw,
    calibrate_sin_hw,
)
from .hw import HwParams, bond_price
from .mc import SimConfig, mc_bond_prices, simulate_paths
from .sinhw import DEFAULT_PERIOD_YEARS, SinHwParams, omega_from_period_years
from .spectral import acf, acf_band, ljung_box, magnitude_spectrum, period_report
from .termstructure import DEFAULT_COLUMNS, IngestionError, YieldCurve, latest_curve, load_history

log = logging.getLogger("ratecycle")

DEFAULT_TENOR_COLS = ",".join(DEFAULT_COLUMNS.values())
OMEGA_DRIFT_TOL = 0.01


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------- helpers


def fmt(v: float | None) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return format(float(v), ".6g")


def fmt_list(vals: Sequence[float]) -> str:
    return "[" + ", ".join(fmt(v) for v in vals) + "]"


def write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_json(path: Path, obj: Any) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = datetime.fromtimestamp(int(epoch), timezone.utc) if epoch else datetime.now(timezone.utc)
    return when.strftime("%Y-%m-%dT%H:%M:%SZ")


def run_manifest(args: argparse.Namespace) -> dict[str, Any]:
    overrides = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out", "command", "verbose", "input")}
    return {
        "command": args.command,
        "input": getattr(args, "input", None),
        "overrides": overrides,
        "seed": getattr(args, "seed", None),
        "timestamp": _timestamp(),
        "version": __version__,
    }


def parse_tenor_cols(text: str) -> dict[float, str]:
    """``"1=DGS1,30=DGS30"`` or ``"DGS1,DGS30"`` (tenor read from trailing digits)."""
    out: dict[float, str] = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        if "=" in item:
            t, col = item.split("=", 1)
            out[float(t)] = col.strip()
        else:
            m = re.search(r"(\d+(?:\.\d+)?)$", item)
            if not m:
                raise UsageError(f"cannot infer a tenor from column {item!r}; use TENOR=COLUMN")
            out[float(m.group(1))] = item
    if not out:
        raise UsageError("no tenor columns given")
    return out


def parse_kv(text: str) -> dict[str, float]:
    out = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        if "=" not in item:
            raise UsageError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k.strip()] = float(v)
        except ValueError:
            raise UsageError(f"value for {k!r} is not a number: {v!r}") from None
    return out


def _load_history(args):
    return load_history(args.input, parse_tenor_cols(args.tenor_cols), date_column=args.date_col)


def _load_curve(args) -> YieldCurve:
    return latest_curve(_load_history(args))


def _tenor_label(t: float) -> str:
    return f"{t:g}"


# --------------------------------------------------------------------------- params sources


def _params_from(src: str, model: str) -> tuple[HwParams | SinHwParams, dict[str, Any]]:
    """Parameters from a calibration.json path or an inline ``k=v,...`` list."""
    meta: dict[str, Any] = {}
    path = Path(src)
    if path.suffix == ".json" or path.exists():
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except OSError as e:
            raise UsageError(f"cannot read parameters from {src}: {e}") from None
        if doc.get("model") != model:
            raise UsageError(f"{src} holds {doc.get('model')!r} parameters, expected {model!r}")
        values = doc["params"]
        meta = {k: doc[k] for k in ("r0", "sim") if k in doc}
    else:
        values = parse_kv(src)
    try:
        if model == "hw":
            return HwParams(**{k: float(values[k]) for k in ("kappa", "theta", "sigma")}), meta
        if "omega" not in values and "period_years" in values:
            values = dict(values, omega=omega_from_period_years(values.pop("period_years")))
        return SinHwParams(**{k: float(values[k]) for k in ("kappa0", "amp", "omega", "theta", "sigma")}), meta
    except KeyError as e:
        raise UsageError(f"{model} parameters missing {e.args[0]!r} in {src!r}") from None
    except ValueError as e:
        raise UsageError(str(e)) from None


def _resolve_r0(args, metas: Sequence[dict], curve: YieldCurve | None) -> float:
    if args.r0 is not None:
        return args.r0
    for m in metas:
        if "r0" in m:
            return float(m["r0"])
    if curve is not None:
        return curve.short_rate_proxy()
    raise UsageError("no initial short rate: pass --r0, --input, or a calibration.json that records r0")


# --------------------------------------------------------------------------- commands


def cmd_periodicity(args) -> None:
    hist = _load_history(args)
    out = Path(args.out)
    period_rows, lb_rows = [], []
    for tenor in hist.tenors:
        x = hist.compact(tenor)
        label = _tenor_label(tenor.years)
        if x.size < 4:
            raise UsageError(f"tenor {label}: only {x.size} observations after dropping gaps")
        rep = period_report(tenor.years, x, k=args.k)
        period_rows.append(
            [label, fmt_list(rep.periods_samples), fmt_list(rep.periods_years_calendar),
             fmt_list(rep.periods_years_trading), rep.n_samples]
        )
        spec = magnitude_spectrum(x)
        write_csv(out / f"spectrum_{label}.csv", ["frequency", "magnitude"],
                  [[fmt(f), fmt(m)] for f, m in zip(spec.frequencies, spec.magnitudes)])
        max_lag = min(args.acf_lags, x.size - 1)
        band = acf_band(x.size)
        write_csv(out / f"acf_{label}.csv", ["lag", "acf", "band_lower", "band_upper"],
                  [[k, fmt(r), fmt(-band), fmt(band)] for k, r in enumerate(acf(x, max_lag))])
        if args.lags < x.size / 2:
            lb = ljung_box(x, args.lags)
            lb_rows.append([label, lb.lags, fmt(lb.statistic), fmt(lb.p_value)])
        else:
            lb_rows.append([label, args.lags, "", ""])
    write_csv(out / "periods.csv",
              ["tenor", "period_samples", "period_years_calendar", "period_years_trading", "n_samples"],
              period_rows)
    write_csv(out / "ljungbox.csv", ["tenor", "lags", "Q", "p"], lb_rows)


def _x0_hw(overrides: dict[str, float]) -> HwParams:
    vals = {"kappa": HW_X0.kappa, "theta": HW_X0.theta, "sigma": HW_X0.sigma}
    bad = set(overrides) - set(vals)
    if bad:
        raise UsageError(f"unknown HW parameters in --x0: {sorted(bad)}")
    vals.update(overrides)
    return HwParams(**vals)


def _x0_sin(overrides: dict[str, float], omega: float) -> SinHwParams:
    vals = {"kappa0": SIN_HW_X0.kappa0, "amp": SIN_HW_X0.amp, "omega": omega,
            "theta": SIN_HW_X0.theta, "sigma": SIN_HW_X0.sigma}
    bad = set(overrides) - set(vals)
    if bad:
        raise UsageError(f"unknown Sin-HW parameters in --x0: {sorted(bad)}")
    vals.update(overrides)
    return SinHwParams(**vals)


def _result_doc(res: CalibrationResult, curve: YieldCurve, r0: float) -> dict[str, Any]:
    names = ("kappa", "theta", "sigma") if res.model == "hw" else ("kappa0", "amp", "omega", "theta", "sigma")
    doc: dict[str, Any] = {
        "model": res.model,
        "params": dict(zip(names, map(float, res.params.as_vector()))),
        "objective": res.objective,
        "rmse_yield": res.rmse_yield,
        "iterations": res.iterations,
        "converged": res.converged,
        "r0": r0,
        "as_of": curve.as_of.isoformat() if curve.as_of else None,
        "per_tenor": [
            {"tenor": r.tenor, "observed_yield": r.observed_yield, "fitted_yield": r.fitted_yield,
             "yield_error": r.yield_error, "observed_price": r.observed_price, "model_price": r.model_price}
            for r in res.per_tenor
        ],
    }
    if res.sim_config is not None:
        c = res.sim_config
        doc["sim"] = {"dt": c.dt, "n_paths": c.n_paths, "seed": c.seed}
        doc["fixed"] = res.fixed
    return doc


def cmd_calibrate(args) -> None:
    curve = _load_curve(args)
    r0 = args.r0 if args.r0 is not None else curve.short_rate_proxy()
    overrides = parse_kv(args.x0) if args.x0 else {}
    if args.model == "hw":
        if args.free_omega:
            raise UsageError("--free-omega only applies to --model sin-hw")
        res = calibrate_hw(curve, _x0_hw(overrides), r0=r0, xatol=args.xatol, max_iter=args.max_iter)
        doc = _result_doc(res, curve, r0)
    else:
        omega = omega_from_period_years(args.period_years)
        cfg = SimConfig(dt=args.dt, n_paths=args.paths, seed=args.seed, r0=r0)
        res = calibrate_sin_hw(
            curve, _x0_sin(overrides, omega), fix_omega=omega, cfg=cfg,
            xatol=args.xatol, max_iter=args.max_iter, free_omega=args.free_omega,
        )
        doc = _result_doc(res, curve, r0)
        doc["free_omega"] = bool(args.free_omega)
        doc["warning"] = None
        if args.free_omega:
            drift = abs(res.params.omega - omega) / omega
            if drift > OMEGA_DRIFT_TOL:
                doc["warning"] = (
                    f"omega drifted to {res.params.omega:.6g} rad/year (period "
                    f"{res.params.period_years:.4g} years) from {omega:.6g} "
                    f"({args.period_years:g}-year cycle); the free-omega optimum is not tied to the observed periodicity"
                )
                log.warning(doc["warning"])
    doc["manifest"] = run_manifest(args)
    out = Path(args.out)
    write_json(out / "calibration.json", doc)
    write_csv(out / "fit_table.csv", ["tenor", "observed_pct", "fitted_pct", "error_pct"],
              [[_tenor_label(r.tenor), fmt(100 * r.observed_yield), fmt(100 * r.fitted_yield),
                fmt(100 * r.yield_error)] for r in res.per_tenor])
    if not res.converged:
        log.warning("calibration did not converge; best point recorded with converged=false")


def _maturity_list(args, curve: YieldCurve | None) -> list[float]:
    if args.maturities:
        try:
            mats = [float(s) for s in args.maturities.split(",") if s.strip()]
        except ValueError:
            raise UsageError(f"bad --maturities {args.maturities!r}") from None
    elif curve is not None:
        mats = list(curve.maturities)
    else:
        mats = list(DEFAULT_COLUMNS)
    if not mats or any(not m > 0 for m in mats):
        raise UsageError("maturities must be positive")
    return mats


def cmd_price(args) -> None:
    if args.sin_hw and args.method == "analytic":
        raise UsageError(
            "the sinusoidal model has no closed-form bond price (its B and A factors have no "
            "analytical solution); use --method mc"
        )
    if not args.hw and not args.sin_hw:
        raise UsageError("give --hw and/or --sin-hw parameters")
    curve = _load_curve(args) if args.input else None
    hw, hw_meta = _params_from(args.hw, "hw") if args.hw else (None, {})
    sin, sin_meta = _params_from(args.sin_hw, "sin-hw") if args.sin_hw else (None, {})
    r0 = _resolve_r0(args, [hw_meta, sin_meta], curve)
    mats = _maturity_list(args, curve)
    cfg = SimConfig(dt=args.dt, n_paths=args.paths, seed=args.seed, r0=r0)

    observed = {}
    if curve is not None:
        observed = dict(zip(curve.maturities.tolist(), curve.observed_prices().tolist()))
    n = len(mats)
    nan = np.full(n, np.nan)
    ana = np.array([bond_price(hw, r0, T) for T in mats]) if hw is not None and args.method != "mc" else nan
    mc_hw = mc_bond_prices(hw, cfg, mats) if hw is not None and args.method != "analytic" else nan
    mc_sin = mc_bond_prices(sin, cfg, mats) if sin is not None else nan
    obs = np.array([observed.get(T, np.nan) for T in mats])

    rows = []
    for i, T in enumerate(mats):
        rows.append([fmt(T), fmt(obs[i]), fmt(ana[i]), fmt(mc_hw[i]), fmt(mc_sin[i]),
                     fmt(ana[i] - mc_hw[i]), fmt(obs[i] - ana[i]), fmt(obs[i] - mc_sin[i])])
    write_csv(Path(args.out) / "prices.csv",
              ["maturity", "observed", "analytical_hw", "mc_hw", "mc_sin_hw",
               "error_mc_hw", "error_fit_hw", "error_fit_sin_hw"], rows)


def cmd_simulate(args) -> None:
    if not args.horizon > 0:
        raise UsageError(f"--horizon must be positive, got {args.horizon}")
    curve = _load_curve(args) if args.input else None
    params, meta = _params_from(args.params, args.model)
    r0 = _resolve_r0(args, [meta], curve)
    cfg = SimConfig(dt=args.dt, n_paths=args.paths, seed=args.seed, r0=r0)
    pm = simulate_paths(params, cfg, args.horizon)
    rows = [["time", *map(fmt, pm.times)]]
    rows += [[f"path_{i}", *map(fmt, row)] for i, row in enumerate(pm.rates)]
    rows.append(["mean", *map(fmt, pm.rates.mean(axis=0))])
    rows.append(["negative_count", *map(str, (pm.rates < 0).sum(axis=0))])
    name = "hw" if args.model == "hw" else "sin_hw"
    with (Path(args.out) / f"paths_{name}.csv").open("w", newline="", encoding="utf-8") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)
    write_json(Path(args.out) / f"paths_{name}_summary.json",
               {"model": args.model, "n_paths": pm.n_paths, "n_points": len(pm.times),
                "negative_grid_points": pm.negative_count(), "r0": r0})


# --------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ratecycle", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, input_required=True, paths=200):
        sp.add_argument("--input", required=input_required, help="yield history CSV (percent yields)")
        sp.add_argument("--date-col", default="DATE")
        sp.add_argument("--tenor-cols", default=DEFAULT_TENOR_COLS,
                        help="comma list of COLUMN (tenor from trailing digits) or TENOR=COLUMN")
        sp.add_argument("--seed", type=int, default=42)
        sp.add_argument("--dt", type=float, default=0.05, help="time step in years")
        sp.add_argument("--paths", type=int, default=paths)
        sp.add_argument("--out", default=".", help="output directory")

    sp = sub.add_parser("periodicity", help="spectra, dominant periods, ACF and Ljung-Box per tenor")
    common(sp)
    sp.add_argument("--lags", type=int, default=30, help="Ljung-Box lags")
    sp.add_argument("--acf-lags", type=int, default=30)
    sp.add_argument("--k", type=int, default=2, help="number of dominant periods")
    sp.set_defaults(func=cmd_periodicity)

    sp = sub.add_parser("calibrate", help="fit a model to the latest complete curve")
    common(sp)
    sp.add_argument("--model", choices=("hw", "sin-hw"), default="hw")
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--period-years", type=float, default=DEFAULT_PERIOD_YEARS)
    g.add_argument("--free-omega", action="store_true", help="let omega float (starts at the period's omega)")
    sp.add_argument("--x0", default="", help="initial guess overrides, e.g. kappa=0.2,sigma=0.02")
    sp.add_argument("--r0", type=float, default=None)
    sp.add_argument("--xatol", type=float, default=1e-3)
    sp.add_argument("--max-iter", type=int, default=None)
    sp.set_defaults(func=cmd_calibrate)

    sp = sub.add_parser("price", help="zero-coupon prices: analytical and/or Monte Carlo")
    common(sp, input_required=False)
    sp.add_argument("--hw", help="calibration.json or kappa=..,theta=..,sigma=..")
    sp.add_argument("--sin-hw", help="calibration.json or kappa0=..,amp=..,omega=..,theta=..,sigma=..")
    sp.add_argument("--method", choices=("analytic", "mc", "both"), default="both")
    sp.add_argument("--maturities", default="", help="comma list in years (default: curve tenors)")
    sp.add_argument("--r0", type=float, default=None)
    sp.set_defaults(func=cmd_price)

    sp = sub.add_parser("simulate", help="export short-rate paths")
    common(sp, input_required=False, paths=100)
    sp.add_argument("--model", choices=("hw", "sin-hw"), required=True)
    sp.add_argument("--params", required=True, help="calibration.json or inline k=v list")
    sp.add_argument("--horizon", type=float, default=30.0)
    sp.add_argument("--r0", type=float, default=None)
    sp.set_defaults(func=cmd_simulate)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        args.func(args)
        write_json(out / "manifest.json", run_manifest(args))
    except UsageError as e:
        parser.error(str(e))
    except (IngestionError, FileNotFoundError) as e:
        print(f"ratecycle: error: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"ratecycle: error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
