"""Yield-curve data model, price/yield conversions and FRED-style CSV ingestion.

Yields are decimals everywhere inside the package (0.0122 means 1.22%).
Compounding is continuous.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "IngestionError",
    "Tenor",
    "YieldCurve",
    "YieldHistory",
    "BondPrice",
    "DEFAULT_COLUMNS",
    "price_from_yield",
    "yield_from_price",
    "load_history",
    "latest_curve",
]

# FRED constant-maturity Treasury series, tenor in years -> column
DEFAULT_COLUMNS: dict[float, str] = {
    1.0: "DGS1",
    2.0: "DGS2",
    3.0: "DGS3",
    5.0: "DGS5",
    7.0: "DGS7",
    10.0: "DGS10",
    20.0: "DGS20",
    30.0: "DGS30",
}

_MISSING_TOKENS = {"", ".", "na", "nan", "n/a", "#n/a", "null"}


class IngestionError(ValueError):
    """Raised when a yield CSV cannot be turned into a YieldHistory."""


@dataclass(frozen=True, order=True)
class Tenor:
    years: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.years) or self.years <= 0:
            raise ValueError(f"tenor must be a positive finite number of years, got {self.years!r}")

    def label(self) -> str:
        return f"{self.years:g}"


@dataclass(frozen=True)
class BondPrice:
    tenor: Tenor
    price: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.price) or self.price <= 0:
            raise ValueError(f"bond price must be positive and finite, got {self.price!r}")


@dataclass(frozen=True)
class YieldCurve:
    """Observed (tenor, yield) pairs for a single date."""

    as_of: date | None
    tenors: tuple[Tenor, ...]
    yields: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.tenors) == 0:
            raise ValueError("a yield curve needs at least one point")
        if len(self.tenors) != len(self.yields):
            raise ValueError("tenors and yields differ in length")
        for a, b in zip(self.tenors, self.tenors[1:]):
            if not b.years > a.years:
                raise ValueError("curve tenors must be strictly increasing")
        if not all(math.isfinite(y) for y in self.yields):
            raise ValueError("curve yields must be finite")

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[float, float]], as_of: date | None = None) -> "YieldCurve":
        return cls(as_of, tuple(Tenor(float(t)) for t, _ in pairs), tuple(float(y) for _, y in pairs))

    @property
    def maturities(self) -> np.ndarray:
        return np.array([t.years for t in self.tenors])

    @property
    def yield_array(self) -> np.ndarray:
        return np.array(self.yields)

    def observed_prices(self) -> np.ndarray:
        return np.exp(-self.maturities * self.yield_array)

    def short_rate_proxy(self) -> float:
        """The 1-year yield if quoted, else the shortest tenor's yield."""
        for t, y in zip(self.tenors, self.yields):
            if t.years == 1.0:
                return y
        return self.yields[0]

    def __len__(self) -> int:
        return len(self.tenors)


@dataclass
class YieldHistory:
    """Daily yields per tenor. Missing observations are stored as NaN."""

    dates: list[date]
    series: dict[Tenor, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for a, b in zip(self.dates, self.dates[1:]):
            if not b > a:
                raise ValueError(f"dates must be strictly increasing ({a} then {b})")
        for tenor, values in self.series.items():
            if len(values) != len(self.dates):
                raise ValueError(f"series for tenor {tenor.label()} has {len(values)} rows, expected {len(self.dates)}")

    @property
    def tenors(self) -> list[Tenor]:
        return sorted(self.series)

    def __len__(self) -> int:
        return len(self.dates)

    def compact(self, tenor: Tenor) -> np.ndarray:
        """The series for `tenor` with missing observations dropped."""
        values = self.series[tenor]
        return values[~np.isnan(values)]


def _check_finite(**values: float) -> None:
    for name, v in values.items():
        if not math.isfinite(v):
            raise ValueError(f"{name} must be finite, got {v!r}")


def price_from_yield(tenor: Tenor | float, y: float) -> BondPrice:
    """Continuously compounded discount factor exp(-T * y)."""
    if not isinstance(tenor, Tenor):
        tenor = Tenor(float(tenor))
    _check_finite(y=y)
    return BondPrice(tenor, math.exp(-tenor.years * y))


def yield_from_price(tenor: Tenor | float, p: BondPrice | float) -> float:
    if not isinstance(tenor, Tenor):
        tenor = Tenor(float(tenor))
    price = p.price if isinstance(p, BondPrice) else float(p)
    if not price > 0 or not math.isfinite(price):
        raise ValueError(f"cannot take the yield of non-positive price {price!r}")
    return -math.log(price) / tenor.years


def _parse_date(text: str) -> date:
    text = text.strip()
    try:
        return date.fromisoformat(text)
    except ValueError:
        pass
    return datetime.strptime(text, "%m/%d/%Y").date()


def _parse_yield(text: str) -> float:
    if text.strip().lower() in _MISSING_TOKENS:
        return math.nan
    try:
        value = float(text)
    except ValueError:
        return math.nan
    return value / 100.0 if math.isfinite(value) else math.nan


def load_history(
    path: str | Path,
    column_map: Mapping[float, str] | None = None,
    date_column: str = "DATE",
) -> YieldHistory:
    """Read a FRED-style CSV (one date column, one percent-yield column per tenor).

    Columns from `column_map` that are absent from the header are skipped, but at
    least one must be present. Unparsable or empty yield cells become NaN.
    """
    column_map = DEFAULT_COLUMNS if column_map is None else column_map
    path = Path(path)
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise IngestionError(f"{path}: file is empty") from None
        if date_column not in header:
            raise IngestionError(f"{path}: no date column {date_column!r} in header {header}")
        date_idx = header.index(date_column)
        present = {float(t): header.index(col) for t, col in column_map.items() if col in header}
        if not present:
            raise IngestionError(
                f"{path}: none of the tenor columns {sorted(column_map.values())} found in header {header}"
            )

        dates: list[date] = []
        cols: dict[float, list[float]] = {t: [] for t in present}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                d = _parse_date(row[date_idx])
            except (ValueError, IndexError):
                raise IngestionError(
                    f"{path}: row {lineno}, column {date_column!r}: cannot parse date "
                    f"{row[date_idx] if date_idx < len(row) else ''!r}"
                ) from None
            if dates and d <= dates[-1]:
                raise IngestionError(f"{path}: row {lineno}, column {date_column!r}: date {d} is not after {dates[-1]}")
            dates.append(d)
            for t, idx in present.items():
                cols[t].append(_parse_yield(row[idx]) if idx < len(row) else math.nan)

    series = {Tenor(t): np.array(v, dtype=float) for t, v in sorted(cols.items())}
    return YieldHistory(dates, series)


def latest_curve(h: YieldHistory) -> YieldCurve:
    """Curve at the last date on which every tenor has a value."""
    if len(h) == 0:
        raise ValueError("history is empty")
    tenors = h.tenors
    block = np.column_stack([h.series[t] for t in tenors])
    full = np.flatnonzero(~np.isnan(block).any(axis=1))
    if full.size == 0:
        raise ValueError("no date has a value for every tenor")
    i = int(full[-1])
    return YieldCurve(h.dates[i], tuple(tenors), tuple(float(v) for v in block[i]))
