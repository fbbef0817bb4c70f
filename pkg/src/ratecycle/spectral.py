"""Periodicity diagnostics for yield histories.

Spectra are raw DFT magnitudes of the mean-removed series (no window, no
smoothing). Normalisation: with X = rfft(x - mean(x)) and n samples,

    sum (x - mean)^2 = (|X_0|^2 + 2 sum_{0<k<n/2} |X_k|^2 + |X_{n/2}|^2 [n even]) / n

which :func:`parseval_energy` evaluates. Periods are reported in samples;
converting them to years depends on the sampling calendar and is left to the caller.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = [
    "Spectrum",
    "PeriodReport",
    "LjungBoxResult",
    "detrend_mean",
    "magnitude_spectrum",
    "parseval_energy",
    "dominant_periods",
    "period_report",
    "acf",
    "acf_band",
    "ljung_box",
    "chi2_sf",
    "CALENDAR_DAYS_PER_YEAR",
    "TRADING_DAYS_PER_YEAR",
]

CALENDAR_DAYS_PER_YEAR = 365.25
TRADING_DAYS_PER_YEAR = 252.0

# peaks below this fraction of the largest magnitude are rounding noise
NOISE_FLOOR = 1e-8


@dataclass(frozen=True)
class Spectrum:
    frequencies: np.ndarray  # cycles per sample, k/n for k = 0..n//2
    magnitudes: np.ndarray
    n_samples: int


@dataclass(frozen=True)
class PeriodReport:
    tenor: float
    periods_samples: list[float]
    n_samples: int

    @property
    def periods_years_calendar(self) -> list[float]:
        return [p / CALENDAR_DAYS_PER_YEAR for p in self.periods_samples]

    @property
    def periods_years_trading(self) -> list[float]:
        return [p / TRADING_DAYS_PER_YEAR for p in self.periods_samples]


@dataclass(frozen=True)
class LjungBoxResult:
    statistic: float
    lags: int
    p_value: float


def _as_series(series) -> np.ndarray:
    x = np.asarray(series, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("series is empty")
    if not np.all(np.isfinite(x)):
        raise ValueError("series contains missing or non-finite values; drop them first")
    return x


def detrend_mean(series) -> np.ndarray:
    x = _as_series(series)
    return x - x.mean()


def magnitude_spectrum(series) -> Spectrum:
    x = _as_series(series)
    if x.size < 4:
        raise ValueError(f"need at least 4 samples for a spectrum, got {x.size}")
    X = np.fft.rfft(x - x.mean())
    return Spectrum(np.fft.rfftfreq(x.size), np.abs(X), x.size)


def parseval_energy(s: Spectrum) -> float:
    m2 = s.magnitudes**2
    interior_end = len(m2) - 1 if s.n_samples % 2 == 0 else len(m2)
    total = m2[0] + 2.0 * m2[1:interior_end].sum()
    if s.n_samples % 2 == 0:
        total += m2[-1]
    return float(total / s.n_samples)


def _local_maxima(mag: np.ndarray) -> list[int]:
    """Indices (into `mag`) of strict local maxima; a flat top counts once, at its first index."""
    peaks = []
    i, n = 0, len(mag)
    while i < n:
        j = i
        while j + 1 < n and mag[j + 1] == mag[i]:
            j += 1
        left_ok = i == 0 or mag[i - 1] < mag[i]
        right_ok = j == n - 1 or mag[j + 1] < mag[i]
        if left_ok and right_ok:
            peaks.append(i)
        i = j + 1
    return peaks


def dominant_periods(s: Spectrum, k: int = 2) -> list[float]:
    """Periods (samples) of the `k` largest spectral peaks, zero frequency excluded.

    Ties in magnitude go to the lower frequency.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    mag = s.magnitudes[1:]
    if mag.size == 0:
        return []
    floor = NOISE_FLOOR * mag.max()
    peaks = [i for i in _local_maxima(mag) if mag[i] > floor]
    peaks.sort(key=lambda i: (-mag[i], i))
    return [s.n_samples / (i + 1) for i in peaks[:k]]


def period_report(tenor: float, series, k: int = 2) -> PeriodReport:
    x = _as_series(series)
    return PeriodReport(tenor, dominant_periods(magnitude_spectrum(x), k), x.size)


def acf(series, max_lag: int) -> np.ndarray:
    x = _as_series(series)
    if not 0 <= max_lag < x.size:
        raise ValueError(f"max_lag must be in [0, {x.size}), got {max_lag}")
    d = x - x.mean()
    denom = d @ d
    if denom == 0:
        raise ValueError("series has zero variance")
    return np.array([1.0] + [(d[: x.size - k] @ d[k:]) / denom for k in range(1, max_lag + 1)])


def acf_band(n: int, z: float = 1.959963984540054) -> float:
    """Half-width of the large-sample white-noise confidence band."""
    return z / np.sqrt(n)


def chi2_sf(q: float, dof: int) -> float:
    """Chi-square survival function via the regularized upper incomplete gamma."""
    return float(special.gammaincc(dof / 2.0, q / 2.0))


def ljung_box(series, lags: int = 30) -> LjungBoxResult:
    x = _as_series(series)
    n = x.size
    if not 1 <= lags < n / 2:
        raise ValueError(f"lags must be in [1, n/2), got {lags} for n={n}")
    rho = acf(x, lags)[1:]
    q = n * (n + 2) * np.sum(rho**2 / (n - np.arange(1, lags + 1)))
    return LjungBoxResult(float(q), lags, chi2_sf(float(q), lags))
