import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from statsmodels.stats.diagnostic import acorr_ljungbox

from ratecycle.spectral import (
    Spectrum,
    acf,
    chi2_sf,
    detrend_mean,
    dominant_periods,
    ljung_box,
    magnitude_spectrum,
    parseval_energy,
    period_report,
)


def naive_dft_magnitudes(x):
    n = len(x)
    d = np.asarray(x, float) - np.mean(x)
    k = np.arange(n // 2 + 1)[:, None]
    t = np.arange(n)[None, :]
    return np.abs((d * np.exp(-2j * np.pi * k * t / n)).sum(axis=1))


def ar1(phi, n, seed):
    rng = np.random.default_rng(seed)
    e = rng.standard_normal(n + 200)
    x = np.empty_like(e)
    x[0] = e[0]
    for i in range(1, len(e)):
        x[i] = phi * x[i - 1] + e[i]
    return x[200:]


def test_detrend_mean():
    assert np.allclose(detrend_mean([1, 2, 3]), [-1, 0, 1])
    assert np.all(detrend_mean([4.2] * 5) == 0)
    x = np.random.default_rng(0).normal(3, 2, 8055)
    out = detrend_mean(x)
    assert len(out) == 8055 and abs(out.mean()) < 1e-12
    with pytest.raises(ValueError):
        detrend_mean([])


@pytest.mark.parametrize("n", [4, 5, 64, 97, 1024])
def test_spectrum_matches_definition(n):
    x = np.random.default_rng(n).standard_normal(n)
    s = magnitude_spectrum(x)
    ref = naive_dft_magnitudes(x)
    assert s.n_samples == n
    assert np.allclose(s.frequencies, np.arange(n // 2 + 1) / n)
    assert np.allclose(s.magnitudes, ref, rtol=1e-9, atol=1e-9 * ref.max())


def test_spectrum_too_short():
    with pytest.raises(ValueError):
        magnitude_spectrum([1.0, 2.0, 3.0])


def test_single_sine_peak():
    t = np.arange(1000)
    s = magnitude_spectrum(np.sin(2 * np.pi * t / 100))
    assert s.frequencies[np.argmax(s.magnitudes)] == pytest.approx(0.01)


def test_two_sines_ordering():
    t = np.arange(2000)
    s = magnitude_spectrum(2 * np.sin(2 * np.pi * t / 100) + np.sin(2 * np.pi * t / 40))
    i100, i40 = 2000 // 100, 2000 // 40
    assert s.magnitudes[i100] > s.magnitudes[i40]
    assert dominant_periods(s, 2) == [100.0, 40.0]


def test_white_noise_has_no_spike():
    for seed in range(10):
        m = magnitude_spectrum(np.random.default_rng(seed).standard_normal(4096)).magnitudes[1:]
        assert m.max() < 5 * np.median(m)


def test_exact_bin_sine():
    t = np.arange(2200)
    s = magnitude_spectrum(np.sin(2 * np.pi * t / 220))
    assert dominant_periods(s, 1) == [220.0]
    assert dominant_periods(s, 2) == [220.0]


def test_plateau_and_ties():
    # equal peaks at bins 2 and 5: lower frequency first; flat top at bins 8-9 reported once
    mags = np.array([0, 1, 5, 1, 2, 5, 0, 1, 3, 3, 0.5])
    s = Spectrum(np.arange(11) / 20, mags, 20)
    assert dominant_periods(s, 3) == [10.0, 4.0, 2.5]


def test_parseval():
    for n in (1000, 1001):
        x = np.random.default_rng(n).standard_normal(n) + 5
        d = x - x.mean()
        assert parseval_energy(magnitude_spectrum(x)) == pytest.approx(d @ d, rel=1e-8)


@settings(max_examples=25, deadline=None)
@given(scale=st.floats(1e-3, 1e3), seed=st.integers(0, 1000))
def test_dominant_periods_scale_invariant(scale, seed):
    x = np.cumsum(np.random.default_rng(seed).standard_normal(512))
    assert dominant_periods(magnitude_spectrum(x), 3) == dominant_periods(magnitude_spectrum(scale * x), 3)


def test_period_report_units():
    rep = period_report(30.0, np.sin(2 * np.pi * np.arange(2200) / 220), k=1)
    assert rep.periods_samples == [220.0]
    assert rep.periods_years_calendar[0] == pytest.approx(220 / 365.25)
    assert rep.periods_years_trading[0] == pytest.approx(220 / 252)


# --------------------------------------------------------------------------- ACF / Ljung-Box


def test_acf_basics():
    x = np.random.default_rng(1).standard_normal(500)
    r = acf(x, 10)
    assert r[0] == 1.0 and len(r) == 11
    assert np.allclose(acf(x + 100.0, 10), r, atol=1e-10)
    with pytest.raises(ValueError):
        acf(np.ones(10), 3)
    with pytest.raises(ValueError):
        acf(x, 500)


def test_acf_white_noise_band():
    n = 10000
    exceed = 0
    for seed in range(10):
        r = acf(np.random.default_rng(seed).standard_normal(n), 30)[1:]
        exceed += int(np.sum(np.abs(r) >= 3 / math.sqrt(n)))
    assert exceed <= 2


def test_acf_ar1():
    assert acf(ar1(0.9, 10000, 4), 1)[1] == pytest.approx(0.9, abs=0.02)


def test_chi2_sf_against_mpmath():
    mpmath.mp.dps = 30
    for q, k in [(0.5, 1), (10.0, 5), (30.0, 30), (45.0, 30), (200.0, 30), (5.0, 30)]:
        ref = float(mpmath.gammainc(k / 2, q / 2, mpmath.inf, regularized=True))
        assert chi2_sf(q, k) == pytest.approx(ref, rel=1e-10, abs=1e-300)


def test_ljung_box_against_statsmodels():
    x = ar1(0.3, 800, 5)
    ours = ljung_box(x, 30)
    ref = acorr_ljungbox(x, lags=[30], return_df=True)
    assert ours.statistic == pytest.approx(float(ref["lb_stat"].iloc[0]), rel=1e-10)
    assert ours.p_value == pytest.approx(float(ref["lb_pvalue"].iloc[0]), rel=1e-8)
    assert ours.statistic >= 0 and 0 <= ours.p_value <= 1


def test_ljung_box_power():
    assert ljung_box(ar1(0.5, 1000, 6), 30).p_value < 1e-6


def test_ljung_box_null_rate():
    p = np.array([ljung_box(np.random.default_rng(s).standard_normal(5000), 30).p_value for s in range(200)])
    assert 0.02 <= np.mean(p < 0.05) <= 0.09


def test_ljung_box_monotone_in_q():
    qs = np.linspace(0, 120, 50)
    ps = [chi2_sf(q, 30) for q in qs]
    assert np.all(np.diff(ps) <= 0)


def test_ljung_box_lag_limit():
    with pytest.raises(ValueError):
        ljung_box(np.random.default_rng(0).standard_normal(40), 20)
