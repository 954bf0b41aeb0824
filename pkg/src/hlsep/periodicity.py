"""Autocorrelation period estimation and period-based role assignment."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .signal_model import Signal

PERIODICITY_THRESHOLD = 0.3
DEFAULT_SEARCH = (0.4, 8.0)
# peak picking on an ACF box-smoothed over +-SMOOTH_FRAC of the lag
SMOOTH_FRAC = 0.03
# refinement window around the picked lag, as a fraction of the lag
REFINE_FRAC = 0.08
# a normalized cross-correlation this high marks a sharp (non-jittered) peak
SHARP_NCCF = 0.5
# shortest peak reaching this fraction of the best one wins (octave guard)
HARMONIC_RATIO = 0.85


@dataclass(frozen=True)
class PeriodEstimate:
    period_samples: int
    period_seconds: float
    peak_strength: float
    is_periodic: bool
    sample_rate_hz: int


def _raw_acf(x: np.ndarray) -> np.ndarray:
    """Unnormalized lag products sum_t x_t x_{t+k}, k = 0..n-1."""
    n = x.size
    return sps.correlate(x, x, mode="full", method="fft")[n - 1 :]


def _demeaned(sig: Signal) -> np.ndarray:
    x = sig.samples - np.mean(sig.samples)
    if not np.any(x):
        raise ValueError("autocorrelation of a constant signal is undefined")
    return x


def autocorrelation(sig: Signal, max_lag: int) -> np.ndarray:
    """Biased sample ACF of the de-meaned signal for lags 0..max_lag, r(0) = 1."""
    if not 0 < max_lag < len(sig):
        raise ValueError(f"max_lag must be in [1, {len(sig) - 1}], got {max_lag}")
    raw = _raw_acf(_demeaned(sig))
    return raw[: max_lag + 1] / raw[0]


def _nccf(x: np.ndarray, raw: np.ndarray, lags: np.ndarray) -> np.ndarray:
    """Correlation between x[:n-k] and x[k:] for each lag k."""
    sq = np.concatenate(([0.0], np.cumsum(x * x)))
    total = sq[-1]
    n = x.size
    head = sq[n - lags]
    tail = total - sq[lags]
    denom = np.sqrt(np.maximum(head * tail, 0.0))
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(denom > 0, raw[lags] / denom, 0.0)
    return out


def _box_smooth(r: np.ndarray, frac: float) -> np.ndarray:
    """Mean of r over [k(1-frac), k(1+frac)] for every lag k."""
    n = r.size
    c = np.concatenate(([0.0], np.cumsum(r)))
    k = np.arange(n)
    lo = np.clip(np.floor(k * (1 - frac)).astype(int), 0, n - 1)
    hi = np.clip(np.ceil(k * (1 + frac)).astype(int), 0, n - 1)
    return (c[hi + 1] - c[lo]) / (hi - lo + 1)


def _strict_local_maxima(v: np.ndarray, lo: int, hi: int) -> np.ndarray:
    """Indices k in [lo, hi] with v[k] strictly above both neighbours."""
    k = np.arange(max(lo, 1), min(hi, v.size - 2) + 1)
    if k.size == 0:
        return k
    return k[(v[k] > v[k - 1]) & (v[k] > v[k + 1])]


def estimate_period(
    sig: Signal,
    min_period_s: float = DEFAULT_SEARCH[0],
    max_period_s: float = DEFAULT_SEARCH[1],
    threshold: float = PERIODICITY_THRESHOLD,
) -> PeriodEstimate:
    """Estimate the dominant period of ``sig`` from its autocorrelation.

    Candidate peaks are strict local maxima of the ACF (lightly smoothed in
    proportion to the lag) inside the search range; the shortest candidate
    within ``HARMONIC_RATIO`` of the strongest one is taken, so multiples of
    the true period do not win.  The lag is then refined inside a +-8%
    window: to the maximum of the normalized cross-correlation when that
    maximum is sharp, otherwise to the centroid of the positive ACF mass
    (which averages out cycle-length jitter).  Without any local maximum the
    global maximum in range is returned with ``is_periodic=False``.
    """
    fs = sig.sample_rate_hz
    if not 0 < min_period_s < max_period_s:
        raise ValueError(f"need 0 < min_period_s < max_period_s, got {min_period_s}, {max_period_s}")
    lo = max(1, int(np.ceil(min_period_s * fs)))
    hi = int(np.floor(max_period_s * fs))
    if not hi < len(sig) / 2:
        raise ValueError(
            f"max period {max_period_s} s ({hi} samples) needs a signal longer than {2 * hi} samples, "
            f"got {len(sig)}"
        )
    x = _demeaned(sig)
    raw = _raw_acf(x)
    r = raw / raw[0]
    smooth = _box_smooth(r[: 2 * hi + 2], SMOOTH_FRAC)

    peaks = _strict_local_maxima(smooth, lo, hi)
    if peaks.size == 0:
        lag = lo + int(np.argmax(smooth[lo : hi + 1]))
        return PeriodEstimate(lag, lag / fs, float(np.clip(r[lag], 0.0, 1.0)), False, fs)

    best = smooth[peaks].max()
    coarse = int(peaks[np.nonzero(smooth[peaks] >= HARMONIC_RATIO * best)[0][0]])

    w_lo = max(1, int(np.floor(coarse * (1 - REFINE_FRAC))))
    w_hi = min(len(sig) - 2, int(np.ceil(coarse * (1 + REFINE_FRAC))))
    window = np.arange(w_lo, w_hi + 1)
    nccf = _nccf(x, raw, window)
    if nccf.max() >= SHARP_NCCF:
        lag = int(window[np.argmax(nccf)])
    else:
        mass = np.maximum(r[window], 0.0)
        lag = int(round(float(np.sum(window * mass) / np.sum(mass)))) if mass.sum() > 0 else coarse
    lag = min(max(lag, lo), hi)
    strength = float(np.clip(np.max(r[window]), 0.0, 1.0))
    return PeriodEstimate(lag, lag / fs, strength, strength >= threshold, fs)


def envelope(sig: Signal, cutoff_hz: float = 10.0, rate_hz: int = 100) -> Signal:
    """RMS amplitude envelope, low-passed at ``cutoff_hz`` and decimated to about ``rate_hz``.

    The rhythm of heart and breath sounds lives in their loudness, not in
    the carrier waveform, so period comparisons between separated outputs
    run on this envelope.
    """
    fs = sig.sample_rate_hz
    q = max(1, fs // rate_hz)
    while fs % q:
        q -= 1
    x = sig.samples - np.mean(sig.samples)
    sos = sps.butter(4, min(cutoff_hz, 0.45 * fs / q), btype="low", fs=fs, output="sos")
    power = sps.sosfiltfilt(sos, x * x)
    env = np.sqrt(np.maximum(power, 0.0))[::q]
    return Signal(env, fs // q)


def _clip_range(sig: Signal, search_range) -> tuple[float, float]:
    lo, hi = search_range
    limit = (len(sig) // 2 - 1) / sig.sample_rate_hz
    return lo, min(hi, limit)


def period_of(sig: Signal, search_range=DEFAULT_SEARCH, use_envelope: bool = False) -> PeriodEstimate:
    """estimate_period with the search range clipped to half the signal length."""
    s = envelope(sig) if use_envelope else sig
    lo, hi = _clip_range(s, search_range)
    return estimate_period(s, lo, hi)


def _order_key(sig: Signal, est: PeriodEstimate):
    return (est.period_seconds, -est.peak_strength, sig.samples.tobytes())


def assign_by_period(out1: Signal, out2: Signal, search_range=DEFAULT_SEARCH, use_envelope: bool = False):
    """Order two signals by estimated period, shortest first.

    Returns ``(shorter, longer, est_shorter, est_longer)``.  Equal periods
    fall back to the stronger peak first, then to a byte-level comparison
    of the samples, so the result does not depend on argument order.
    """
    e1 = period_of(out1, search_range, use_envelope)
    e2 = period_of(out2, search_range, use_envelope)
    if _order_key(out2, e2) < _order_key(out1, e1):
        return out2, out1, e2, e1
    return out1, out2, e1, e2
