"""Bandpass filtering and peak normalization applied before separation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .signal_model import Signal

# Kaiser ripple sits right at the design attenuation; this margin keeps the
# measured stopband under the requested level.
_BETA_MARGIN_DB = 1.0


@dataclass(frozen=True)
class BandpassSpec:
    low_cut_hz: float
    high_cut_hz: float
    stopband_atten_db: float = 60.0
    transition_width_hz: float = 20.0

    def check(self, sample_rate_hz: int) -> None:
        nyq = sample_rate_hz / 2
        if not self.low_cut_hz < self.high_cut_hz:
            raise ValueError(
                f"degenerate band: low_cut_hz={self.low_cut_hz} must be < high_cut_hz={self.high_cut_hz}"
            )
        if self.transition_width_hz <= 0 or self.stopband_atten_db <= 0:
            raise ValueError("transition width and stopband attenuation must be positive")
        if self.low_cut_hz - self.transition_width_hz <= 0:
            raise ValueError(
                f"low_cut_hz={self.low_cut_hz} leaves no stopband above 0 Hz "
                f"(needs > transition width {self.transition_width_hz} Hz)"
            )
        if self.high_cut_hz + self.transition_width_hz >= nyq:
            raise ValueError(
                f"high_cut_hz={self.high_cut_hz} + transition {self.transition_width_hz} Hz "
                f"reaches Nyquist ({nyq} Hz)"
            )


HEART_BAND = BandpassSpec(50.0, 250.0)
LUNG_BAND = BandpassSpec(60.0, 300.0)


@dataclass(frozen=True)
class FilterCoefficients:
    """Linear-phase FIR taps (odd length, type I)."""

    taps: np.ndarray
    sample_rate_hz: int
    spec: BandpassSpec

    @property
    def order(self) -> int:
        return self.taps.size - 1

    @property
    def delay(self) -> int:
        return (self.taps.size - 1) // 2

    def response_db(self, freqs_hz) -> np.ndarray:
        _, h = sps.freqz(self.taps, worN=np.asarray(freqs_hz, dtype=float), fs=self.sample_rate_hz)
        return 20 * np.log10(np.maximum(np.abs(h), 1e-300))


def band_masks(spec: BandpassSpec, freqs) -> tuple[np.ndarray, np.ndarray]:
    """Boolean (passband, stopband) masks over ``freqs``."""
    freqs = np.asarray(freqs)
    passband = (freqs >= spec.low_cut_hz) & (freqs <= spec.high_cut_hz)
    stopband = (freqs <= spec.low_cut_hz - spec.transition_width_hz) | (
        freqs >= spec.high_cut_hz + spec.transition_width_hz
    )
    return passband, stopband


def meets_spec(coeffs: FilterCoefficients, grid_step_hz: float = 1.0) -> bool:
    spec = coeffs.spec
    freqs = np.arange(0.0, coeffs.sample_rate_hz / 2 + grid_step_hz / 2, grid_step_hz)
    passband, stopband = band_masks(spec, freqs)
    resp = coeffs.response_db(freqs)
    return bool(
        np.all(np.abs(resp[passband]) <= 3.0) and np.all(resp[stopband] <= -spec.stopband_atten_db)
    )


def _kaiser_bandpass(spec: BandpassSpec, fs: int, numtaps: int) -> FilterCoefficients:
    half = spec.transition_width_hz / 2
    beta = sps.kaiser_beta(spec.stopband_atten_db + _BETA_MARGIN_DB)
    taps = sps.firwin(
        numtaps,
        [spec.low_cut_hz - half, spec.high_cut_hz + half],
        window=("kaiser", beta),
        pass_zero=False,
        fs=fs,
    )
    return FilterCoefficients(taps, fs, spec)


def design_bandpass(spec: BandpassSpec, sample_rate_hz: int) -> FilterCoefficients:
    """Minimum-length Kaiser-window bandpass meeting ``spec`` on a 1 Hz grid.

    Cutoffs are placed half a transition width outside the band so the
    -6 dB points fall in the transition regions.  The length search starts
    at the Kaiser estimate and walks odd lengths down while the measured
    response still meets the BandpassSpec, then up until it does.
    """
    spec.check(sample_rate_hz)
    numtaps, _ = sps.kaiserord(
        spec.stopband_atten_db + _BETA_MARGIN_DB, spec.transition_width_hz / (sample_rate_hz / 2)
    )
    numtaps |= 1
    best = _kaiser_bandpass(spec, sample_rate_hz, numtaps)
    if meets_spec(best):
        while numtaps > 3:
            cand = _kaiser_bandpass(spec, sample_rate_hz, numtaps - 2)
            if not meets_spec(cand):
                break
            best, numtaps = cand, numtaps - 2
        return best
    for _ in range(numtaps):
        numtaps += 2
        best = _kaiser_bandpass(spec, sample_rate_hz, numtaps)
        if meets_spec(best):
            return best
    raise RuntimeError(f"no Kaiser bandpass up to {numtaps} taps meets {spec}")


def apply_filter(sig: Signal, coeffs: FilterCoefficients) -> Signal:
    """Filter ``sig`` and remove the FIR group delay (output aligned with input)."""
    if coeffs.sample_rate_hz != sig.sample_rate_hz:
        raise ValueError(
            f"filter designed for {coeffs.sample_rate_hz} Hz applied to {sig.sample_rate_hz} Hz signal"
        )
    full = sps.oaconvolve(sig.samples, coeffs.taps, mode="full")
    d = coeffs.delay
    return sig.with_samples(full[d : d + len(sig)])


def bandpass(sig: Signal, spec: BandpassSpec) -> Signal:
    return apply_filter(sig, design_bandpass(spec, sig.sample_rate_hz))


def normalize(sig: Signal) -> Signal:
    """Remove the mean and scale so the peak absolute value is 1.

    The denominator is the peak of the de-meaned signal, which keeps the
    output inside [-1, 1].
    """
    x = sig.samples - np.mean(sig.samples)
    peak = np.max(np.abs(x))
    if not peak > 0:
        raise ValueError("cannot normalize a constant signal")
    return sig.with_samples(x / peak)
