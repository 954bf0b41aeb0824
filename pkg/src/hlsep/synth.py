"""Seeded heart-like and lung-like sources and two-channel mixtures.

These are stand-ins with the three properties the separation relies on:
a rhythm (about 1 s for the heart, several seconds for breathing), energy
in the 50-300 Hz auscultation band, and a lung component louder than the
heart component.  They are not physiological models.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .signal_model import Signal

HEART_PERIOD_RANGE = (0.4, 1.5)
LUNG_PERIOD_RANGE = (2.5, 6.0)
CASE_HEART_PERIODS = (0.6, 1.2)
CASE_LUNG_PERIODS = (3.0, 5.0)
CASE_SAMPLE_RATE = 1000
# three cycles of the slowest case breath
CASE_DURATION_S = 15.0
MAX_MIXING_COND = 10.0
DEFAULT_LUNG_GAIN = 1.5


@dataclass(frozen=True)
class SourceSpec:
    kind: str
    period_s: float
    duration_s: float = 10.0
    sample_rate_hz: int = 8000
    seed: int = 0
    jitter_pct: float = 0.0

    def check(self):
        if self.kind not in ("heart-like", "lung-like"):
            raise ValueError(f"unknown source kind {self.kind!r}")
        lo, hi = HEART_PERIOD_RANGE if self.kind == "heart-like" else LUNG_PERIOD_RANGE
        if not lo <= self.period_s <= hi:
            raise ValueError(f"{self.kind} period must be in [{lo}, {hi}] s, got {self.period_s}")
        if self.duration_s < 3 * self.period_s:
            raise ValueError(
                f"duration {self.duration_s} s is shorter than three periods of {self.period_s} s"
            )
        if self.sample_rate_hz <= 0 or self.jitter_pct < 0:
            raise ValueError("sample rate must be positive and jitter nonnegative")


def _cycle_onsets(rng, period, duration, jitter_pct, lead=0.0):
    """Cycle start times in [-lead, duration) with uniform +-jitter_pct length jitter."""
    out = [-lead]
    while out[-1] < duration:
        out.append(out[-1] + period * (1 + (jitter_pct / 100) * rng.uniform(-1, 1)))
    return np.array(out)


def _burst(t, center_freq, tau):
    """Tone under a rise-then-decay envelope (t/tau) exp(1 - t/tau), zero for t < 0."""
    tp = np.maximum(t, 0.0)
    env = np.where(t >= 0, (tp / tau) * np.exp(1 - tp / tau), 0.0)
    return env * np.sin(2 * np.pi * center_freq * tp)


def gen_heart_like(spec: SourceSpec) -> Signal:
    """Two tone bursts per cycle (a low first sound, a higher second one a
    third of the way through the cycle)."""
    if spec.kind != "heart-like":
        raise ValueError(f"expected a heart-like spec, got {spec.kind!r}")
    spec.check()
    rng = np.random.default_rng(spec.seed)
    fs = spec.sample_rate_hz
    n = int(round(spec.duration_s * fs))
    t = np.arange(n) / fs
    f1 = rng.uniform(60.0, 90.0)
    f2 = rng.uniform(100.0, 140.0)
    offset = rng.uniform(0.0, spec.period_s)
    x = np.zeros(n)
    for onset in _cycle_onsets(rng, spec.period_s, spec.duration_s, spec.jitter_pct, lead=offset) + offset:
        if onset > spec.duration_s:
            break
        for delay, freq, amp, tau in ((0.0, f1, 1.0, 0.015), (0.3 * spec.period_s, f2, 0.7, 0.012)):
            start = onset + delay
            lo = max(0, int(np.floor((start - 0.01) * fs)))
            hi = min(n, int(np.ceil((start + 12 * tau) * fs)))
            if hi > lo:
                x[lo:hi] += amp * _burst(t[lo:hi] - start, freq, tau)
    return Signal(x / np.max(np.abs(x)), fs)


def band_noise(n: int, fs: int, low_hz: float, high_hz: float, rng) -> np.ndarray:
    """White Gaussian noise with every FFT bin outside [low_hz, high_hz] zeroed."""
    spectrum = np.fft.rfft(rng.standard_normal(n))
    freqs = np.fft.rfftfreq(n, 1 / fs)
    spectrum[(freqs < low_hz) | (freqs > high_hz)] = 0
    return np.fft.irfft(spectrum, n)


def breath_envelope(t, onsets):
    """Inhale (40% of the cycle, full level), exhale (50%, 0.6 level), pause."""
    idx = np.clip(np.searchsorted(onsets, t, side="right") - 1, 0, onsets.size - 2)
    length = onsets[idx + 1] - onsets[idx]
    phase = (t - onsets[idx]) / length
    inhale = np.sin(np.pi * np.clip(phase / 0.4, 0, 1))
    exhale = 0.6 * np.sin(np.pi * np.clip((phase - 0.4) / 0.5, 0, 1))
    return np.where(phase < 0.4, inhale, np.where(phase < 0.9, exhale, 0.0))


def gen_lung_like(spec: SourceSpec) -> Signal:
    """60-300 Hz noise under a periodic inhale/exhale envelope."""
    if spec.kind != "lung-like":
        raise ValueError(f"expected a lung-like spec, got {spec.kind!r}")
    spec.check()
    rng = np.random.default_rng(spec.seed)
    fs = spec.sample_rate_hz
    n = int(round(spec.duration_s * fs))
    t = np.arange(n) / fs
    offset = rng.uniform(0.0, spec.period_s)
    onsets = _cycle_onsets(rng, spec.period_s, spec.duration_s + offset, spec.jitter_pct, lead=0.0) - offset
    env = breath_envelope(t, onsets)
    x = band_noise(n, fs, 60.0, 300.0, rng) * env
    return Signal(x / np.max(np.abs(x)), fs)


def check_mixing(mixing, max_cond: float = 1e6) -> np.ndarray:
    m = np.asarray(mixing, dtype=float)
    if m.shape != (2, 2):
        raise ValueError(f"mixing matrix must be 2x2, got {m.shape}")
    cond = np.linalg.cond(m)
    if not np.isfinite(cond) or cond >= max_cond:
        raise ValueError(f"mixing matrix is singular or ill-conditioned (cond={cond:.3g})")
    return m


def mix(heart: Signal, lung: Signal, mixing, gain_lung: float = DEFAULT_LUNG_GAIN):
    """Rows of ``mixing @ [heart; gain_lung * lung]`` as two signals."""
    if len(heart) != len(lung) or heart.sample_rate_hz != lung.sample_rate_hz:
        raise ValueError("sources must share length and sample rate")
    if not gain_lung > 0:
        raise ValueError("gain_lung must be positive")
    m = check_mixing(mixing)
    lung_scaled = gain_lung * lung.samples
    # row by row, so a row's samples depend only on its own coefficients
    # (a matmul may round differently depending on the matrix layout)
    return tuple(Signal(a * heart.samples + b * lung_scaled, heart.sample_rate_hz) for a, b in m)


def random_mixing(rng, low: float = 0.2, high: float = 1.5, max_cond: float = MAX_MIXING_COND) -> np.ndarray:
    """Uniform positive 2x2 matrix, redrawn until its condition number is <= max_cond."""
    while True:
        m = rng.uniform(low, high, size=(2, 2))
        if np.linalg.cond(m) <= max_cond:
            return m


@dataclass
class SynthCase:
    case_id: str
    heart: Signal
    lung: Signal
    mixing: np.ndarray
    heart_period_s: float
    lung_period_s: float
    seed: int
    extra: dict = field(default_factory=dict)

    @property
    def sources(self):
        return self.heart, self.lung

    def record(self) -> dict:
        return {
            "case_id": self.case_id,
            "seed": self.seed,
            "heart_period_s": self.heart_period_s,
            "lung_period_s": self.lung_period_s,
            "mixing": self.mixing.tolist(),
            **self.extra,
        }


def gen_case(
    index: int,
    base_seed: int,
    sample_rate_hz: int = CASE_SAMPLE_RATE,
    duration_s: float = CASE_DURATION_S,
    jitter_pct: float = 2.0,
) -> SynthCase:
    seed = int(np.random.SeedSequence([base_seed, index]).generate_state(1)[0])
    rng = np.random.default_rng(seed)
    hp = float(rng.uniform(*CASE_HEART_PERIODS))
    lp = float(rng.uniform(*CASE_LUNG_PERIODS))
    mixing = random_mixing(rng)
    h_seed, l_seed = (int(s) for s in rng.integers(0, 2**31, size=2))
    heart = gen_heart_like(SourceSpec("heart-like", hp, duration_s, sample_rate_hz, h_seed, jitter_pct))
    lung = gen_lung_like(SourceSpec("lung-like", lp, duration_s, sample_rate_hz, l_seed, jitter_pct))
    return SynthCase(f"case_{index:03d}", heart, lung, mixing, hp, lp, seed)


def gen_case_set(n: int, base_seed: int, **kwargs) -> list[SynthCase]:
    """``n`` reproducible cases; case ``i`` depends only on (base_seed, i)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return [gen_case(i, base_seed, **kwargs) for i in range(n)]


def spectral_fraction(sig: Signal, low_hz: float, high_hz: float) -> float:
    """Share of signal energy between low_hz and high_hz."""
    power = np.abs(np.fft.rfft(sig.samples)) ** 2
    freqs = np.fft.rfftfreq(len(sig), 1 / sig.sample_rate_hz)
    band = (freqs >= low_hz) & (freqs <= high_hz)
    return float(power[band].sum() / power.sum())
