import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import impulse_train, sine
from hlsep.periodicity import (
    PeriodEstimate,
    assign_by_period,
    autocorrelation,
    envelope,
    estimate_period,
    period_of,
)
from hlsep.signal_model import Signal
from hlsep.synth import SourceSpec, gen_heart_like, gen_lung_like


def brute_acf(x, max_lag):
    x = x - x.mean()
    return np.array([np.dot(x[: x.size - k], x[k:]) for k in range(max_lag + 1)]) / np.dot(x, x)


class TestAutocorrelation:
    @given(st.integers(0, 2**31 - 1))
    def test_matches_direct_sum(self, seed):
        x = np.random.default_rng(seed).standard_normal(300)
        assert np.allclose(autocorrelation(Signal(x, 100), 50), brute_acf(x, 50), atol=1e-12)

    def test_unit_at_zero_lag(self, rng):
        assert autocorrelation(Signal(rng.standard_normal(100) + 3, 10), 10)[0] == pytest.approx(1.0)

    def test_sinusoid_peak(self):
        r = autocorrelation(sine(10, 1000, 10.0), 200)
        assert r[100] >= 0.95

    @pytest.mark.parametrize("seed", range(5))
    def test_white_noise_is_flat(self, seed):
        x = np.random.default_rng(seed).standard_normal(4000)
        assert np.max(autocorrelation(Signal(x, 1000), 2000)[1:]) <= 0.2

    def test_constant_rejected(self):
        with pytest.raises(ValueError):
            autocorrelation(Signal(np.ones(50), 10), 5)

    def test_max_lag_bound(self):
        with pytest.raises(ValueError):
            autocorrelation(Signal(np.arange(5.0), 10), 5)


class TestEstimatePeriod:
    def test_impulse_train(self):
        est = estimate_period(impulse_train(100, 5000, 1000), 0.05, 0.5)
        assert est.period_samples == 100 and est.is_periodic

    def test_dominant_short_component(self):
        n = np.arange(4800)
        x = np.sin(2 * np.pi * n / 80) + 0.3 * np.sin(2 * np.pi * n / 240)
        assert estimate_period(Signal(x, 1000), 0.05, 0.5).period_samples == 80

    @pytest.mark.parametrize("seed", range(3))
    def test_white_noise_not_periodic(self, seed):
        x = np.random.default_rng(seed).standard_normal(8000)
        assert not estimate_period(Signal(x, 1000), 0.05, 2.0).is_periodic

    def test_no_peak_falls_back(self):
        # a monotone ramp has a monotone ACF over the range
        est = estimate_period(Signal(np.arange(1000.0), 100), 0.5, 3.0)
        assert not est.is_periodic
        assert 50 <= est.period_samples <= 300

    def test_fields_consistent(self):
        est = estimate_period(sine(2, 100, 20.0), 0.2, 5.0)
        assert isinstance(est, PeriodEstimate)
        assert est.period_seconds == est.period_samples / est.sample_rate_hz
        assert 0 <= est.peak_strength <= 1 + 1e-9

    @pytest.mark.parametrize("bad", [(0.5, 0.5), (0.0, 1.0), (0.1, 6.0)])
    def test_bad_range(self, bad):
        with pytest.raises(ValueError):
            estimate_period(sine(2, 100, 10.0), *bad)

    @settings(max_examples=25, deadline=None)
    @given(st.floats(1e-3, 1e3), st.integers(40, 160))
    def test_amplitude_invariant(self, scale, period):
        sig = impulse_train(period, 3000, 1000)
        a = estimate_period(sig, 0.03, 1.0)
        b = estimate_period(Signal(scale * sig.samples, 1000), 0.03, 1.0)
        assert a.period_samples == b.period_samples == period


class TestEnvelope:
    def test_breathing_rhythm_visible_only_in_envelope(self):
        lung = gen_lung_like(SourceSpec("lung-like", 4.0, 20.0, 8000, seed=1))
        env = envelope(lung)
        assert env.sample_rate_hz == 100
        assert period_of(lung, (0.4, 8.0), use_envelope=True).period_seconds == pytest.approx(4.0, rel=0.05)

    def test_heart_rhythm(self):
        heart = gen_heart_like(SourceSpec("heart-like", 0.8, 12.0, 8000, seed=2))
        assert period_of(heart, (0.4, 8.0), use_envelope=True).period_seconds == pytest.approx(0.8, rel=0.05)


class TestAssign:
    def _pair(self):
        return sine(1.0, 100, 20.0), sine(0.25, 100, 20.0)

    def test_known_periods(self):
        fast, slow = self._pair()
        shorter, longer, e1, e2 = assign_by_period(fast, slow, (0.4, 8.0))
        assert shorter is fast and longer is slow
        assert e1.period_seconds < e2.period_seconds

    def test_order_invariant(self):
        fast, slow = self._pair()
        a = assign_by_period(fast, slow, (0.4, 8.0))
        b = assign_by_period(slow, fast, (0.4, 8.0))
        assert a[0] is b[0] and a[1] is b[1] and a[2] == b[2]

    def test_identical_signals(self):
        fast, _ = self._pair()
        other = Signal(fast.samples.copy(), 100)
        s, lo, e1, e2 = assign_by_period(fast, other, (0.4, 8.0))
        assert e1 == e2
        s2, lo2, _, _ = assign_by_period(other, fast, (0.4, 8.0))
        assert np.array_equal(s.samples, s2.samples)

    def test_range_clipped_to_signal(self):
        # a 10 s signal cannot support an 8 s search; the range is clipped rather than refused
        est = period_of(sine(1.0, 100, 10.0), (0.4, 8.0))
        assert est.period_seconds == pytest.approx(1.0, abs=0.011)

    def test_synthetic_sources_always_ordered(self):
        for seed in range(100):
            rng = np.random.default_rng(seed)
            hp, lp = rng.uniform(0.6, 1.2), rng.uniform(3.0, 5.0)
            h = gen_heart_like(SourceSpec("heart-like", hp, 15.0, 1000, seed=seed, jitter_pct=2))
            lung = gen_lung_like(SourceSpec("lung-like", lp, 15.0, 1000, seed=seed, jitter_pct=2))
            shorter, _, _, _ = assign_by_period(lung, h, (0.4, 8.0), use_envelope=True)
            assert shorter is h, seed
