import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hlsep.periodicity import estimate_period, period_of
from hlsep.signal_model import Signal
from hlsep.synth import (
    MAX_MIXING_COND,
    SourceSpec,
    check_mixing,
    gen_case,
    gen_case_set,
    gen_heart_like,
    gen_lung_like,
    mix,
    random_mixing,
    spectral_fraction,
)


@pytest.fixture(scope="module")
def heart():
    return gen_heart_like(SourceSpec("heart-like", 1.0, 10.0, 8000, seed=3))


@pytest.fixture(scope="module")
def lung():
    return gen_lung_like(SourceSpec("lung-like", 4.0, 20.0, 8000, seed=4))


class TestHeart:
    def test_period_recovered(self, heart):
        est = estimate_period(heart, 0.4, 4.0)
        assert est.period_seconds == pytest.approx(1.0, rel=0.02)

    def test_band_energy(self, heart):
        assert spectral_fraction(heart, 40, 300) >= 0.9

    def test_peak_normalized(self, heart):
        assert np.max(np.abs(heart.samples)) == pytest.approx(1.0)

    def test_deterministic(self, heart):
        again = gen_heart_like(SourceSpec("heart-like", 1.0, 10.0, 8000, seed=3))
        assert np.array_equal(again.samples, heart.samples)

    @pytest.mark.parametrize("period", [0.3, 1.6])
    def test_period_range(self, period):
        with pytest.raises(ValueError):
            gen_heart_like(SourceSpec("heart-like", period, 10.0, 8000))

    def test_wrong_kind(self):
        with pytest.raises(ValueError):
            gen_heart_like(SourceSpec("lung-like", 4.0, 20.0, 8000))


class TestLung:
    def test_envelope_period(self, lung):
        est = period_of(lung, (0.4, 8.0), use_envelope=True)
        assert est.period_seconds == pytest.approx(4.0, rel=0.05)

    def test_band_energy(self, lung):
        assert spectral_fraction(lung, 50, 350) >= 0.9

    def test_seed_changes_waveform_not_rhythm(self, lung):
        other = gen_lung_like(SourceSpec("lung-like", 4.0, 20.0, 8000, seed=5))
        assert not np.array_equal(other.samples, lung.samples)
        est = period_of(other, (0.4, 8.0), use_envelope=True)
        assert est.period_seconds == pytest.approx(4.0, rel=0.05)

    def test_short_duration_rejected(self):
        with pytest.raises(ValueError, match="three periods"):
            gen_lung_like(SourceSpec("lung-like", 4.0, 10.0, 8000))

    @pytest.mark.parametrize("period", [2.0, 6.5])
    def test_period_range(self, period):
        with pytest.raises(ValueError):
            gen_lung_like(SourceSpec("lung-like", period, 30.0, 8000))


class TestMix:
    def _sources(self):
        rng = np.random.default_rng(0)
        return Signal(rng.standard_normal(100), 100), Signal(rng.standard_normal(100), 100)

    def test_identity(self):
        h, l = self._sources()
        m1, m2 = mix(h, l, np.eye(2), gain_lung=1.0)
        assert np.array_equal(m1.samples, h.samples) and np.array_equal(m2.samples, l.samples)

    def test_singular_rejected(self):
        h, l = self._sources()
        with pytest.raises(ValueError, match="singular"):
            mix(h, l, [[1, 1], [1, 1]])

    def test_weights(self):
        h, l = self._sources()
        m1, m2 = mix(h, l, [[1, 0.8], [0.6, 1]], gain_lung=1.5)
        assert np.max(np.abs(m1.samples - h.samples - 0.8 * 1.5 * l.samples)) <= 1e-12
        assert np.max(np.abs(m2.samples - 0.6 * h.samples - 1.5 * l.samples)) <= 1e-12

    @given(st.floats(-100, 100).filter(lambda a: a != 0), st.integers(0, 1000))
    def test_linear(self, a, seed):
        h, l = self._sources()
        m = random_mixing(np.random.default_rng(seed))
        m1, m2 = mix(h, l, m)
        s1, s2 = mix(Signal(a * h.samples, 100), Signal(a * l.samples, 100), m)
        assert np.allclose(s1.samples, a * m1.samples, atol=1e-12 * abs(a) * 10, rtol=1e-12)
        assert np.allclose(s2.samples, a * m2.samples, atol=1e-12 * abs(a) * 10, rtol=1e-12)

    def test_length_mismatch(self):
        h, _ = self._sources()
        with pytest.raises(ValueError):
            mix(h, Signal(np.ones(50), 100), np.eye(2))

    def test_check_mixing_shape(self):
        with pytest.raises(ValueError):
            check_mixing(np.eye(3))


class TestCases:
    def test_hundred_cases_well_conditioned(self):
        cases = gen_case_set(100, 7)
        assert len(cases) == 100
        for c in cases:
            assert np.linalg.cond(c.mixing) <= MAX_MIXING_COND
            assert 0.6 <= c.heart_period_s <= 1.2 and 3.0 <= c.lung_period_s <= 5.0
            assert np.all(c.mixing > 0)

    def test_same_seed_same_cases(self):
        a, b = gen_case_set(3, 11), gen_case_set(3, 11)
        for x, y in zip(a, b):
            assert x.record() == y.record()
            assert np.array_equal(x.heart.samples, y.heart.samples)
            assert np.array_equal(x.lung.samples, y.lung.samples)

    def test_case_depends_only_on_index(self):
        assert gen_case(2, 5).record() == gen_case_set(3, 5)[2].record()

    def test_sources_pass_period_checks(self):
        for c in gen_case_set(10, 3):
            h = period_of(c.heart, (0.4, 8.0), use_envelope=True)
            l = period_of(c.lung, (0.4, 8.0), use_envelope=True)
            assert h.period_seconds == pytest.approx(c.heart_period_s, rel=0.05)
            assert l.period_seconds == pytest.approx(c.lung_period_s, rel=0.05)

    def test_n_must_be_positive(self):
        with pytest.raises(ValueError):
            gen_case_set(0, 1)


@settings(max_examples=20)
@given(st.integers(0, 2**31 - 1))
def test_random_mixing_condition(seed):
    m = random_mixing(np.random.default_rng(seed))
    assert np.linalg.cond(m) <= MAX_MIXING_COND
