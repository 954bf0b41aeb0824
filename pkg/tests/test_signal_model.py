import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from hlsep.nmf_core import multilayer_factorize
from hlsep.signal_model import BssScores, NmfConfig, NmfState, SeparationResult, Signal, as_nonneg, validate_nonneg


class TestValidateNonneg:
    def test_zeros_are_nonnegative(self):
        assert validate_nonneg(np.zeros((2, 2)))

    def test_tiny_negative_rejected(self):
        assert not validate_nonneg(np.array([[1.0, -1e-12]]))

    def test_nan_rejected(self):
        assert not validate_nonneg(np.array([[1.0, np.nan]]))

    def test_inf_rejected(self):
        assert not validate_nonneg(np.array([[np.inf]]))

    def test_empty_rejected(self):
        assert not validate_nonneg(np.zeros((0, 3)))

    @given(hnp.arrays(float, hnp.array_shapes(min_dims=2, max_dims=2), elements=st.floats(0, 1e6)))
    def test_any_nonneg_finite_array_passes(self, m):
        assert validate_nonneg(m)

    def test_as_nonneg_promotes_vector(self):
        assert as_nonneg([1.0, 2.0]).shape == (1, 2)

    def test_as_nonneg_raises_with_name(self):
        with pytest.raises(ValueError, match="Y"):
            as_nonneg([[-1.0]], "Y")


class TestSignal:
    def test_samples_are_read_only_copies(self):
        raw = np.array([0.0, 1.0])
        sig = Signal(raw, 100)
        raw[0] = 5
        assert sig.samples[0] == 0
        with pytest.raises(ValueError):
            sig.samples[0] = 1

    @pytest.mark.parametrize("samples", [[], [np.nan], [0.0, np.inf]])
    def test_invalid_samples(self, samples):
        with pytest.raises(ValueError):
            Signal(np.array(samples), 100)

    @pytest.mark.parametrize("rate", [0, -8000, 44.1])
    def test_invalid_rate(self, rate):
        with pytest.raises(ValueError):
            Signal(np.ones(3), rate)

    def test_duration(self):
        assert Signal(np.zeros(8000), 8000).duration_s == 1.0


class TestNmfConfig:
    @pytest.mark.parametrize(
        "kw",
        [
            {"lambda1": 0.0},
            {"lambda2": -1.0},
            {"epsilon": 0.0},
            {"num_layers": 0},
            {"inner_rank": 0},
            {"max_iterations": 0},
            {"n_restarts": 0},
            {"alpha": math.nan},
        ],
    )
    def test_invalid_fields(self, kw):
        with pytest.raises(ValueError):
            NmfConfig(**kw)

    def test_defaults(self):
        c = NmfConfig()
        assert (c.epsilon, c.max_iterations, c.inner_rank) == (1e-6, 1000, 2)


@given(st.integers(1, 4), st.integers(0, 2**16))
def test_state_dimensions_chain(layers, seed):
    y = np.random.default_rng(seed).uniform(0.1, 1.0, size=(2, 30))
    state = multilayer_factorize(y, NmfConfig(num_layers=layers, max_iterations=20, seed=seed))
    assert isinstance(state, NmfState)
    assert state.a_layers[0].shape == (2, 2)
    assert all(a.shape == (2, 2) for a in state.a_layers[1:])
    assert state.x.shape == (2, 30)
    assert state.reconstruction().shape == y.shape
    assert all(np.isfinite(d) and d >= 0 for d in state.divergence_history)


def test_scores_dict_and_result_diagnostics():
    s = BssScores(1.0, math.inf, 3.0)
    assert s.as_dict() == {"sdr_db": 1.0, "sir_db": math.inf, "sar_db": 3.0}
    sig = Signal(np.ones(4), 10)
    r = SeparationResult(sig, sig, 1.0, 4.0, {"a": 1}, {"b": 2})
    d = r.diagnostics()
    assert d["heart_period_s"] == 1.0 and d["notes"] == []
