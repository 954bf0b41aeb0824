"""Value types shared across the package.

Matrices follow the (rows = channels/sources, columns = time samples)
orientation throughout: the mixture matrix is ``I x T``, a mixing factor is
``I x J`` and the source factor is ``J x T``.  Nonnegative matrices are plain
``numpy`` arrays checked with :func:`validate_nonneg`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


def validate_nonneg(m) -> bool:
    """True iff every entry of ``m`` is finite and >= 0."""
    arr = np.asarray(m, dtype=float)
    if arr.size == 0:
        return False
    return bool(np.all(np.isfinite(arr)) and np.all(arr >= 0))


def as_nonneg(m, name: str = "matrix") -> np.ndarray:
    """Return ``m`` as a 2-D float array, raising if it is not a valid nonnegative matrix."""
    arr = np.asarray(m, dtype=float)
    if arr.ndim == 1:
        arr = arr[np.newaxis, :]
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not validate_nonneg(arr):
        raise ValueError(f"{name} has negative or non-finite entries (min={np.nanmin(arr):.3g})")
    return arr


@dataclass(frozen=True)
class Signal:
    """A mono waveform and its sample rate."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        x = np.array(self.samples, dtype=float).ravel()
        if x.size == 0:
            raise ValueError("signal has no samples")
        if not np.all(np.isfinite(x)):
            raise ValueError("signal contains NaN or Inf")
        if int(self.sample_rate_hz) != self.sample_rate_hz or self.sample_rate_hz <= 0:
            raise ValueError(f"sample rate must be a positive integer, got {self.sample_rate_hz}")
        x.flags.writeable = False
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate_hz", int(self.sample_rate_hz))

    def __len__(self):
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    def with_samples(self, samples) -> "Signal":
        return Signal(samples, self.sample_rate_hz)


@dataclass(frozen=True)
class NmfConfig:
    """Hyperparameters of one scale-and-offset + multilayer alpha-NMF module.

    ``n_restarts`` > 1 runs that many independently seeded factorizations
    and the pipeline keeps one of them by the periodicity of its outputs
    (see :mod:`hlsep.pipeline`); ``n_restarts = 1`` is a single random start.
    """

    alpha: float = 0.5
    num_layers: int = 1
    lambda1: float = 1.0
    lambda2: float = 0.0
    epsilon: float = 1e-6
    max_iterations: int = 1000
    inner_rank: int = 2
    seed: int = 0
    n_restarts: int = 1

    def __post_init__(self):
        if not math.isfinite(self.alpha):
            raise ValueError("alpha must be finite")
        if not self.lambda1 > 0:
            raise ValueError(f"lambda1 must be > 0, got {self.lambda1}")
        if not self.lambda2 >= 0:
            raise ValueError(f"lambda2 must be >= 0, got {self.lambda2}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        for name in ("num_layers", "max_iterations", "inner_rank", "n_restarts"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")


@dataclass
class NmfState:
    """Result of a (multilayer) factorization.

    ``a_layers`` holds the cascade A(1)..A(L); A(1) is I x J and the rest
    are J x J.  ``divergence_history`` starts with the divergence at
    initialization, so ``iterations_run == len(divergence_history) - 1``
    for a single layer.  For cascades, ``layer_histories`` keeps each
    layer's own trace and ``divergence_history`` is their concatenation.
    """

    a_layers: list
    x: np.ndarray
    divergence_history: list
    iterations_run: int
    converged: bool
    layer_histories: list = field(default_factory=list)

    @property
    def mixing(self) -> np.ndarray:
        """Product A(1) A(2) ... A(L)."""
        out = self.a_layers[0]
        for a in self.a_layers[1:]:
            out = out @ a
        return out

    @property
    def final_divergence(self) -> float:
        return float(self.divergence_history[-1])

    def reconstruction(self) -> np.ndarray:
        return self.mixing @ self.x

    def summary(self) -> dict:
        return {
            "layers": len(self.a_layers),
            "iterations": int(self.iterations_run),
            "iterations_per_layer": [len(h) - 1 for h in self.layer_histories],
            "final_divergence": self.final_divergence,
            "converged": bool(self.converged),
        }


@dataclass(frozen=True)
class BssScores:
    """SDR/SIR/SAR in dB.

    A score is ``math.inf`` exactly when the corresponding error energy is
    zero (or negligible, see :mod:`hlsep.bss_eval`).  Scores are never NaN.
    """

    sdr_db: float
    sir_db: float
    sar_db: float

    def as_dict(self) -> dict:
        return {"sdr_db": self.sdr_db, "sir_db": self.sir_db, "sar_db": self.sar_db}


@dataclass
class SeparationResult:
    heart_estimate: Signal
    lung_estimate: Signal
    heart_period_s: float
    lung_period_s: float
    heart_diag: dict
    lung_diag: dict
    notes: Optional[list] = None

    def diagnostics(self) -> dict:
        return {
            "heart_period_s": self.heart_period_s,
            "lung_period_s": self.lung_period_s,
            "heart": self.heart_diag,
            "lung": self.lung_diag,
            "notes": list(self.notes or []),
        }
