"""Projection-based SDR / SIR / SAR.

The estimate is split by nested orthogonal projections (time-invariant,
no allowed distortion filter):

    s_target       onto the target reference
    e_interference onto span(references), minus s_target
    e_noise        onto span(references + noise refs), minus both above
    e_artifact     what is left

and the three ratios are formed from the energies of those parts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .signal_model import BssScores, Signal

MAX_GRAM_COND = 1e10
# an energy at or below this fraction of the other one counts as zero
ZERO_ENERGY_REL = 1e-30


class UndefinedScoreError(ValueError):
    """Both numerator and denominator energies are zero."""


@dataclass(frozen=True)
class Decomposition:
    s_target: np.ndarray
    e_interference: np.ndarray
    e_noise: np.ndarray
    e_artifact: np.ndarray

    def total(self) -> np.ndarray:
        return self.s_target + self.e_interference + self.e_noise + self.e_artifact


def _as_array(s) -> np.ndarray:
    return np.asarray(s.samples if isinstance(s, Signal) else s, dtype=float)


def _orthonormal_basis(refs: np.ndarray) -> np.ndarray:
    """Orthonormal columns spanning the rows of ``refs``; rejects dependent sets."""
    gram = refs @ refs.T
    if not np.isfinite(np.linalg.cond(gram)) or np.linalg.cond(gram) > MAX_GRAM_COND:
        raise ValueError(f"reference signals are linearly dependent (Gram cond {np.linalg.cond(gram):.3g})")
    q, _ = np.linalg.qr(refs.T, mode="reduced")
    return q


def _project(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    return q @ (q.T @ v)


def decompose(
    estimate,
    references: Sequence,
    target_index: int,
    noise_refs: Optional[Sequence] = None,
) -> Decomposition:
    est = _as_array(estimate)
    refs = np.vstack([_as_array(r) for r in references])
    if refs.shape[1] != est.size:
        raise ValueError(f"length mismatch: estimate {est.size}, references {refs.shape[1]}")
    if not 0 <= target_index < refs.shape[0]:
        raise ValueError(f"target_index {target_index} out of range for {refs.shape[0]} references")

    target = refs[target_index]
    tt = target @ target
    if tt == 0:
        raise ValueError("target reference is all zeros")
    s_target = (est @ target) / tt * target

    # s_target lies in span(references), so projecting what is left after
    # removing it equals P_span(est) - s_target and leaves no rounding residue
    # when the estimate is the target itself
    rest = est - s_target
    e_interf = _project(_orthonormal_basis(refs), rest)
    rest = rest - e_interf

    if noise_refs:
        noise = np.vstack([_as_array(r) for r in noise_refs])
        if noise.shape[1] != est.size:
            raise ValueError("noise reference length mismatch")
        e_noise = _project(_orthonormal_basis(np.vstack([refs, noise])), rest)
    else:
        e_noise = np.zeros_like(est)
    e_artif = rest - e_noise
    return Decomposition(s_target, e_interf, e_noise, e_artif)


def _ratio_db(num: np.ndarray, den: np.ndarray) -> float:
    num_e = float(num @ num)
    den_e = float(den @ den)
    if num_e == 0 and den_e == 0:
        raise UndefinedScoreError("score undefined: numerator and error energies are both zero")
    if den_e <= ZERO_ENERGY_REL * num_e:
        return math.inf
    if num_e <= ZERO_ENERGY_REL * den_e:
        return -math.inf
    return 10 * math.log10(num_e / den_e)


def sdr(d: Decomposition) -> float:
    return _ratio_db(d.s_target, d.e_interference + d.e_noise + d.e_artifact)


def sir(d: Decomposition) -> float:
    return _ratio_db(d.s_target, d.e_interference)


def sar(d: Decomposition) -> float:
    return _ratio_db(d.s_target + d.e_interference + d.e_noise, d.e_artifact)


def score(estimate, references: Sequence, target_index: int, noise_refs=None) -> BssScores:
    d = decompose(estimate, references, target_index, noise_refs)
    return BssScores(sdr(d), sir(d), sar(d))


def format_db(value: float) -> str:
    """CSV/console rendering: ``inf``/``-inf`` for the sentinels, else 6 decimals."""
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.6f}"
