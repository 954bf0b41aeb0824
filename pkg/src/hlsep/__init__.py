"""Heart and lung sound separation from two-channel recordings.

Two scale-and-offset + multilayer alpha-NMF modules run side by side on
the same mixtures; each keeps the output whose rhythm matches its role
(the faster one for the heart, the slower one for breathing).
"""

from .bss_eval import UndefinedScoreError, decompose, score
from .nmf_core import (
    FactorizationError,
    affine_transform,
    alpha_divergence,
    auto_offset,
    check_convergence,
    factorize,
    multilayer_factorize,
    update_a,
    update_x,
)
from .periodicity import PeriodEstimate, assign_by_period, autocorrelation, estimate_period
from .pipeline import PipelineConfig, run_case, separate
from .preprocess import BandpassSpec, bandpass, design_bandpass, normalize
from .signal_model import BssScores, NmfConfig, NmfState, SeparationResult, Signal
from .synth import SourceSpec, gen_case_set, gen_heart_like, gen_lung_like, mix

__version__ = "0.1.0"

__all__ = [
    "BandpassSpec",
    "BssScores",
    "FactorizationError",
    "NmfConfig",
    "NmfState",
    "PeriodEstimate",
    "PipelineConfig",
    "SeparationResult",
    "Signal",
    "SourceSpec",
    "UndefinedScoreError",
    "affine_transform",
    "alpha_divergence",
    "assign_by_period",
    "auto_offset",
    "autocorrelation",
    "bandpass",
    "check_convergence",
    "decompose",
    "design_bandpass",
    "estimate_period",
    "factorize",
    "gen_case_set",
    "gen_heart_like",
    "gen_lung_like",
    "mix",
    "multilayer_factorize",
    "normalize",
    "run_case",
    "score",
    "separate",
    "update_a",
    "update_x",
]
