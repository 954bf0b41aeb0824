"""Two parallel scale-and-offset + multilayer alpha-NMF modules, with
periodicity deciding which output of each module is kept.

Stages for a pair of mixtures:

1. (mixtures-only mode) band-pass each mixture with the heart band for the
   heart module and the lung band for the lung module;
2. normalize every mixture (zero mean, unit peak) and stack them as a 2 x T
   matrix, rows in a canonical order so the result does not depend on which
   file was called "mix1";
3. in each module, map Y to ``lambda1 * Y + lambda2`` and factorize it;
   the heart module keeps the output row with the shorter envelope period,
   the lung module the row with the longer one;
4. normalize both kept rows.

A module with ``n_restarts > 1`` repeats step 3 from differently seeded
starts.  The heart module keeps the run whose kept row has the strongest
envelope periodicity.  The lung module then prefers, in order: runs whose
kept row is clearly slower than the chosen heart row, runs whose two
outputs have clearly different periods, and the strongest periodicity.
Both modules factorize concurrently; only this final choice looks across.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from . import bss_eval, nmf_core
from .periodicity import DEFAULT_SEARCH, assign_by_period
from .preprocess import HEART_BAND, LUNG_BAND, BandpassSpec, bandpass, normalize
from .signal_model import BssScores, NmfConfig, SeparationResult, Signal
from .synth import DEFAULT_LUNG_GAIN, check_mixing, mix

log = logging.getLogger(__name__)

SOURCES_AVAILABLE = "sources-available"
MIXTURES_ONLY = "mixtures-only"
RESTART_SEED_STRIDE = 1000
# relative period gap below which two outputs count as the same rhythm
SPLIT_MARGIN = 0.2


def default_heart_nmf() -> NmfConfig:
    return NmfConfig(alpha=0.5, num_layers=2, lambda1=5.0, lambda2=5.75, seed=0, n_restarts=3)


def default_lung_nmf() -> NmfConfig:
    return NmfConfig(alpha=0.5, num_layers=1, lambda1=1.0, lambda2=1.0, seed=1, n_restarts=5)


@dataclass(frozen=True)
class PipelineConfig:
    heart_nmf: NmfConfig = field(default_factory=default_heart_nmf)
    lung_nmf: NmfConfig = field(default_factory=default_lung_nmf)
    heart_band: BandpassSpec = HEART_BAND
    lung_band: BandpassSpec = LUNG_BAND
    period_search: tuple = DEFAULT_SEARCH
    mode: str = MIXTURES_ONLY
    parallel: bool = True

    def __post_init__(self):
        if self.mode not in (SOURCES_AVAILABLE, MIXTURES_ONLY):
            raise ValueError(f"mode must be {SOURCES_AVAILABLE!r} or {MIXTURES_ONLY!r}, got {self.mode!r}")
        lo, hi = self.period_search
        if not 0 < lo < hi:
            raise ValueError(f"bad period search range {self.period_search}")

    def as_dict(self) -> dict:
        d = asdict(self)
        d["period_search"] = list(self.period_search)
        return d


def _canonical_rows(rows: list[np.ndarray]) -> list[np.ndarray]:
    return sorted(rows, key=lambda r: r.tobytes())


def _clearly_longer(p_short: float, p_long: float) -> bool:
    return p_long > p_short * (1 + SPLIT_MARGIN)


@dataclass
class _Run:
    index: int
    state: object
    kept: Signal
    est: object
    other_est: object

    @property
    def split(self) -> bool:
        """Whether the two outputs ended up on clearly different rhythms."""
        lo, hi = sorted((self.est.period_seconds, self.other_est.period_seconds))
        return _clearly_longer(lo, hi)


def _module(y: np.ndarray, fs: int, cfg: NmfConfig, keep: str, search) -> tuple:
    """Run every restart of one module; returns (runs, lambda2 used, notes)."""
    lam2 = cfg.lambda2
    notes = []
    needed = nmf_core.auto_offset(y, cfg.lambda1)
    if lam2 < needed:
        notes.append(f"lambda2 {lam2} infeasible for this input; using minimal offset {needed}")
        lam2 = needed
    transformed = nmf_core.affine_transform(y, cfg.lambda1, lam2)

    runs = []
    for r in range(cfg.n_restarts):
        run_cfg = replace(cfg, seed=cfg.seed + RESTART_SEED_STRIDE * r)
        state = nmf_core.multilayer_factorize(transformed, run_cfg)
        rows = [Signal(row, fs) for row in state.x]
        shorter, longer, p_short, p_long = assign_by_period(rows[0], rows[1], search, use_envelope=True)
        if keep == "shorter":
            runs.append(_Run(r, state, shorter, p_short, p_long))
        else:
            runs.append(_Run(r, state, longer, p_long, p_short))
    return runs, lam2, notes


def _pick(runs: list, rank) -> _Run:
    # max() keeps the first of equal ranks, so ties go to the lower restart
    return max(runs, key=rank)


def _diagnostics(cfg: NmfConfig, runs: list, chosen: _Run, lam2: float, notes: list) -> dict:
    return {
        **chosen.state.summary(),
        "selected_restart": chosen.index,
        "restarts": [
            {
                "seed": cfg.seed + RESTART_SEED_STRIDE * run.index,
                "kept_period_s": run.est.period_seconds,
                "peak_strength": run.est.peak_strength,
                "split": run.split,
                **run.state.summary(),
            }
            for run in runs
        ],
        "kept_period_s": chosen.est.period_seconds,
        "kept_peak_strength": chosen.est.peak_strength,
        "kept_is_periodic": chosen.est.is_periodic,
        "discarded_period_s": chosen.other_est.period_seconds,
        "lambda1": cfg.lambda1,
        "lambda2_used": lam2,
        "lambda2_substituted": lam2 != cfg.lambda2,
        "notes": notes,
    }


def _prepare(mix1: Signal, mix2: Signal, band: Optional[BandpassSpec]) -> np.ndarray:
    rows = []
    for m in (mix1, mix2):
        if band is not None:
            m = bandpass(m, band)
        rows.append(normalize(m).samples)
    return np.vstack(_canonical_rows(rows))


def separate(mix1: Signal, mix2: Signal, config: Optional[PipelineConfig] = None) -> SeparationResult:
    config = config or PipelineConfig()
    if len(mix1) != len(mix2) or mix1.sample_rate_hz != mix2.sample_rate_hz:
        raise ValueError("mixtures must have equal length and sample rate")
    fs = mix1.sample_rate_hz
    filtering = config.mode == MIXTURES_ONLY
    y_heart = _prepare(mix1, mix2, config.heart_band if filtering else None)
    y_lung = _prepare(mix1, mix2, config.lung_band if filtering else None) if filtering else y_heart
    search = config.period_search

    jobs = [
        (y_heart, fs, config.heart_nmf, "shorter", search),
        (y_lung, fs, config.lung_nmf, "longer", search),
    ]
    if config.parallel:
        with ThreadPoolExecutor(max_workers=2) as pool:
            heart_out, lung_out = pool.map(lambda a: _module(*a), jobs)
    else:
        heart_out, lung_out = (_module(*a) for a in jobs)

    heart_runs, heart_lam2, heart_notes = heart_out
    lung_runs, lung_lam2, lung_notes = lung_out
    heart = _pick(heart_runs, lambda run: run.est.peak_strength)
    heart_p = heart.est.period_seconds
    lung = _pick(
        lung_runs,
        lambda run: (_clearly_longer(heart_p, run.est.period_seconds), run.split, run.est.peak_strength),
    )
    heart_diag = _diagnostics(config.heart_nmf, heart_runs, heart, heart_lam2, heart_notes)
    lung_diag = _diagnostics(config.lung_nmf, lung_runs, lung, lung_lam2, lung_notes)
    heart_sig, heart_est = heart.kept, heart.est
    lung_sig, lung_est = lung.kept, lung.est
    notes = heart_diag["notes"] + lung_diag["notes"]
    if np.array_equal(y_heart[0], y_heart[1]):
        notes.append("mixtures are identical after normalization; separation is degenerate")

    if not heart_est.period_seconds < lung_est.period_seconds:
        # both modules already kept their extreme rows, so a strict inversion
        # means the modules disagree about roles: swap; equal periods cannot
        # be ordered and are only reported
        if lung_est.period_seconds < heart_est.period_seconds:
            heart_sig, lung_sig = lung_sig, heart_sig
            heart_est, lung_est = lung_est, heart_est
            notes.append("heart module output was slower than lung module output; roles swapped")
        else:
            notes.append(f"both kept outputs have period {heart_est.period_seconds:.3f} s; roles unresolved")
        log.warning(notes[-1])

    return SeparationResult(
        heart_estimate=normalize(heart_sig),
        lung_estimate=normalize(lung_sig),
        heart_period_s=heart_est.period_seconds,
        lung_period_s=lung_est.period_seconds,
        heart_diag=heart_diag,
        lung_diag=lung_diag,
        notes=notes,
    )


@dataclass
class CaseResult:
    case_id: str
    separation: SeparationResult
    heart_scores: BssScores
    lung_scores: BssScores
    heart_baseline: BssScores
    lung_baseline: BssScores
    references: tuple


def run_case(
    case_id: str,
    sources: tuple,
    mixing,
    config: Optional[PipelineConfig] = None,
    gain_lung: float = DEFAULT_LUNG_GAIN,
) -> CaseResult:
    """Filter the sources, mix them, separate, and score both estimates.

    References are the band-passed sources.  The baseline scores take the
    better of the two normalized mixtures as the estimate for each role.
    """
    config = config or PipelineConfig()
    check_mixing(mixing)
    heart, lung = sources
    heart_ref = bandpass(heart, config.heart_band)
    lung_ref = bandpass(lung, config.lung_band)
    mix1, mix2 = mix(heart_ref, lung_ref, mixing, gain_lung)
    result = separate(mix1, mix2, replace(config, mode=SOURCES_AVAILABLE))
    refs = [heart_ref, lung_ref]
    heart_scores = bss_eval.score(result.heart_estimate, refs, 0)
    lung_scores = bss_eval.score(result.lung_estimate, refs, 1)
    mixes = [normalize(m) for m in (mix1, mix2)]
    heart_base = max((bss_eval.score(m, refs, 0) for m in mixes), key=lambda s: s.sir_db)
    lung_base = max((bss_eval.score(m, refs, 1) for m in mixes), key=lambda s: s.sir_db)
    return CaseResult(case_id, result, heart_scores, lung_scores, heart_base, lung_base, (heart_ref, lung_ref))
