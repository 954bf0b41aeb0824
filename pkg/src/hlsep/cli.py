"""Command-line interface: ``hlsep synth | separate | evaluate | sweep | config``.

Output formats (schema version 1):

* ``synth`` writes ``<out>/<case_id>/{heart,lung,mix1,mix2}.wav`` and
  ``<out>/manifest.json``.
* ``separate`` writes ``heart.wav``, ``lung.wav`` and ``diagnostics.json``.
* ``evaluate`` appends ``case_id,source_role,sdr_db,sir_db,sar_db`` rows to
  ``<out>/scores.csv``.
* ``sweep`` writes ``sweep_cells.csv`` (alpha,layers,role,mean_sir_db,
  n_ok,n_failed), ``sweep_table.csv`` (one row per alpha, one column per
  layers x role) and ``sweep_best.csv`` (role,alpha,layers,mean_sir_db).

Infinite scores are written as ``inf`` / ``-inf``; missing sweep cells
are empty fields.  Exit status is 0 only when every output was written.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__, bss_eval
from .configfile import format_config, load_config
from .nmf_core import FactorizationError
from .pipeline import PipelineConfig, run_case, separate
from .signal_model import Signal
from .synth import CASE_DURATION_S, CASE_SAMPLE_RATE, DEFAULT_LUNG_GAIN, gen_case_set, mix
from .wavio import read_wav, write_wav

log = logging.getLogger("hlsep")

SCHEMA_VERSION = 1
SCORE_COLUMNS = ["case_id", "source_role", "sdr_db", "sir_db", "sar_db"]
CELL_COLUMNS = ["alpha", "layers", "role", "mean_sir_db", "n_ok", "n_failed"]
ROLES = ("H", "L")


@dataclass(frozen=True)
class SweepGrid:
    alphas: tuple = (-1.0, 0.5, 1.0, 2.0, 10.0)
    layer_counts: tuple = (1, 2, 3, 4)
    n_cases: int = 100

    def __post_init__(self):
        if not self.alphas or not self.layer_counts:
            raise ValueError("sweep grid needs at least one alpha and one layer count")
        if self.n_cases < 1:
            raise ValueError("n_cases must be >= 1")
        if any(L < 1 for L in self.layer_counts):
            raise ValueError("layer counts must be >= 1")
        if 0.0 in self.alphas:
            raise ValueError("alpha = 0 has no multiplicative update; leave it out of the grid")


# -- helpers ------------------------------------------------------------------


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".part")
    tmp.write_text(text)
    os.replace(tmp, path)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _config_from(args) -> PipelineConfig:
    return load_config(args.config) if args.config else PipelineConfig()


def _fmt_float(x) -> str:
    return "" if x is None else bss_eval.format_db(x)


# -- synth --------------------------------------------------------------------


def cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cases = gen_case_set(args.cases, args.seed, sample_rate_hz=args.sample_rate, duration_s=args.duration)
    records = []
    for case in cases:
        d = out / case.case_id
        d.mkdir(exist_ok=True)
        mixed = np.vstack([m.samples for m in mix(case.heart, case.lung, case.mixing, DEFAULT_LUNG_GAIN)])
        # one common gain keeps both mixtures inside the 16-bit range
        scale = 1.0 / max(1.0, float(np.max(np.abs(mixed))))
        files = {
            "heart": case.heart,
            "lung": case.lung,
            "mix1": Signal(scale * mixed[0], case.heart.sample_rate_hz),
            "mix2": Signal(scale * mixed[1], case.heart.sample_rate_hz),
        }
        for name, sig in files.items():
            write_wav(d / f"{name}.wav", sig)
        rec = case.record()
        rec.update(
            gain_lung=DEFAULT_LUNG_GAIN,
            mix_scale=scale,
            sample_rate_hz=case.heart.sample_rate_hz,
            duration_s=case.heart.duration_s,
            files={name: f"{case.case_id}/{name}.wav" for name in files},
        )
        records.append(rec)
    manifest = {"schema_version": SCHEMA_VERSION, "base_seed": args.seed, "n_cases": len(records), "cases": records}
    _atomic_write_text(out / "manifest.json", _dumps(manifest))
    print(f"wrote {len(records)} cases to {out}")
    return 0


# -- separate -----------------------------------------------------------------


def cmd_separate(args) -> int:
    # read and validate everything before touching the output directory
    mix1, mix2 = read_wav(args.mix1), read_wav(args.mix2)
    if len(mix1) != len(mix2) or mix1.sample_rate_hz != mix2.sample_rate_hz:
        raise ValueError(
            f"mixtures differ: {len(mix1)} samples @ {mix1.sample_rate_hz} Hz vs "
            f"{len(mix2)} samples @ {mix2.sample_rate_hz} Hz"
        )
    config = _config_from(args)
    if args.sequential:
        config = replace(config, parallel=False)
    result = separate(mix1, mix2, config)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    diag = {
        "schema_version": SCHEMA_VERSION,
        "inputs": {"mix1": str(args.mix1), "mix2": str(args.mix2)},
        "sample_rate_hz": mix1.sample_rate_hz,
        "config": config.as_dict(),
        **result.diagnostics(),
    }
    with tempfile.TemporaryDirectory(dir=out, prefix=".hlsep-") as tmp:
        tmp = Path(tmp)
        write_wav(tmp / "heart.wav", result.heart_estimate)
        write_wav(tmp / "lung.wav", result.lung_estimate)
        (tmp / "diagnostics.json").write_text(_dumps(diag))
        for name in ("heart.wav", "lung.wav", "diagnostics.json"):
            os.replace(tmp / name, out / name)
    print(f"heart period {result.heart_period_s:.3f} s, lung period {result.lung_period_s:.3f} s")
    for note in result.notes or []:
        print(f"note: {note}")
    return 0


# -- evaluate -----------------------------------------------------------------


def cmd_evaluate(args) -> int:
    est = read_wav(args.estimate)
    refs = [read_wav(p) for p in args.references]
    for p, r in zip(args.references, refs):
        if len(r) != len(est):
            raise ValueError(f"length mismatch: estimate has {len(est)} samples, {p} has {len(r)}")
    scores = bss_eval.score(est, refs, args.target_index)
    row = [args.case_id, args.role, *(bss_eval.format_db(v) for v in (scores.sdr_db, scores.sir_db, scores.sar_db))]
    print(f"SDR {row[2]} dB  SIR {row[3]} dB  SAR {row[4]} dB")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "scores.csv"
    new = not path.exists() or path.stat().st_size == 0
    with open(path, "a", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if new:
            w.writerow(SCORE_COLUMNS)
        w.writerow(row)
    return 0


# -- sweep --------------------------------------------------------------------


def _sweep_job(job):
    """One (alpha, layers, case) separation; returns SIRs or the failure reason."""
    alpha, layers, case, config = job
    cfg = replace(
        config,
        heart_nmf=replace(config.heart_nmf, alpha=alpha, num_layers=layers),
        lung_nmf=replace(config.lung_nmf, alpha=alpha, num_layers=layers),
        parallel=False,
    )
    try:
        res = run_case(case.case_id, case.sources, case.mixing, cfg)
    except (FactorizationError, ValueError, FloatingPointError) as exc:
        return None, None, f"{type(exc).__name__}: {exc}"
    return res.heart_scores.sir_db, res.lung_scores.sir_db, None


def run_sweep(grid: SweepGrid, seed: int, config: PipelineConfig, jobs: int = 1, **case_kw):
    """Mean SIR per (alpha, layers, role) cell over ``grid.n_cases`` synthetic cases.

    Returns a list of dicts in grid order.  Cases that fail are counted in
    ``n_failed``; a cell where every case failed has ``mean_sir_db=None``.
    """
    cases = gen_case_set(grid.n_cases, seed, **case_kw)
    work = [(a, L, c, config) for a in grid.alphas for L in grid.layer_counts for c in cases]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_job, work, chunksize=1))
    else:
        results = [_sweep_job(w) for w in work]

    cells = []
    n = len(cases)
    for gi, (a, L) in enumerate((a, L) for a in grid.alphas for L in grid.layer_counts):
        chunk = results[gi * n : (gi + 1) * n]
        for k, role in enumerate(ROLES):
            vals = [r[k] for r in chunk if r[2] is None]
            errors = [r[2] for r in chunk if r[2] is not None]
            for e in errors:
                log.warning("alpha=%s layers=%s: %s", a, L, e)
            mean = float(np.mean(vals)) if vals else None
            cells.append(
                {"alpha": a, "layers": L, "role": role, "mean_sir_db": mean, "n_ok": len(vals), "n_failed": len(errors)}
            )
    return cells


def best_cells(cells):
    out = {}
    for role in ROLES:
        scored = [c for c in cells if c["role"] == role and c["mean_sir_db"] is not None]
        if scored:
            # first maximum in grid order breaks ties
            out[role] = max(scored, key=lambda c: c["mean_sir_db"])
    return out


def sweep_tables(grid: SweepGrid, cells) -> dict:
    """The three CSV files of a sweep, as text."""
    cell_rows = [
        [repr(c["alpha"]), c["layers"], c["role"], _fmt_float(c["mean_sir_db"]), c["n_ok"], c["n_failed"]]
        for c in cells
    ]
    lookup = {(c["alpha"], c["layers"], c["role"]): c["mean_sir_db"] for c in cells}
    header = ["alpha"] + [f"L{L}_{role}" for L in grid.layer_counts for role in ROLES]
    table_rows = [
        [repr(a)] + [_fmt_float(lookup[(a, L, role)]) for L in grid.layer_counts for role in ROLES]
        for a in grid.alphas
    ]
    best = best_cells(cells)
    best_rows = [[role, repr(c["alpha"]), c["layers"], _fmt_float(c["mean_sir_db"])] for role, c in best.items()]
    return {
        "sweep_cells.csv": _csv_text(CELL_COLUMNS, cell_rows),
        "sweep_table.csv": _csv_text(header, table_rows),
        "sweep_best.csv": _csv_text(["role", "alpha", "layers", "mean_sir_db"], best_rows),
    }


def cmd_sweep(args) -> int:
    grid = SweepGrid(tuple(args.alphas), tuple(args.layers), args.cases)
    config = _config_from(args)
    cells = run_sweep(
        grid, args.seed, config, jobs=args.jobs, sample_rate_hz=args.sample_rate, duration_s=args.duration
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tables = sweep_tables(grid, cells)
    for name, text in tables.items():
        _atomic_write_text(out / name, text)
    print(tables["sweep_table.csv"], end="")
    return 0


def cmd_config(args) -> int:
    print(format_config(_config_from(args)), end="")
    return 0


# -- entry point ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hlsep", description="Heart/lung sound separation with periodicity-guided NMF.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="write synthetic source/mixture WAVs and a manifest")
    s.add_argument("--cases", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--sample-rate", type=int, default=CASE_SAMPLE_RATE)
    s.add_argument("--duration", type=float, default=CASE_DURATION_S)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("separate", help="separate two mixture WAVs into heart.wav and lung.wav")
    s.add_argument("mix1")
    s.add_argument("mix2")
    s.add_argument("--config", help="key = value configuration file")
    s.add_argument("--out", required=True)
    s.add_argument("--sequential", action="store_true", help="run the two modules one after the other")
    s.set_defaults(func=cmd_separate)

    s = sub.add_parser("evaluate", help="score an estimate against reference WAVs")
    s.add_argument("estimate")
    s.add_argument("references", nargs="+")
    s.add_argument("--target-index", type=int, default=0, help="which reference is the target (0-based)")
    s.add_argument("--case-id", default="case")
    s.add_argument("--role", default="heart")
    s.add_argument("--out", default=".", help="directory holding scores.csv")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("sweep", help="mean SIR over an (alpha, layers) grid on synthetic cases")
    s.add_argument("--alphas", type=float, nargs="+", default=list(SweepGrid.alphas))
    s.add_argument("--layers", type=int, nargs="+", default=list(SweepGrid.layer_counts))
    s.add_argument("--cases", type=int, default=SweepGrid.n_cases)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--config", help="key = value configuration file")
    s.add_argument("--out", required=True)
    s.add_argument("--jobs", type=int, default=1, help="worker processes")
    s.add_argument("--sample-rate", type=int, default=CASE_SAMPLE_RATE)
    s.add_argument("--duration", type=float, default=CASE_DURATION_S)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("config", help="print the effective configuration as key = value text")
    s.add_argument("--config", help="file whose settings are applied on top of the defaults")
    s.set_defaults(func=cmd_config)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError, FactorizationError) as exc:
        print(f"hlsep: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
