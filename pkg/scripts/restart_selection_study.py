"""Compare offsets, restart counts and restart-selection rules offline.

Stage 1 factorizes every case once per (module, offset ratio, restart) and
caches, for each output row, its envelope period, periodicity strength,
SIR against both references and correlation with both references.
Stage 2 replays selection rules on the cache:

    strength   kept row with the strongest envelope periodicity
    split      prefer runs whose two outputs have clearly different periods
    cross      lung only: prefer runs whose kept row is clearly slower than
               the chosen heart row, then split, then strength

The offset ratio r means lambda2 = r * lambda1 (only the ratio matters;
ratio 1 is the minimal offset for peak-normalized input).

    python3 scripts/restart_selection_study.py --cases 100 --cache runs/restarts.pkl
"""

import argparse
import itertools
import pickle
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from hlsep import bss_eval, nmf_core
from hlsep.periodicity import period_of
from hlsep.pipeline import RESTART_SEED_STRIDE, SPLIT_MARGIN, default_heart_nmf, default_lung_nmf
from hlsep.preprocess import HEART_BAND, LUNG_BAND, bandpass, normalize
from hlsep.signal_model import Signal
from hlsep.synth import gen_case, mix


def build_cache(n_cases, seed, restarts, heart_ratios, lung_ratios):
    configs = {("H", r): replace(default_heart_nmf(), lambda1=1.0, lambda2=r) for r in heart_ratios}
    configs.update({("L", r): replace(default_lung_nmf(), lambda1=1.0, lambda2=r) for r in lung_ratios})
    cache = {}
    start = time.perf_counter()
    for i in range(n_cases):
        case = gen_case(i, seed)
        refs = [bandpass(case.heart, HEART_BAND), bandpass(case.lung, LUNG_BAND)]
        m1, m2 = mix(*refs, case.mixing)
        y = np.vstack([normalize(m).samples for m in (m1, m2)])
        fs = m1.sample_rate_hz
        rec = {"base": [max(bss_eval.score(normalize(m), refs, k).sir_db for m in (m1, m2)) for k in (0, 1)]}
        for key, cfg in configs.items():
            t = nmf_core.affine_transform(y, 1.0, max(cfg.lambda2, nmf_core.auto_offset(y, 1.0)))
            runs = []
            for r in range(restarts):
                state = nmf_core.multilayer_factorize(t, replace(cfg, seed=cfg.seed + RESTART_SEED_STRIDE * r))
                rows = []
                for x in state.x:
                    sig = normalize(Signal(x, fs))
                    est = period_of(Signal(x, fs), use_envelope=True)
                    rows.append({
                        "P": est.period_seconds,
                        "st": est.peak_strength,
                        "sir": [bss_eval.score(sig, refs, k).sir_db for k in (0, 1)],
                        "cor": [abs(float(np.corrcoef(sig.samples, ref.samples)[0, 1])) for ref in refs],
                    })
                runs.append(rows)
            rec[key] = runs
        cache[i] = rec
        print(f"case {i} cached, {time.perf_counter() - start:.0f} s", flush=True)
    return cache


def _ordered(run):
    a, b = run
    return (a, b) if (a["P"], -a["st"]) <= (b["P"], -b["st"]) else (b, a)


def _split(short, long):
    return long["P"] > short["P"] * (1 + SPLIT_MARGIN)


def choose(runs, keep, rule, k, heart_p=None):
    best = None
    for run in runs[:k]:
        short, long = _ordered(run)
        kept = short if keep == "shorter" else long
        if rule == "strength":
            key = (kept["st"],)
        elif rule == "split":
            key = (_split(short, long), kept["st"])
        else:
            key = (kept["P"] > heart_p * (1 + SPLIT_MARGIN), _split(short, long), kept["st"])
        if best is None or key > best[0]:
            best = (key, kept)
    return best[1]


def replay(cache, hkey, lkey, kh, kl, hrule, lrule):
    h_sir, l_sir, h_imp, l_imp, wrong = [], [], [], [], []
    for i, rec in cache.items():
        h = choose(rec[hkey], "shorter", hrule, kh)
        lung = choose(rec[lkey], "longer", lrule, kl, heart_p=h["P"])
        if h["P"] > lung["P"]:
            h, lung = lung, h
        h_sir.append(h["sir"][0])
        l_sir.append(lung["sir"][1])
        h_imp.append(h_sir[-1] - rec["base"][0])
        l_imp.append(l_sir[-1] - rec["base"][1])
        if not (h["cor"][0] > h["cor"][1] and lung["cor"][1] > lung["cor"][0] and h["P"] < lung["P"]):
            wrong.append(i)
    return [float(np.median(v)) for v in (h_sir, l_sir, h_imp, l_imp)], wrong


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cases", type=int, default=100)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--restarts", type=int, default=7)
    ap.add_argument("--heart-ratios", type=float, nargs="+", default=[1.0, 1.15])
    ap.add_argument("--lung-ratios", type=float, nargs="+", default=[1.0, 1.25, 2.5, 5.0])
    ap.add_argument("--cache", type=Path, default=Path("runs/restarts.pkl"))
    ap.add_argument("--top", type=int, default=30)
    args = ap.parse_args()

    if args.cache.exists():
        cache = pickle.loads(args.cache.read_bytes())
    else:
        cache = build_cache(args.cases, args.seed, args.restarts, args.heart_ratios, args.lung_ratios)
        args.cache.parent.mkdir(parents=True, exist_ok=True)
        args.cache.write_bytes(pickle.dumps(cache))

    keys = list(next(iter(cache.values())))
    hkeys = [k for k in keys if isinstance(k, tuple) and k[0] == "H"]
    lkeys = [k for k in keys if isinstance(k, tuple) and k[0] == "L"]
    counts = sorted({3, 5, args.restarts})
    results = []
    for hkey, lkey, kh, kl, hrule, lrule in itertools.product(
        hkeys, lkeys, counts, counts, ["strength", "split"], ["strength", "split", "cross"]
    ):
        med, wrong = replay(cache, hkey, lkey, kh, kl, hrule, lrule)
        results.append((len(wrong), -min(med), hkey[1], lkey[1], kh, kl, hrule, lrule, med, wrong))
    results.sort(key=lambda r: r[:2])
    print("wrong  heart_r lung_r Kh Kl heart_rule lung_rule  median SIR H/L  improvement H/L  cases")
    for n_wrong, _, hr, lr, kh, kl, hrule, lrule, med, wrong in results[: args.top]:
        print(f"{n_wrong:5d}  {hr:7.2f} {lr:6.2f} {kh:2d} {kl:2d} {hrule:10s} {lrule:9s}"
              f"  {med[0]:5.1f} {med[1]:5.1f}      {med[2]:5.1f} {med[3]:5.1f}      {wrong}")


if __name__ == "__main__":
    main()
