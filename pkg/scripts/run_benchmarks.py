#!/usr/bin/env python3
"""Density benchmark over the CSV datasets available under data/.

For each dataset: generic preprocessing (drop near-discrete and highly
correlated columns), a seeded half/half split, prequential bandwidth tuning,
and mean test NLL over several runs, with a cross-validated KDE baseline.
Run scripts/export_datasets.py first to materialize the bundled datasets.
"""

import argparse
from pathlib import Path

import numpy as np

from arbp import baseline, bench
from arbp.data import destandardize, load_csv, preprocess

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--models", nargs="+", default=["r-bp", "ar-bp", "ard-bp"])
    ap.add_argument("--runs", type=int, default=5)
    ap.add_argument("--maxiter", type=int, default=100)
    args = ap.parse_args()

    paths = sorted(DATA_DIR.glob("*.csv"))
    if not paths:
        raise SystemExit(f"no CSVs under {DATA_DIR}; run scripts/export_datasets.py")
    for path in paths:
        ds = preprocess(load_csv(path))
        X = destandardize(ds.values, ds.record)  # splits restandardize per run
        half = len(X) // 2
        rng = np.random.default_rng(0)
        idx = rng.permutation(len(X))
        tr, te = X[idx[:half]], X[idx[half:2 * half]]
        print(f"\n== {path.name} (n={len(X)}, d={X.shape[1]}) ==")
        # standardize by training stats; all NLLs below are in this scale
        mu, sd = tr.mean(0), tr.std(0)
        tr_s, te_s = (tr - mu) / sd, (te - mu) / sd
        print(f"KDE baseline NLL: {baseline.kde_baseline(tr_s, te_s):.3f}")
        for model in args.models:
            cfg = bench.RunConfig(model=model, runs=args.runs,
                                  maxiter=args.maxiter, dataset=path.stem)
            print(bench.format_table(bench.benchmark(cfg, tr_s, te_s)))


if __name__ == "__main__":
    main()
