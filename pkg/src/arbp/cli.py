"""Command-line interface.

Subcommands: fit, eval-density, predict, sample, benchmark, baseline-kde.
Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric fault.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import baseline, bench, engine, sampling, supervised
from .bandwidth import MODEL_KINDS, kind_name, make_model
from .data import DataError, load_csv, preprocess, standardize_array
from .mathcore import NumericFault
from .modelio import ModelFormatError, load_model, save_model

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


def _add_common(p):
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", help="JSON file with run-configuration fields")


def _build_parser():
    parser = argparse.ArgumentParser(prog="arbp",
                                     description="Recursive copula predictive density estimation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a model and save it")
    p.add_argument("--train", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--task", choices=("density", "regression", "classification"),
                   default="density")
    p.add_argument("--model", choices=MODEL_KINDS, default=None)
    p.add_argument("--kernel", choices=("rbf", "rq"), default=None)
    p.add_argument("--permutations", type=int, default=None, metavar="M")
    p.add_argument("--maxiter", type=int, default=None)
    p.add_argument("--init", choices=("normal", "uniform"), default=None)
    _add_common(p)

    p = sub.add_parser("eval-density", help="mean test NLL of a saved density model")
    p.add_argument("--model", required=True, help="model file")
    p.add_argument("--test", required=True)
    p.add_argument("--out", help="write per-point log densities here")
    p.add_argument("--expect-model", choices=MODEL_KINDS,
                   help="fail unless the file holds this model kind")

    p = sub.add_parser("predict", help="conditional predictions from a supervised model")
    p.add_argument("--model", required=True, help="model file")
    p.add_argument("--test", required=True, help="CSV with response in the last column")
    p.add_argument("--out")

    p = sub.add_parser("sample", help="draw samples from a saved density model")
    p.add_argument("--model", required=True, help="model file")
    p.add_argument("--out", required=True)
    p.add_argument("--method", choices=("smc", "importance", "inverse"), default="smc")
    p.add_argument("-B", "--particles", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("benchmark", help="repeated seeded runs with a report")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--out", help="report JSON path")
    p.add_argument("--grid", help="emit a density grid here (d <= 2)")
    p.add_argument("--model", choices=MODEL_KINDS, default=None)
    p.add_argument("--kernel", choices=("rbf", "rq"), default=None)
    p.add_argument("--permutations", type=int, default=None, metavar="M")
    p.add_argument("--maxiter", type=int, default=None)
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--parallel-runs", type=int, default=1)
    _add_common(p)

    p = sub.add_parser("baseline-kde", help="cross-validated KDE baseline NLL")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _run_config(args) -> bench.RunConfig:
    fields = {}
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            fields.update(json.load(fh))
    overrides = {
        "model": getattr(args, "model", None),
        "kernel": getattr(args, "kernel", None),
        "M": getattr(args, "permutations", None),
        "seed": getattr(args, "seed", None),
        "maxiter": getattr(args, "maxiter", None),
        "runs": getattr(args, "runs", None),
        "init_density": getattr(args, "init", None),
    }
    fields.update({k: v for k, v in overrides.items() if v is not None})
    return bench.RunConfig(**fields)


def _load_standardized(path):
    return preprocess(load_csv(path))


def _cmd_fit(args) -> int:
    config = _run_config(args)
    if args.task == "density":
        ds = _load_standardized(args.train)
        model = bench.fit_run(ds.values, config, config.seed)
        model.record = ds.record
    else:
        raw = load_csv(args.train)
        X, y = raw.values[:, :-1], raw.values[:, -1]
        bw_model = make_model(config.model, X.shape[1] + 1, kernel=config.kernel,
                              seed=config.seed)
        if args.task == "regression":
            model = supervised.fit_regression(X, y, bw_model, M=config.M, seed=config.seed)
        else:
            model = supervised.fit_classification(X, y.astype(int), bw_model,
                                                  M=config.M, seed=config.seed)
    save_model(model, args.out)
    print(f"saved {args.task} model to {args.out}")
    return EXIT_OK


def _cmd_eval_density(args) -> int:
    model = load_model(args.model)
    if not isinstance(model, engine.FittedDensityModel):
        raise DataError(f"{args.model}: not a density model")
    if args.expect_model and kind_name(model.bandwidth) != args.expect_model:
        raise DataError(
            f"{args.model}: holds a {kind_name(model.bandwidth)} model, "
            f"expected {args.expect_model}"
        )
    raw = load_csv(args.test)
    if model.record is not None:
        Z = preprocess(raw, fit_stats=model.record).values
    else:
        Z = raw.values
    logp = engine.eval_log_density(model, Z)
    print(f"mean NLL: {-logp.mean():.6f}  (n={len(logp)})")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("log_density\n")
            fh.writelines(f"{float(lp)!r}\n" for lp in logp)
    return EXIT_OK


def _cmd_predict(args) -> int:
    model = load_model(args.model)
    if not isinstance(model, supervised.SupervisedModel):
        raise DataError(f"{args.model}: not a supervised model")
    raw = load_csv(args.test)
    X, y = raw.values[:, :-1], raw.values[:, -1]
    if model.task == "regression":
        logp = supervised.predict_log_density_regression(model, X, y)
        print(f"mean conditional NLL: {-logp.mean():.6f}  (n={len(logp)})")
        rows, header = logp, "log_density"
    else:
        proba = supervised.predict_proba(model, X)
        labels = y.astype(int)
        p_obs = np.where(labels == 1, proba, 1.0 - proba)
        print(f"mean conditional NLL: {-np.log(np.clip(p_obs, 1e-300, None)).mean():.6f}"
              f"  (n={len(proba)})")
        rows, header = proba, "p_one"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(header + "\n")
            fh.writelines(f"{float(r)!r}\n" for r in rows)
    return EXIT_OK


def _cmd_sample(args) -> int:
    model = load_model(args.model)
    if not isinstance(model, engine.FittedDensityModel):
        raise DataError(f"{args.model}: not a density model")
    if args.method == "smc":
        ps = sampling.smc_sample(model, B=args.particles, seed=args.seed)
        z, w = ps.particles, ps.weights
    elif args.method == "importance":
        ps = sampling.importance_sample(model, B=args.particles, seed=args.seed)
        z, w = ps.particles, ps.weights
    else:
        rng = engine.permutation_rng(args.seed, sampling._SAMPLING_STREAM)
        z = np.array([
            sampling.inverse_sample(model, rng.uniform(size=model.d),
                                    m=int(rng.integers(model.M)))
            for _ in range(args.particles)
        ])
        w = np.ones(len(z))
    if model.record is not None:
        z = z * model.record.sd + model.record.mean
    with open(args.out, "w", encoding="utf-8") as fh:
        cols = model.record.columns if model.record is not None else [
            f"x{j}" for j in range(model.d)]
        fh.write(",".join(cols) + ",weight\n")
        for row, wk in zip(z, w):
            fh.write(",".join(repr(float(c)) for c in row) + f",{float(wk)!r}\n")
    print(f"wrote {len(z)} samples to {args.out}")
    return EXIT_OK


def _cmd_benchmark(args) -> int:
    config = _run_config(args)
    train_ds = _load_standardized(args.train)
    test_raw = load_csv(args.test)
    test = preprocess(test_raw, fit_stats=train_ds.record).values
    report = bench.benchmark(config, train_ds.values, test,
                             parallel_runs=args.parallel_runs)
    print(bench.format_table(report))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
    if args.grid:
        model = bench.fit_run(train_ds.values, config, config.seed)
        bench.emit_density_grid(model, args.grid)
    return EXIT_OK


def _cmd_baseline_kde(args) -> int:
    train_ds = _load_standardized(args.train)
    test = preprocess(load_csv(args.test), fit_stats=train_ds.record).values
    nll = baseline.kde_baseline(train_ds.values, test, seed=args.seed)
    print(f"KDE baseline mean NLL: {nll:.6f}")
    return EXIT_OK


_COMMANDS = {
    "fit": _cmd_fit,
    "eval-density": _cmd_eval_density,
    "predict": _cmd_predict,
    "sample": _cmd_sample,
    "benchmark": _cmd_benchmark,
    "baseline-kde": _cmd_baseline_kde,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (DataError, ModelFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericFault as exc:
        print(f"numeric fault: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
