"""Benchmark harness: repeated seeded runs with a structured report.

One run = (optionally) tune the bandwidth on the training split, fit the
prequential model, score mean NLL on the test split. The report carries the
per-run results plus mean and standard error; any faulted run is recorded
and the report is marked partial.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import engine, train as train_mod
from .bandwidth import make_model
from .mathcore import NumericFault

DEFAULT_RUNS = 5


@dataclass
class RunConfig:
    model: str = "ar-bp"  # r-bp | rd-bp | ar-bp | ard-bp | arnet-bp
    kernel: str = "rbf"  # rbf | rq
    M: int = 10
    seed: int = 0
    runs: int = DEFAULT_RUNS
    maxiter: int = 200
    n_rho: int | None = None
    learning_rate: float | None = None
    init_density: str = "normal"  # normal | uniform
    dataset: str = ""

    def __post_init__(self):
        from .bandwidth import MODEL_KINDS

        if self.model not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.model!r}")
        if self.kernel not in ("rbf", "rq"):
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if self.init_density not in ("normal", "uniform"):
            raise ValueError(f"unknown initial density {self.init_density!r}")
        if self.M < 1 or self.runs < 1:
            raise ValueError("M and runs must be >= 1")


def fit_run(X_train, config: RunConfig, seed: int) -> engine.FittedDensityModel:
    """Tune (when maxiter > 0) and fit a single model with the given seed."""
    d = X_train.shape[1]
    template = make_model(config.model, d, kernel=config.kernel, seed=seed)
    if config.maxiter > 0:
        opt = train_mod.OptimizerConfig(
            maxiter=config.maxiter, n_rho=config.n_rho,
            learning_rate=config.learning_rate, seed=seed,
        )
        template = train_mod.optimize(X_train, template, opt)
    return engine.fit(X_train, template, M=config.M, seed=seed,
                      init_density=config.init_density)


def _one_run(X_train, X_test, config: RunConfig, seed: int) -> dict:
    t0 = time.perf_counter()
    try:
        model = fit_run(X_train, config, seed)
        nll = float(-engine.eval_log_density(model, X_test).mean())
        return {"seed": seed, "nll": nll, "wall_seconds": time.perf_counter() - t0}
    except NumericFault as exc:
        return {"seed": seed, "nll": None, "error": str(exc),
                "wall_seconds": time.perf_counter() - t0}


def benchmark(config: RunConfig, X_train, X_test, parallel_runs: int = 1) -> dict:
    """Run ``config.runs`` seeded runs and aggregate into a report dict."""
    X_train = np.atleast_2d(np.asarray(X_train, dtype=float))
    X_test = np.atleast_2d(np.asarray(X_test, dtype=float))
    seeds = [config.seed + r for r in range(config.runs)]
    t0 = time.perf_counter()
    if parallel_runs > 1:
        with ThreadPoolExecutor(max_workers=parallel_runs) as pool:
            runs = list(pool.map(lambda s: _one_run(X_train, X_test, config, s), seeds))
    else:
        runs = [_one_run(X_train, X_test, config, s) for s in seeds]
    nlls = np.array([r["nll"] for r in runs if r["nll"] is not None])
    report = {
        "dataset": config.dataset,
        "model": config.model,
        "kernel": config.kernel,
        "M": config.M,
        "seed": config.seed,
        "config": asdict(config),
        "runs": runs,
        "mean_nll": float(nlls.mean()) if nlls.size else None,
        "se_nll": float(nlls.std(ddof=1) / np.sqrt(nlls.size)) if nlls.size > 1 else 0.0,
        "wall_seconds": time.perf_counter() - t0,
        "partial": len(nlls) < len(runs),
    }
    return report


def format_table(report: dict) -> str:
    """Human-readable summary of a benchmark report."""
    lines = [
        f"dataset: {report['dataset'] or '-'}  model: {report['model']}"
        f"  kernel: {report['kernel']}  M: {report['M']}",
        f"{'seed':>6}  {'nll':>10}  {'seconds':>8}",
    ]
    for r in report["runs"]:
        nll = f"{r['nll']:.4f}" if r["nll"] is not None else "FAULT"
        lines.append(f"{r['seed']:>6}  {nll:>10}  {r['wall_seconds']:>8.2f}")
    if report["mean_nll"] is not None:
        lines.append(f"mean NLL {report['mean_nll']:.4f} +/- {report['se_nll']:.4f} (se)")
    if report["partial"]:
        lines.append("WARNING: report is partial (faulted runs above)")
    return "\n".join(lines)


def emit_density_grid(model: engine.FittedDensityModel, path, lo=-3.0, hi=3.0, num=61) -> None:
    """Write a delimited log-density grid for 1-D or 2-D models."""
    axis = np.linspace(lo, hi, num)
    with open(path, "w", encoding="utf-8") as fh:
        if model.d == 1:
            fh.write("x,log_density\n")
            logp = engine.eval_log_density(model, axis[:, None])
            for x, lp in zip(axis, logp):
                fh.write(f"{float(x)!r},{float(lp)!r}\n")
        elif model.d == 2:
            fh.write("x1,x2,log_density\n")
            xx, yy = np.meshgrid(axis, axis)
            pts = np.column_stack([xx.ravel(), yy.ravel()])
            logp = engine.eval_log_density(model, pts)
            for (x1, x2), lp in zip(pts, logp):
                fh.write(f"{float(x1)!r},{float(x2)!r},{float(lp)!r}\n")
        else:
            raise ValueError("density grids are only emitted for d in {1, 2}")
