"""Acceptance suite: one criterion per test, one printed PASS/FAIL line each.

Each test prints a ``[ACCEPTANCE nn]`` verdict line directly to the terminal
(bypassing capture) so the full scorecard is visible in any pytest run. The
dataset-bound criteria look for CSV files under ``data/`` at the repository
root and skip loudly when a dataset cannot be obtained offline.
"""

import time
from pathlib import Path

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import norm

from arbp import bandwidth as bw
from arbp import engine, mathcore, sampling, supervised, train
from arbp.data import destandardize, load_csv, preprocess, standardize_array

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


@pytest.fixture()
def report(capfd):
    def _report(num, name, ok, detail=""):
        verdict = "PASS" if ok else "FAIL"
        suffix = f" ({detail})" if detail else ""
        with capfd.disabled():
            print(f"\n[ACCEPTANCE {num:02d}] {name}: {verdict}{suffix}")
        assert ok, f"criterion {num} ({name}) failed{suffix}"

    return _report


def _skip(capfd, num, name, reason):
    with capfd.disabled():
        print(f"\n[ACCEPTANCE {num:02d}] {name}: SKIP — {reason}")
    pytest.skip(f"criterion {num} ({name}): {reason}")


def _gl_nodes(lo, hi, num):
    nodes, weights = np.polynomial.legendre.leggauss(num)
    return 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo), 0.5 * (hi - lo) * weights


# --- 1: first update matches the DPMM one-observation predictive ---------------


def _dpmm_one_obs_predictive(x, x1, rho0):
    """Quadrature DPMM predictive after one observation, tau = 1/rho0 - 1."""
    tau = 1.0 / rho0 - 1.0
    prior_term = norm.pdf(x, scale=np.sqrt(1.0 + 1.0 / tau))
    post_mean, post_var = x1 / (1.0 + tau), 1.0 / (1.0 + tau)

    def integrand(t):
        return norm.pdf(x, loc=t) * norm.pdf(t, loc=post_mean, scale=np.sqrt(post_var))

    post_term, _ = quad(integrand, post_mean - 12, post_mean + 12, limit=200)
    return 0.5 * prior_term + 0.5 * post_term


def test_criterion_01_first_update_oracle(report):
    t0 = time.time()
    worst = 0.0
    xs = np.arange(-3.0, 3.5, 1.0)
    for rho0 in (0.5, 0.9):
        for x1 in (-1.0, 0.0, 2.0):
            # the recursion starts from p0 = N(0,1) while the DPMM marginal is
            # N(0, 1 + 1/tau); compare on data rescaled by s = sqrt(1 + 1/tau)
            tau = 1.0 / rho0 - 1.0
            s = np.sqrt(1.0 + 1.0 / tau)
            model = engine.fit(np.array([[x1 / s]]), bw.Constant(rho0=rho0), M=1, seed=0)
            got = np.exp(engine.eval_log_density(model, xs[:, None] / s)) / s
            want = np.array([_dpmm_one_obs_predictive(x, x1, rho0) for x in xs])
            worst = max(worst, float(np.max(np.abs(got / want - 1.0))))
    elapsed = time.time() - t0
    report(1, "first-update DPMM oracle", worst <= 1e-6 and elapsed < 10.0,
           f"max rel err {worst:.2e}, {elapsed:.1f}s")


# --- 2: martingale property ------------------------------------------------------


def _martingale_rel_error(d, i, seed):
    """|∫ p_i(x) p_{i-1}(x_i) dx_i / p_{i-1}(x) - 1| by Gauss-Legendre."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((i - 1, d))
    ell = rng.uniform(0.5, 2.0, size=max(d - 1, 1))
    bwm = bw.Rbf(rho0=0.85, ell=ell) if d > 1 else bw.Constant(rho0=0.85)
    prefix = engine.fit(X, bwm, M=1, seed=0, fixed_feature_order=list(range(d)))
    x = np.array([0.3, -0.7][:d])
    u_x, lp_x = engine.replay(prefix, x[None, :], 0)
    a = mathcore.alpha(i)
    if d == 1:
        t, w = _gl_nodes(-9.0, 9.0, 300)
        T = t[:, None]
    else:
        t1, w1 = _gl_nodes(-8.5, 8.5, 140)
        T = np.column_stack([g.ravel() for g in np.meshgrid(t1, t1, indexing="ij")])
        w = np.outer(w1, w1).ravel()
    v_T, lp_T = engine.replay(prefix, T, 0)
    rho = bw.rho_matrix(bwm, T, x)
    eps = mathcore.EPS_U
    logc = mathcore.log_copula_density(
        np.clip(u_x[0][None, :], eps, 1 - eps), np.clip(v_T, eps, 1 - eps), rho
    ).sum(axis=1)
    ratio = 1.0 - a + a * np.exp(logc)
    integral = np.exp(lp_x[0]) * np.sum(w * ratio * np.exp(lp_T))
    return abs(integral / np.exp(lp_x[0]) - 1.0)


def test_criterion_02_martingale_property(report):
    t0 = time.time()
    worst = 0.0
    for d in (1, 2):
        for i in (1, 5):
            worst = max(worst, _martingale_rel_error(d, i, seed=10 * d + i))
    elapsed = time.time() - t0
    report(2, "martingale / c.i.d. property", worst <= 1e-4 and elapsed < 120.0,
           f"max rel err {worst:.2e}, {elapsed:.1f}s")


# --- 3: normalization and CDF/density consistency --------------------------------


def test_criterion_03_normalization_and_cdf_consistency(report):
    rng = np.random.default_rng(0)
    X = rng.standard_normal((50, 1))
    model = engine.fit(X, bw.make_model("ar-bp", 1), M=5, seed=0)
    nodes, weights = _gl_nodes(-12.0, 12.0, 600)
    dens = np.exp(engine.eval_log_density(model, nodes[:, None]))
    integral = float(np.sum(weights * dens))

    grid = np.linspace(-4.0, 4.0, 41)
    cdf = engine.marginal_cdf_1d(model, grid)
    # integrate the density from far below up to each grid point in one call
    seg_nodes, seg_weights = np.polynomial.legendre.leggauss(400)
    all_nodes = np.concatenate(
        [0.5 * (g + 12.0) * seg_nodes + 0.5 * (g - 12.0) for g in grid]
    )
    all_dens = np.exp(engine.eval_log_density(model, all_nodes[:, None]))
    integrated = np.array([
        0.5 * (g + 12.0) * np.sum(seg_weights * all_dens[k * 400:(k + 1) * 400])
        for k, g in enumerate(grid)
    ])
    cdf_err = float(np.max(np.abs(cdf - integrated)))
    monotone = bool(np.all(np.diff(cdf) >= 0))
    report(3, "normalization and CDF consistency",
           abs(integral - 1.0) <= 1e-3 and cdf_err <= 1e-4 and monotone,
           f"integral {integral:.6f}, max CDF err {cdf_err:.2e}, monotone {monotone}")


# --- 4: reduction identities ------------------------------------------------------


def test_criterion_04_reduction_identities(report):
    rng = np.random.default_rng(3)
    X = rng.standard_normal((20, 3))
    Z = rng.standard_normal((8, 3))
    base = engine.eval_log_density(engine.fit(X, bw.Constant(rho0=0.9), M=3, seed=0), Z)
    huge_ell = engine.eval_log_density(
        engine.fit(X, bw.Rbf(rho0=0.9, ell=np.full(2, 1e9)), M=3, seed=0), Z)
    zero_net = bw.Net(rho0=0.9, weights=bw.ArNetWeights(
        W=np.zeros((8, 3)), b=np.zeros(8), V=np.zeros((3, 4, 8))))
    net = engine.eval_log_density(engine.fit(X, zero_net, M=3, seed=0), Z)
    err_ar = float(np.max(np.abs(huge_ell - base)))
    err_net = float(np.max(np.abs(net - base)))
    report(4, "reduction identities", err_ar <= 1e-10 and err_net <= 1e-10,
           f"huge-lengthscale err {err_ar:.2e}, zero-net err {err_net:.2e}")


# --- 5: gradient check -------------------------------------------------------------


def test_criterion_05_gradient_check(report):
    rng = np.random.default_rng(5)
    n, worst = 20, 0.0
    templates = [
        bw.Constant(rho0=0.8),
        bw.Rbf(rho0=np.full(3, 0.8), ell=np.array([0.9, 1.4])),
        bw.Net(rho0=0.8, weights=bw.init_net(3, hidden=6, latent=2, rng=1)),
    ]
    for template in templates:
        d = 1 if isinstance(template, bw.Constant) else 3
        X = rng.standard_normal((n, d))
        perm = engine.PermutationPair(sample_order=np.arange(n),
                                      feature_order=np.arange(d))
        params = bw.to_unconstrained(template)
        grad = train.gradient(params, X, template, perm)
        h = 1e-5
        for k in range(len(params)):
            e = np.zeros_like(params)
            e[k] = h
            fd = (train.objective(params + e, X, template, perm)
                  - train.objective(params - e, X, template, perm)) / (2 * h)
            rel = abs(grad[k] - fd) / max(abs(fd), 1e-8)
            worst = max(worst, rel)
    report(5, "gradient vs central finite differences", worst <= 1e-3,
           f"max rel err {worst:.2e}")


# --- 6: small-dataset density reproduction ----------------------------------------


def _density_benchmark_nll(X, kind, seed, maxiter=100):
    """One seeded 75/25 split, tuned fit, mean test NLL."""
    rng = np.random.default_rng(seed)
    idx = rng.permutation(len(X))
    ntr = int(round(0.75 * len(X)))
    tr_raw, te_raw = X[idx[:ntr]], X[idx[ntr:]]
    mu, sd = tr_raw.mean(0), tr_raw.std(0)
    tr, te = (tr_raw - mu) / sd, (te_raw - mu) / sd
    tuned = train.optimize(tr, bw.make_model(kind, tr.shape[1]),
                           train.OptimizerConfig(maxiter=maxiter, seed=seed))
    model = engine.fit(tr, tuned, M=10, seed=seed)
    return float(-engine.eval_log_density(model, te).mean())


def _load_feature_csv(path):
    ds = preprocess(load_csv(path))
    # recover the unstandardized kept columns; splits restandardize per seed
    return destandardize(ds.values, ds.record)


def test_criterion_06_small_dataset_reproduction(report, capfd):
    name = "small-dataset density NLL reproduction"
    try:
        from sklearn.datasets import load_wine
    except ImportError:
        _skip(capfd, 6, name, "scikit-learn unavailable and no data/wine.csv")
    wine = load_wine()
    # the d=12 reference protocol excludes the integer-valued magnesium column
    keep = [j for j, c in enumerate(wine.feature_names) if c != "magnesium"]
    datasets = {"WINE": (wine.data[:, keep], 13.45, 13.22)}
    for label, fname in (("BREAST", "wpbc.csv"), ("PARKIN", "parkinsons.csv")):
        path = DATA_DIR / fname
        targets = {"BREAST": (6.18, 6.11), "PARKIN": (8.29, 7.21)}[label]
        if path.exists():
            datasets[label] = (_load_feature_csv(path), *targets)
        else:
            with capfd.disabled():
                print(f"\n[ACCEPTANCE 06] {label}: SKIP — {path} missing; this "
                      f"environment has no network access to download it. Place "
                      f"a numeric feature CSV (header row, no id/label columns) "
                      f"at that path to enable the check.")
    t0 = time.time()
    lines, ok = [], True
    for label, (X, target_ar, target_ard) in datasets.items():
        for kind, target in (("ar-bp", target_ar), ("ard-bp", target_ard)):
            nlls = [_density_benchmark_nll(X, kind, seed) for seed in range(5)]
            mean = float(np.mean(nlls))
            ok = ok and abs(mean - target) <= 0.5
            lines.append(f"{label} {kind} {mean:.3f} (target {target} ± 0.5)")
    elapsed = time.time() - t0
    report(6, name, ok and elapsed < 1800.0, "; ".join(lines) + f"; {elapsed:.0f}s")


# --- 7: supervised reproduction ----------------------------------------------------


def _supervised_split(X, y, seed):
    rng = np.random.default_rng(seed)
    idx = rng.permutation(len(X))
    ntr = int(round(0.75 * len(X)))
    return X[idx[:ntr]], y[idx[:ntr]], X[idx[ntr:]], y[idx[ntr:]]


def _tuned_supervised_bandwidth(Xtr, ytr, task, seed, maxiter=100):
    """Tune on the joint (x, y) density; the response is the last position."""
    joint = np.column_stack([Xtr, ytr]).astype(float)
    mu, sd = joint.mean(0), joint.std(0)
    sd[sd == 0] = 1.0
    joint = (joint - mu) / sd
    template = bw.make_model("ard-bp", joint.shape[1])
    return train.optimize(joint, template,
                          train.OptimizerConfig(maxiter=maxiter, seed=seed))


def test_criterion_07_supervised_reproduction(report, capfd):
    name = "supervised conditional NLL reproduction"
    jobs = []
    for label, fname, task, bound in (
        ("BOSTON", "boston.csv", "regression", 0.62),
        ("IONO", "ionosphere.csv", "classification", 0.30),
    ):
        path = DATA_DIR / fname
        if not path.exists():
            with capfd.disabled():
                print(f"\n[ACCEPTANCE 07] {label}: SKIP — {path} missing; this "
                      f"environment has no network access to download it. Place "
                      f"a numeric CSV (header row, response in the last column) "
                      f"at that path to enable the check.")
            continue
        jobs.append((label, path, task, bound))
    if not jobs:
        _skip(capfd, 7, name, "no supervised benchmark CSVs available offline")
    t0 = time.time()
    lines, ok = [], True
    for label, path, task, bound in jobs:
        raw = load_csv(path)
        X, y = raw.values[:, :-1], raw.values[:, -1]
        nlls = []
        for seed in range(5):
            Xtr, ytr, Xte, yte = _supervised_split(X, y, seed)
            ds = standardize_array(Xtr)
            Xte_s = (Xte - ds.record.mean) / ds.record.sd
            tuned = _tuned_supervised_bandwidth(ds.values, ytr, task, seed)
            if task == "regression":
                model = supervised.fit_regression(ds.values, ytr, tuned, M=10, seed=seed)
                lp = supervised.predict_log_density_regression(model, Xte_s, yte)
            else:
                model = supervised.fit_classification(
                    ds.values, ytr.astype(int), tuned, M=10, seed=seed)
                p1 = supervised.predict_proba(model, Xte_s)
                lp = np.where(yte.astype(int) == 1, np.log(p1), np.log1p(-p1))
            nlls.append(float(-lp.mean()))
        mean = float(np.mean(nlls))
        ok = ok and mean <= bound
        lines.append(f"{label} {task} NLL {mean:.3f} (bound {bound})")
    elapsed = time.time() - t0
    report(7, name, ok and elapsed < 1200.0, "; ".join(lines) + f"; {elapsed:.0f}s")


# --- 8: chessboard ordering --------------------------------------------------------


def _chessboard(n, rng):
    pts = np.empty((n, 2))
    k = 0
    while k < n:
        xy = rng.uniform(0, 4, size=(n, 2))
        keep = (np.floor(xy[:, 0]).astype(int) + np.floor(xy[:, 1]).astype(int)) % 2 == 0
        sel = xy[keep]
        take = min(len(sel), n - k)
        pts[k:k + take] = sel[:take]
        k += take
    return pts


def test_criterion_08_chessboard_ordering(report):
    t0 = time.time()
    lines, ok = [], True
    for seed in range(5):
        rng = np.random.default_rng(seed)
        X = _chessboard(600, rng)
        tr, te = X[:300], X[300:]
        ds = standardize_array(tr)
        te_s = (te - ds.record.mean) / ds.record.sd
        lls = {}
        for kind in ("r-bp", "ar-bp"):
            tuned = train.optimize(ds.values, bw.make_model(kind, 2),
                                   train.OptimizerConfig(maxiter=100, seed=seed))
            model = engine.fit(ds.values, tuned, M=10, seed=seed)
            lls[kind] = float(engine.eval_log_density(model, te_s).mean())
        ok = ok and lls["ar-bp"] > lls["r-bp"]
        lines.append(f"seed {seed}: ar {lls['ar-bp']:.3f} vs r {lls['r-bp']:.3f}")
    elapsed = time.time() - t0
    report(8, "chessboard AR-BP > R-BP", ok, "; ".join(lines) + f"; {elapsed:.0f}s")


# --- 9: classification normalization ------------------------------------------------


def test_criterion_09_classification_normalization(report):
    rng = np.random.default_rng(9)
    worst = 0.0
    for trial in range(100):
        n, d = 20, 2
        X = rng.standard_normal((n, d))
        y = rng.integers(0, 2, n)
        bwm = bw.Rbf(rho0=0.9, ell=rng.uniform(0.5, 2.0, d))
        model = supervised.fit_classification(X, y, bwm, M=1, seed=trial)
        perm = model.permutations[0]
        Xp = model.train_x[perm.sample_order][:, perm.feature_order]
        yp = y[perm.sample_order]
        xq = rng.standard_normal(d)
        p1 = p0 = 0.5
        for i in range(n):
            r = model.v_y[0, i]
            beta, rho_y = supervised._beta_and_rho_y(xq[None, :], Xp[i], bwm, i + 1)
            b1 = float(supervised.bernoulli_b(p1, r, rho_y[0], same_label=yp[i] == 1))
            b0 = float(supervised.bernoulli_b(p0, r, rho_y[0], same_label=yp[i] == 0))
            p1 = (1 - beta[0] + beta[0] * b1) * p1
            p0 = (1 - beta[0] + beta[0] * b0) * p0
            worst = max(worst, abs(p1 + p0 - 1.0))
    report(9, "classification normalization", worst <= 1e-12,
           f"max |p1 + p0 - 1| = {worst:.2e} over 100 sequences")


# --- 10: complexity scaling ----------------------------------------------------------


def test_criterion_10_complexity_scaling(report):
    rng = np.random.default_rng(0)
    d = 20
    ns = [250, 500, 1000, 2000]
    Z = rng.standard_normal((50, d))
    fit_times, eval_times = [], []
    engine.fit(rng.standard_normal((100, d)), bw.Constant(rho0=0.9), M=1)  # warm-up
    for n in ns:
        X = rng.standard_normal((n, d))
        best_fit, best_eval = np.inf, np.inf
        for _ in range(3):  # best of three to suppress scheduler noise
            t0 = time.perf_counter()
            model = engine.fit(X, bw.Constant(rho0=0.9), M=1, seed=0)
            t1 = time.perf_counter()
            engine.eval_log_density(model, Z)
            t2 = time.perf_counter()
            best_fit = min(best_fit, t1 - t0)
            best_eval = min(best_eval, (t2 - t1) / len(Z))
        fit_times.append(best_fit)
        eval_times.append(best_eval)
    fit_slope = float(np.polyfit(np.log(ns), np.log(fit_times), 1)[0])
    eval_slope = float(np.polyfit(np.log(ns), np.log(eval_times), 1)[0])
    smoke = engine.fit(rng.standard_normal((5000, 5)), bw.Constant(rho0=0.9),
                       M=1, seed=0, compute_density=True)
    smoke_ok = bool(np.all(np.isfinite(smoke.v)) and np.all(np.isfinite(smoke.prequential)))
    report(10, "fit/eval complexity scaling",
           1.8 <= fit_slope <= 2.3 and 0.8 <= eval_slope <= 1.2 and smoke_ok,
           f"fit slope {fit_slope:.2f}, eval slope {eval_slope:.2f}, "
           f"n=5000 smoke finite {smoke_ok}")


# --- 11: SMC sampling ------------------------------------------------------------------


def test_criterion_11_smc_sampling(report):
    means = np.array([[-2.0, -2.0], [2.0, 2.0]])
    rng = np.random.default_rng(0)
    comp = rng.integers(0, 2, 50)
    X = means[comp] + 0.3 * rng.standard_normal((50, 2))
    ds = standardize_array(X)
    model = engine.fit(ds, bw.Constant(rho0=0.9), M=5, seed=0)
    events = []
    ps = sampling.smc_sample(model, B=1000, seed=1, moves=2, move_scale=0.8,
                             events=events)
    pts = destandardize(ps.particles, ds.record)
    worst_mean_err = 0.0
    for c, mask in ((0, pts.sum(axis=1) < 0), (1, pts.sum(axis=1) >= 0)):
        w = ps.weights[mask]
        est = (pts[mask] * w[:, None]).sum(axis=0) / w.sum()
        worst_mean_err = max(worst_mean_err, float(np.max(np.abs(est - means[c]))))

    X1 = np.random.default_rng(1).standard_normal((20, 1))
    m1 = engine.fit(X1, bw.Constant(rho0=0.8), M=3, seed=0)
    ps1 = sampling.smc_sample(m1, B=5000, seed=12)
    order = np.argsort(ps1.particles[:, 0])
    xs, ws = ps1.particles[order, 0], ps1.weights[order]
    ecdf = np.cumsum(ws) / ws.sum()
    ks = float(np.max(np.abs(ecdf - engine.marginal_cdf_1d(m1, xs))))
    report(11, "SMC sampling",
           worst_mean_err <= 0.3 and len(events) > 0 and ks <= 0.05,
           f"max component-mean err {worst_mean_err:.3f}, "
           f"{len(events)} resampling events, KS {ks:.3f}")
