"""Core recursion: prequential fitting and test-time density evaluation.

The predictive density after i observations is built by a chain of bivariate
Gaussian copula updates. For a query point z with conditional CDFs u^j and a
new observation x_i with stored prequential CDFs v^j, one step performs, for
every dimension j in the active feature ordering,

    rho^j = rho(bandwidth, j, z^{1:j-1}, x_i^{1:j-1})
    c_j   = c(u^j, v^j; rho^j)
    H_j   = H(u^j, v^j; rho^j)
    u^j  <- [(1 - a_i) u^j + a_i H_j prod_{r<j} c_r]
            / [1 - a_i + a_i prod_{r<j} c_r]
    log p <- log p + log(1 - a_i + a_i prod_{j=1}^d c_j)

with a_i = (2 - 1/i)/(i + 1). All products are carried in the log domain.
Fitting runs this recursion prequentially over the training data to record
the v tensor; evaluation replays it for test points. Both are averaged over
M random (sample, feature) permutations, on the density scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logsumexp

from . import mathcore
from .bandwidth import BandwidthModel, rho_matrix
from .data import StandardizationRecord, StandardizedDataset
from .mathcore import NumericFault, alpha, clamp_unit, std_normal_log_pdf

UNIFORM_HALF_WIDTH = 15.0  # support of the optional uniform initial density


@dataclass(frozen=True)
class PermutationPair:
    sample_order: np.ndarray
    feature_order: np.ndarray


@dataclass
class QueryState:
    """Per-query conditional CDFs and accumulated log density."""

    u: np.ndarray  # (d,)
    log_p: float


@dataclass
class FittedDensityModel:
    bandwidth: BandwidthModel
    train: np.ndarray  # standardized training matrix, original ordering
    permutations: list[PermutationPair]
    v: np.ndarray  # (M, n, d) prequential conditional CDFs, permuted ordering
    seed: int
    record: StandardizationRecord | None = None
    init_density: str = "normal"
    prequential: np.ndarray | None = None  # (M, n) log p_{i-1}(x_i)

    @property
    def M(self):
        return self.v.shape[0]

    @property
    def n(self):
        return self.v.shape[1]

    @property
    def d(self):
        return self.v.shape[2]


def permutation_rng(seed, m) -> np.random.Generator:
    """Counter-based stream keyed by (seed, m); parallel-safe, reproducible."""
    return np.random.Generator(np.random.Philox(key=[int(seed), int(m)]))


def _init_cdf(X, kind):
    if kind == "normal":
        return clamp_unit(mathcore.std_normal_cdf(X))
    if kind == "uniform":
        return clamp_unit((X + UNIFORM_HALF_WIDTH) / (2.0 * UNIFORM_HALF_WIDTH))
    raise ValueError(f"unknown initial density {kind!r}")


def _init_log_pdf(X, kind):
    if kind == "normal":
        return std_normal_log_pdf(X).sum(axis=-1)
    if kind == "uniform":
        inside = np.all(np.abs(X) <= UNIFORM_HALF_WIDTH, axis=-1)
        d = X.shape[-1]
        return np.where(inside, -d * np.log(2.0 * UNIFORM_HALF_WIDTH), -np.inf)
    raise ValueError(f"unknown initial density {kind!r}")


def _update_block(u, log_p, X_query, x_i, i, bandwidth, v_row):
    """One copula update step, vectorized over query rows.

    ``u`` (k, d) and ``log_p`` (k,) are the states before observing x_i;
    ``X_query`` (k, d) are the query points in data space (needed for the
    data-dependent bandwidth); ``v_row`` (d,) holds v_{i-1}^j.
    Returns the updated (u, log_p).
    """
    a = float(alpha(i))
    rho = rho_matrix(bandwidth, X_query, x_i)
    logc = mathcore.log_copula_density(u, v_row[None, :], rho)
    H = mathcore.copula_conditional_cdf(u, v_row[None, :], rho)
    k = u.shape[0]
    prefix = np.concatenate([np.zeros((k, 1)), np.cumsum(logc, axis=1)[:, :-1]], axis=1)
    # w = a*C / (1 - a + a*C), C = prod_{r<j} c_r, computed as a sigmoid in log space
    w = expit(np.log(a) - np.log1p(-a) + prefix)
    u_new = clamp_unit((1.0 - w) * u + w * H)
    log_p_new = log_p + np.logaddexp(np.log1p(-a), np.log(a) + logc.sum(axis=1))
    if not (np.all(np.isfinite(u_new)) and np.all(np.isfinite(log_p_new))):
        raise NumericFault("non-finite value in copula update", step=i)
    return u_new, log_p_new


def update_step(state: QueryState, x_query, x_i, i, bandwidth, v_row) -> QueryState:
    """Single-query form of the copula update (step index i >= 1)."""
    if i < 1:
        raise ValueError("step index must be >= 1")
    u = np.atleast_2d(np.asarray(state.u, dtype=float))
    x_query = np.asarray(x_query, dtype=float)
    u_new, log_p_new = _update_block(
        u, np.asarray([state.log_p]), x_query[None, :], np.asarray(x_i, dtype=float),
        i, bandwidth, np.asarray(v_row, dtype=float),
    )
    return QueryState(u=u_new[0], log_p=float(log_p_new[0]))


def _as_matrix(train):
    if isinstance(train, StandardizedDataset):
        return train.values, train.record
    X = np.asarray(train, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    return X, None


def _fit_one_permutation(Xp, bandwidth, init_density):
    """Prequential pass over one permuted training matrix.

    Returns (v, preq) where v[i] = u_{i-1}(x_{i+1-th point}) and
    preq[i] = log p_{i-1}(x_i): each point's state after being updated by
    every earlier point.
    """
    n, d = Xp.shape
    u = _init_cdf(Xp, init_density)
    log_p = _init_log_pdf(Xp, init_density)
    v = np.empty((n, d))
    preq = np.empty(n)
    for i in range(n):
        v[i] = u[i]
        preq[i] = log_p[i]
        if i + 1 < n:
            u[i + 1:], log_p[i + 1:] = _update_block(
                u[i + 1:], log_p[i + 1:], Xp[i + 1:], Xp[i], i + 1, bandwidth, v[i]
            )
    return v, preq


def fit(
    train,
    bandwidth: BandwidthModel,
    M: int = 10,
    seed: int = 0,
    compute_density: bool = False,
    init_density: str = "normal",
    fixed_feature_order=None,
) -> FittedDensityModel:
    """Fit the prequential conditional-CDF tensor over M permutations.

    ``train`` is a StandardizedDataset or an already standardized array.
    ``fixed_feature_order`` pins one feature ordering across all M sample
    permutations (the nested tuning scheme); by default both orderings are
    sampled jointly per permutation.
    """
    X, record = _as_matrix(train)
    n, d = X.shape
    perms = []
    v = np.empty((M, n, d))
    preq = np.empty((M, n))
    for m in range(M):
        rng = permutation_rng(seed, m)
        sample_order = rng.permutation(n)
        if fixed_feature_order is None:
            feature_order = rng.permutation(d)
        else:
            feature_order = np.asarray(fixed_feature_order, dtype=int)
        Xp = X[sample_order][:, feature_order]
        v[m], preq[m] = _fit_one_permutation(Xp, bandwidth, init_density)
        perms.append(PermutationPair(sample_order=sample_order, feature_order=feature_order))
    return FittedDensityModel(
        bandwidth=bandwidth,
        train=X,
        permutations=perms,
        v=v,
        seed=seed,
        record=record,
        init_density=init_density,
        prequential=preq if compute_density else None,
    )


def replay(model: FittedDensityModel, test, m: int):
    """Run all n update steps for test points under permutation m.

    Returns (u, log_p): final conditional CDFs (n', d) in the permutation's
    feature ordering, and final log densities (n',).
    """
    Z = np.asarray(test, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    if Z.shape[1] != model.d:
        raise ValueError(f"test data has {Z.shape[1]} columns, model expects {model.d}")
    perm = model.permutations[m]
    Zp = Z[:, perm.feature_order]
    Xp = model.train[perm.sample_order][:, perm.feature_order]
    u = _init_cdf(Zp, model.init_density)
    log_p = _init_log_pdf(Zp, model.init_density)
    for i in range(model.n):
        u, log_p = _update_block(u, log_p, Zp, Xp[i], i + 1, model.bandwidth, model.v[m, i])
    return u, log_p


def eval_log_density(model: FittedDensityModel, test) -> np.ndarray:
    """Log predictive density, averaged over permutations on the density scale."""
    per_perm = np.stack([replay(model, test, m)[1] for m in range(model.M)])
    return logsumexp(per_perm, axis=0) - np.log(model.M)


def marginal_cdf_1d(model: FittedDensityModel, x) -> np.ndarray:
    """Permutation-averaged recursed CDF u_n(x) for univariate models."""
    if model.d != 1:
        raise ValueError("marginal_cdf_1d requires a univariate model")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    us = np.stack([replay(model, x[:, None], m)[0][:, 0] for m in range(model.M)])
    return us.mean(axis=0)


def prequential_nll(train, bandwidth: BandwidthModel, permutation: PermutationPair,
                    init_density: str = "normal") -> float:
    """-sum_i log p_{i-1}(x_i) over one fixed permutation of ``train``."""
    X, _ = _as_matrix(train)
    if X.shape[0] < 1:
        raise ValueError("training subset must be nonempty")
    Xp = X[permutation.sample_order][:, permutation.feature_order]
    _, preq = _fit_one_permutation(Xp, bandwidth, init_density)
    return float(-preq.sum())
