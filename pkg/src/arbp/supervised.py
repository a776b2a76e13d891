"""Conditional prediction: regression and binary classification.

Both tasks couple the response to a new observation through a single weight

    beta_i(x, x_i) = a_i * C / (1 - a_i + a_i * C),
    C = prod_{j=1}^d c(Phi(x^j), Phi(x_i^j); rho^j),

where the covariate marginals stay fixed at Phi (covariates are standardized)
and rho^j comes from the same autoregressive bandwidth surface as in the
joint model, extended by one position for the response: rho_y = rho^{d+1} is
the kernel over all d covariates. Regression updates the response CDF with
the conditional Gaussian copula H; classification replaces the copula density
with the beta-Bernoulli factor b, which preserves p(1|x) + p(0|x) = 1 exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logsumexp

from . import mathcore
from .bandwidth import BandwidthModel, rho_matrix
from .data import StandardizationRecord, standardize_array
from .engine import PermutationPair, permutation_rng
from .mathcore import NumericFault, alpha, clamp_unit


@dataclass
class SupervisedModel:
    bandwidth: BandwidthModel  # over d + 1 positions: d covariates, then y
    train_x: np.ndarray  # standardized covariates (n, d), original ordering
    train_y: np.ndarray  # standardized responses (regression) or 0/1 labels
    permutations: list[PermutationPair]  # sample + covariate-feature orders
    v_y: np.ndarray  # (M, n): prequential response CDFs / label probabilities
    task: str  # "regression" | "classification"
    seed: int
    x_record: StandardizationRecord | None = None
    y_mean: float = 0.0
    y_sd: float = 1.0

    @property
    def M(self):
        return self.v_y.shape[0]

    @property
    def n(self):
        return self.train_x.shape[0]

    @property
    def d(self):
        return self.train_x.shape[1]


def _augmented_rho(bandwidth, Xp_query, x_i):
    """rho columns (k, d+1) for permuted covariates plus the response slot.

    The response correlation rho_y only depends on the d-covariate prefix, so
    a zero column stands in for the (never-read) response coordinate.
    """
    k = Xp_query.shape[0]
    Xa = np.concatenate([Xp_query, np.zeros((k, 1))], axis=1)
    xa = np.concatenate([x_i, [0.0]])
    return rho_matrix(bandwidth, Xa, xa)


def _beta_and_rho_y(Xp_query, x_i, bandwidth, i):
    """(beta (k,), rho_y (k,)) for query covariate rows against x_i at step i."""
    rho = _augmented_rho(bandwidth, Xp_query, x_i)
    u_cov = clamp_unit(mathcore.std_normal_cdf(Xp_query))
    v_cov = clamp_unit(mathcore.std_normal_cdf(x_i))
    logc = mathcore.log_copula_density(u_cov, v_cov[None, :], rho[:, :-1])
    a = float(alpha(i))
    beta = expit(np.log(a) - np.log1p(-a) + logc.sum(axis=1))
    return beta, rho[:, -1]


def beta_weight(x, x_i, bandwidth, i) -> float:
    """Stick-breaking coupling weight beta_i(x, x_i) in (0, 1)."""
    x = np.asarray(x, dtype=float)
    x_i = np.asarray(x_i, dtype=float)
    beta, _ = _beta_and_rho_y(x[None, :], x_i, bandwidth, i)
    return float(beta[0])


def bernoulli_b(q, r, rho, same_label) -> np.ndarray:
    """Beta-Bernoulli copula factor b{q, r; rho}; >= 1 - rho everywhere."""
    q = np.asarray(q, dtype=float)
    r = np.asarray(r, dtype=float)
    rho = np.asarray(rho, dtype=float)
    ratio = np.where(same_label, np.minimum(q, r), q - np.minimum(q, 1.0 - r))
    return 1.0 - rho + rho * ratio / (q * r)


# --- regression --------------------------------------------------------------


def _regression_update(u_y, log_p, Xp_query, x_i, v_yi, bandwidth, i):
    """One response-CDF/density update, vectorized over query rows."""
    beta, rho_y = _beta_and_rho_y(Xp_query, x_i, bandwidth, i)
    logc_y = mathcore.log_copula_density(u_y, v_yi, rho_y)
    H = mathcore.copula_conditional_cdf(u_y, v_yi, rho_y)
    u_new = clamp_unit((1.0 - beta) * u_y + beta * H)
    log_p_new = log_p + np.logaddexp(np.log1p(-beta), np.log(beta) + logc_y)
    if not (np.all(np.isfinite(u_new)) and np.all(np.isfinite(log_p_new))):
        raise NumericFault("non-finite value in regression update", step=i)
    return u_new, log_p_new


def fit_regression(X, y, bandwidth: BandwidthModel, M: int = 10, seed: int = 0) -> SupervisedModel:
    """Prequential fit of the conditional density p(y | x).

    ``X`` and ``y`` are raw arrays; both are standardized internally with
    their own statistics. ``bandwidth`` spans d + 1 positions.
    """
    Xs = standardize_array(X)
    y = np.asarray(y, dtype=float)
    if y.shape != (Xs.n,):
        raise ValueError("y must be a length-n vector")
    y_mean, y_sd = float(y.mean()), float(y.std())
    y_sd = y_sd if y_sd > 0 else 1.0
    ys = (y - y_mean) / y_sd
    n, d = Xs.n, Xs.d

    perms, v_y = [], np.empty((M, n))
    for m in range(M):
        rng = permutation_rng(seed, m)
        perm = PermutationPair(rng.permutation(n), rng.permutation(d))
        Xp = Xs.values[perm.sample_order][:, perm.feature_order]
        yp = ys[perm.sample_order]
        u = clamp_unit(mathcore.std_normal_cdf(yp))
        log_p = mathcore.std_normal_log_pdf(yp)
        for i in range(n):
            v_y[m, i] = u[i]
            if i + 1 < n:
                u[i + 1:], log_p[i + 1:] = _regression_update(
                    u[i + 1:], log_p[i + 1:], Xp[i + 1:], Xp[i], u[i], bandwidth, i + 1
                )
        perms.append(perm)
    return SupervisedModel(
        bandwidth=bandwidth, train_x=Xs.values, train_y=ys, permutations=perms,
        v_y=v_y, task="regression", seed=seed, x_record=Xs.record,
        y_mean=y_mean, y_sd=y_sd,
    )


def _replay_regression(model: SupervisedModel, Xq, yq, m: int):
    """Final (u_y, log_p) for standardized queries under permutation m."""
    perm = model.permutations[m]
    Xqp = Xq[:, perm.feature_order]
    Xp = model.train_x[perm.sample_order][:, perm.feature_order]
    u = clamp_unit(mathcore.std_normal_cdf(yq))
    log_p = mathcore.std_normal_log_pdf(yq)
    for i in range(model.n):
        u, log_p = _regression_update(u, log_p, Xqp, Xp[i], model.v_y[m, i],
                                      model.bandwidth, i + 1)
    return u, log_p


def predict_log_density_regression(model: SupervisedModel, x, y) -> np.ndarray:
    """log p_n(y | x) on the original response scale.

    ``x`` is (d,) or (k, d) raw covariates, ``y`` scalar or (k,) raw
    responses; returns (k,) log densities (Jacobian-corrected by -log sd_y).
    """
    if model.task != "regression":
        raise ValueError("model was fit for classification")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if model.x_record is not None:
        x = (x - model.x_record.mean) / model.x_record.sd
    ys = (y - model.y_mean) / model.y_sd
    per_perm = np.stack([
        _replay_regression(model, x, ys, m)[1] for m in range(model.M)
    ])
    return logsumexp(per_perm, axis=0) - np.log(model.M) - np.log(model.y_sd)


# --- classification ----------------------------------------------------------


def _classification_update(q, Xp_query, x_i, y_i, r_i, bandwidth, i):
    """Update q = p(1 | x) for all query rows given labeled point (x_i, y_i)."""
    beta, rho_y = _beta_and_rho_y(Xp_query, x_i, bandwidth, i)
    b1 = bernoulli_b(q, r_i, rho_y, same_label=(y_i == 1))
    q_new = (1.0 - beta + beta * b1) * q
    if not np.all(np.isfinite(q_new)):
        raise NumericFault("non-finite value in classification update", step=i)
    return np.clip(q_new, 0.0, 1.0)


def fit_classification(X, y, bandwidth: BandwidthModel, M: int = 10, seed: int = 0) -> SupervisedModel:
    """Prequential fit of p(y = 1 | x) for binary labels; q0 = 0.5."""
    Xs = standardize_array(X)
    y = np.asarray(y)
    if y.shape != (Xs.n,) or not np.isin(y, (0, 1)).all():
        raise ValueError("y must be a length-n vector of 0/1 labels")
    y = y.astype(int)
    n, d = Xs.n, Xs.d

    perms, v_y = [], np.empty((M, n))
    for m in range(M):
        rng = permutation_rng(seed, m)
        perm = PermutationPair(rng.permutation(n), rng.permutation(d))
        Xp = Xs.values[perm.sample_order][:, perm.feature_order]
        yp = y[perm.sample_order]
        q = np.full(n, 0.5)
        for i in range(n):
            # r_{i-1} = p_{i-1}(y_i | x_i), the observed label's probability
            r_i = q[i] if yp[i] == 1 else 1.0 - q[i]
            v_y[m, i] = r_i
            if i + 1 < n:
                q[i + 1:] = _classification_update(
                    q[i + 1:], Xp[i + 1:], Xp[i], yp[i], r_i, bandwidth, i + 1
                )
        perms.append(perm)
    return SupervisedModel(
        bandwidth=bandwidth, train_x=Xs.values, train_y=y.astype(float),
        permutations=perms, v_y=v_y, task="classification", seed=seed,
        x_record=Xs.record,
    )


def _replay_classification(model: SupervisedModel, Xq, m: int):
    perm = model.permutations[m]
    Xqp = Xq[:, perm.feature_order]
    Xp = model.train_x[perm.sample_order][:, perm.feature_order]
    yp = model.train_y[perm.sample_order].astype(int)
    q = np.full(Xq.shape[0], 0.5)
    for i in range(model.n):
        q = _classification_update(q, Xqp, Xp[i], yp[i], model.v_y[m, i],
                                   model.bandwidth, i + 1)
    return q


def predict_proba(model: SupervisedModel, x) -> np.ndarray:
    """p_n(y = 1 | x), permutation-averaged; x is (d,) or (k, d) raw."""
    if model.task != "classification":
        raise ValueError("model was fit for regression")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if model.x_record is not None:
        x = (x - model.x_record.mean) / model.x_record.sd
    qs = np.stack([_replay_classification(model, x, m) for m in range(model.M)])
    return qs.mean(axis=0)
