"""Generative sampling from a fitted predictive density.

Three routes: inverse-CDF sampling (bisection on the recursed conditional
CDFs), importance sampling with proposal p0, and sequential Monte Carlo that
reweights particles through the n update steps and resamples multinomially
whenever the effective sample size drops below half the particle count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import engine, mathcore
from .engine import FittedDensityModel, permutation_rng
from .mathcore import NumericFault

BRACKET_HALF_WIDTH = 10.0
MAX_BRACKET_DOUBLINGS = 8
CDF_TOL = 1e-6
_SAMPLING_STREAM = 10_000  # rng stream offset, disjoint from fit permutations


@dataclass
class ParticleSet:
    particles: np.ndarray  # (B, d)
    weights: np.ndarray  # (B,), nonnegative, not all zero

    def __post_init__(self):
        self.particles = np.atleast_2d(np.asarray(self.particles, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (self.particles.shape[0],):
            raise ValueError("one weight per particle required")
        if not np.all(np.isfinite(self.weights)) or np.any(self.weights < 0):
            raise ValueError("weights must be finite and nonnegative")
        if not np.any(self.weights > 0):
            raise ValueError("weights must not all be zero")

    @property
    def ess(self) -> float:
        return effective_sample_size(self.weights)


def effective_sample_size(weights) -> float:
    """ESS = (sum w)^2 / sum w^2, in [1, B]; scale invariant."""
    w = np.asarray(weights, dtype=float)
    return float(w.sum() ** 2 / np.sum(w * w))


# --- inverse-CDF sampling -----------------------------------------------------


def _bisect_cdf(cdf, u: float) -> float:
    """Solve cdf(x) = u by bisection, expanding the bracket as needed."""
    lo, hi = -BRACKET_HALF_WIDTH, BRACKET_HALF_WIDTH
    for _ in range(MAX_BRACKET_DOUBLINGS):
        if cdf(lo) <= u <= cdf(hi):
            break
        lo, hi = 2.0 * lo, 2.0 * hi
    else:
        raise NumericFault(f"target CDF value {u} not bracketed on [{lo}, {hi}]")
    x = 0.5 * (lo + hi)
    for _ in range(80):
        x = 0.5 * (lo + hi)
        f = cdf(x)
        if abs(f - u) <= CDF_TOL:
            break
        if f < u:
            lo = x
        else:
            hi = x
    return float(x)


def inverse_sample_1d(model: FittedDensityModel, u: float) -> float:
    """Quantile of the permutation-averaged predictive CDF (d = 1 models)."""
    if model.d != 1:
        raise ValueError("inverse_sample_1d requires a univariate model")
    if not 0.0 < u < 1.0:
        raise ValueError("u must lie strictly inside (0, 1)")
    return _bisect_cdf(lambda x: float(engine.marginal_cdf_1d(model, [x])[0]), u)


def inverse_sample(model: FittedDensityModel, u, m: int = 0) -> np.ndarray:
    """Coordinate-wise inverse sampling along permutation m's feature order.

    Solves x^j = P_n^{-1}(u^j | x^{1:j-1}) left to right in the permuted
    ordering; the result is returned in the original feature order. The
    conditional CDFs are ordering-specific, so one permutation is used per
    draw rather than an (ill-defined) average.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.shape != (model.d,):
        raise ValueError("u must supply one value per dimension")
    if np.any(u <= 0.0) or np.any(u >= 1.0):
        raise ValueError("u must lie strictly inside (0, 1)")
    perm = model.permutations[m]
    x_perm = np.zeros(model.d)  # coordinates in permuted order

    def conditional_cdf(j, t):
        point = x_perm.copy()
        point[j] = t
        # undo the permutation: replay permutes internally
        orig = np.empty(model.d)
        orig[perm.feature_order] = point
        uu, _ = engine.replay(model, orig[None, :], m)
        return float(uu[0, j])

    for j in range(model.d):
        x_perm[j] = _bisect_cdf(lambda t: conditional_cdf(j, t), float(u[j]))
    out = np.empty(model.d)
    out[perm.feature_order] = x_perm
    return out


# --- importance sampling and SMC ----------------------------------------------


def _draw_initial(model, rng, B):
    if model.init_density == "normal":
        return rng.standard_normal((B, model.d))
    if model.init_density == "uniform":
        return rng.uniform(-engine.UNIFORM_HALF_WIDTH, engine.UNIFORM_HALF_WIDTH,
                           size=(B, model.d))
    raise ValueError(f"unknown initial density {model.init_density!r}")


def importance_sample(model: FittedDensityModel, B: int = 1000, seed: int = 0) -> ParticleSet:
    """Draw z ~ p0, weight by p_n/p0, resample once; equally weighted output."""
    if B < 1:
        raise ValueError("B must be >= 1")
    rng = permutation_rng(seed, _SAMPLING_STREAM)
    z = _draw_initial(model, rng, B)
    log_w = engine.eval_log_density(model, z) - engine._init_log_pdf(z, model.init_density)
    w = np.exp(log_w - log_w.max())
    if not np.any(w > 0):
        raise NumericFault("all importance weights are zero")
    idx = rng.choice(B, size=B, replace=True, p=w / w.sum())
    return ParticleSet(particles=z[idx], weights=np.ones(B))


def _resample_indices(w, B, rng, scheme):
    p = w / w.sum()
    if scheme == "multinomial":
        return rng.choice(len(w), size=B, replace=True, p=p)
    if scheme == "systematic":
        positions = (rng.random() + np.arange(B)) / B
        return np.searchsorted(np.cumsum(p), positions)
    raise ValueError(f"unknown resampling scheme {scheme!r}")


def _replay_prefix(model, Zp, Xp, m, steps):
    """Conditional CDFs and log density after the first ``steps`` updates."""
    u = engine._init_cdf(Zp, model.init_density)
    log_p = engine._init_log_pdf(Zp, model.init_density)
    for i in range(steps):
        u, log_p = engine._update_block(
            u, log_p, Zp, Xp[i], i + 1, model.bandwidth, model.v[m, i]
        )
    return u, log_p


def smc_sample(
    model: FittedDensityModel,
    B: int = 1000,
    seed: int = 0,
    resample: str = "multinomial",
    moves: int = 1,
    move_scale: float = 0.5,
    events: list | None = None,
) -> ParticleSet:
    """Sequential Monte Carlo through the n update steps (one pass per
    permutation, each carrying ~B/M particles, pooled at the end).

    Particles start at p0 with unit weights; each step multiplies the weight
    by p_i(z)/p_{i-1}(z); when ESS < B_m/2 the pass resamples, resets its
    weights, and rejuvenates the duplicated particles with ``moves``
    random-walk Metropolis steps targeting the intermediate density p_i
    (set ``resample="none"`` to keep pure importance weights instead).
    Per-pass weights are normalized to equal total mass before pooling.
    When ``events`` is a list, each resampling event is appended as
    (pass index, step, triggering ESS).
    """
    if B < 2:
        raise ValueError("B must be >= 2")
    if moves < 0 or move_scale <= 0:
        raise ValueError("moves must be >= 0 and move_scale positive")
    counts = [B // model.M + (1 if m < B % model.M else 0) for m in range(model.M)]
    all_z, all_w = [], []
    for m in range(model.M):
        B_m = counts[m]
        if B_m == 0:
            continue
        rng = permutation_rng(seed, _SAMPLING_STREAM + m)
        z = _draw_initial(model, rng, B_m)
        w = np.ones(B_m)
        perm = model.permutations[m]
        Zp = z[:, perm.feature_order]
        Xp = model.train[perm.sample_order][:, perm.feature_order]
        u = engine._init_cdf(Zp, model.init_density)
        log_p = engine._init_log_pdf(Zp, model.init_density)
        for i in range(model.n):
            u, log_p_new = engine._update_block(
                u, log_p, Zp, Xp[i], i + 1, model.bandwidth, model.v[m, i]
            )
            w = w * np.exp(log_p_new - log_p)
            log_p = log_p_new
            if not np.any(w > 0) or not np.all(np.isfinite(w)):
                raise NumericFault("degenerate SMC weights", step=i + 1)
            ess = effective_sample_size(w)
            if resample != "none" and ess < 0.5 * B_m:
                if events is not None:
                    events.append((m, i + 1, ess))
                idx = _resample_indices(w, B_m, rng, resample)
                Zp, u, log_p = Zp[idx], u[idx], log_p[idx]
                w = np.ones(B_m)
                for _ in range(moves):
                    prop = Zp + move_scale * rng.standard_normal(Zp.shape)
                    u_prop, lp_prop = _replay_prefix(model, prop, Xp, m, i + 1)
                    accept = np.log(rng.random(B_m)) < lp_prop - log_p
                    Zp[accept] = prop[accept]
                    u[accept] = u_prop[accept]
                    log_p[accept] = lp_prop[accept]
        z = np.empty_like(Zp)
        z[:, perm.feature_order] = Zp
        all_z.append(z)
        # normalize per pass so every pass contributes equal total mass;
        # each targets the same p_n, but raw scales differ after resampling
        all_w.append(w * (B_m / w.sum()))
    return ParticleSet(particles=np.concatenate(all_z), weights=np.concatenate(all_w))
