"""Bandwidth parameterizations for the copula updates.

Five variants: a single constant correlation (r-bp), one per dimension
(rd-bp), RBF and rational-quadratic kernels over the autoregressive prefix
(ar-bp / ard-bp), and a masked neural embedder (arnet-bp). All variants
expose the same ``rho`` surface: the correlation used for dimension j is a
function of the first j - 1 coordinates of the two points being coupled,
with rho for j = 1 always equal to rho0.

Dimension indices refer to positions in the active (possibly permuted)
feature ordering; length scales and per-dimension rho0 attach to positions,
matching the formulas written for a fixed ordering.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.special import expit, logit

from .mathcore import RHO_MAX


@dataclass(frozen=True)
class ArNetWeights:
    """Weights of the masked autoregressive embedder.

    ``W`` (H x d) and ``b`` (H) are shared across output rows; row j of the
    latent output is ``V[j] @ tanh(W[:, :j-1] @ x[:j-1] + b)``, so row j is a
    function of the first j - 1 input coordinates only and row 1 is a
    constant.
    """

    W: np.ndarray
    b: np.ndarray
    V: np.ndarray  # (d, latent_width, H)

    def __post_init__(self):
        H, d = self.W.shape
        if self.b.shape != (H,):
            raise ValueError("bias shape mismatch")
        if self.V.shape[0] != d or self.V.shape[2] != H:
            raise ValueError("output weight shape mismatch")


@dataclass(frozen=True)
class Constant:
    rho0: float

    @property
    def dim(self):
        return None


@dataclass(frozen=True)
class PerDim:
    rho0: np.ndarray  # (d,)

    @property
    def dim(self):
        return len(self.rho0)


@dataclass(frozen=True)
class Rbf:
    rho0: float | np.ndarray  # scalar or (d,)
    ell: np.ndarray  # (d - 1,), length scale for prefix position kappa

    @property
    def dim(self):
        return len(self.ell) + 1


@dataclass(frozen=True)
class RationalQuadratic:
    rho0: float | np.ndarray
    ell: np.ndarray  # (d - 1,)
    gamma: float

    @property
    def dim(self):
        return len(self.ell) + 1


@dataclass(frozen=True)
class Net:
    rho0: float
    weights: ArNetWeights

    @property
    def dim(self):
        return self.weights.W.shape[1]


BandwidthModel = Constant | PerDim | Rbf | RationalQuadratic | Net


def _check_lengths(a, b, ell):
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    ell = np.atleast_1d(np.asarray(ell, dtype=float))
    if a.shape[-1] != b.shape[-1]:
        raise ValueError("point length mismatch")
    if ell.shape[-1] not in (1, a.shape[-1]):
        raise ValueError("length-scale length mismatch")
    if np.any(ell <= 0):
        raise ValueError("length scales must be positive")
    return a, b, ell


def rbf_kernel(a, b, ell):
    """k(a, b) = exp[-sum_k ((a_k - b_k) / ell_k)^2], in (0, 1]."""
    a, b, ell = _check_lengths(a, b, ell)
    return np.exp(-np.sum(((a - b) / ell) ** 2, axis=-1))


def rq_kernel(a, b, ell, gamma):
    """Rational quadratic kernel (1 + sum_k ((a_k-b_k)/ell_k)^2 / (2 gamma))^(-gamma)."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    a, b, ell = _check_lengths(a, b, ell)
    sq = np.sum(((a - b) / ell) ** 2, axis=-1)
    return (1.0 + sq / (2.0 * gamma)) ** (-gamma)


def arnet_latents(weights: ArNetWeights, x) -> np.ndarray:
    """Latent rows Z (d x latent_width); row j sees only x[: j - 1]."""
    x = np.asarray(x, dtype=float)
    H, d = weights.W.shape
    pre = weights.b[None, :] + np.cumsum(
        np.vstack([np.zeros(H), weights.W.T * x[:, None]]), axis=0
    )[:d]  # row j (0-based) uses W[:, :j] @ x[:j]
    hidden = np.tanh(pre)  # (d, H)
    return np.einsum("jph,jh->jp", weights.V, hidden)


def _arnet_latents_matrix(weights: ArNetWeights, X) -> np.ndarray:
    """Latents for a batch: (k, d, latent_width)."""
    X = np.asarray(X, dtype=float)
    k, d = X.shape
    H = weights.W.shape[0]
    contrib = X[:, :, None] * weights.W.T[None, :, :]  # (k, d, H)
    pre = weights.b[None, None, :] + np.concatenate(
        [np.zeros((k, 1, H)), np.cumsum(contrib, axis=1)[:, :-1]], axis=1
    )
    hidden = np.tanh(pre)
    return np.einsum("jph,kjh->kjp", weights.V, hidden)


def init_net(d, hidden=16, latent=4, rng=None) -> ArNetWeights:
    """Truncated-normal initialization scaled by fan-in."""
    rng = np.random.default_rng(rng)

    def trunc(shape, fan_in):
        scale = 1.0 / np.sqrt(max(fan_in, 1))
        out = rng.standard_normal(shape)
        # resample outside 2 sigma
        mask = np.abs(out) > 2.0
        while np.any(mask):
            out[mask] = rng.standard_normal(mask.sum())
            mask = np.abs(out) > 2.0
        return out * scale

    return ArNetWeights(
        W=trunc((hidden, d), d),
        b=np.zeros(hidden),
        V=trunc((d, latent, hidden), hidden),
    )


def _rho0_vector(model, d):
    rho0 = np.asarray(model.rho0, dtype=float)
    if rho0.ndim == 0:
        return np.full(d, float(rho0))
    if rho0.shape != (d,):
        raise ValueError("per-dimension rho0 length mismatch")
    return rho0


def rho_matrix(model: BandwidthModel, X, x_other) -> np.ndarray:
    """Correlations rho^j for all dimensions j = 1..d, batched over rows of X.

    ``X`` is (k, d) and ``x_other`` is (d,), both in the active feature
    ordering. Returns (k, d); column 0 is always rho0 (empty prefix).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    x_other = np.asarray(x_other, dtype=float)
    k, d = X.shape
    rho0 = _rho0_vector(model, d)

    if isinstance(model, (Constant, PerDim)):
        return np.broadcast_to(rho0, (k, d)).copy()

    if isinstance(model, (Rbf, RationalQuadratic)):
        if model.dim != d:
            raise ValueError("bandwidth dimension mismatch")
        diff = X - x_other[None, :]
        sq = (diff[:, :-1] / model.ell[None, :]) ** 2  # prefix positions 1..d-1
        cum = np.concatenate([np.zeros((k, 1)), np.cumsum(sq, axis=1)], axis=1)
        if isinstance(model, Rbf):
            return rho0[None, :] * np.exp(-cum)
        return rho0[None, :] * (1.0 + cum / (2.0 * model.gamma)) ** (-model.gamma)

    if isinstance(model, Net):
        if model.dim != d:
            raise ValueError("bandwidth dimension mismatch")
        Z = _arnet_latents_matrix(model.weights, X)  # (k, d, p)
        z_other = arnet_latents(model.weights, x_other)  # (d, p)
        sq = np.sum((Z - z_other[None, :, :]) ** 2, axis=2)  # (k, d)
        cum = np.concatenate([np.zeros((k, 1)), np.cumsum(sq[:, :-1], axis=1)], axis=1)
        return rho0[None, :] * np.exp(-cum)

    raise TypeError(f"unknown bandwidth model {type(model)!r}")


def rho(model: BandwidthModel, j, x_prefix, x_other_prefix):
    """Correlation for dimension j (1-indexed) given the two j-1 prefixes."""
    x_prefix = np.atleast_1d(np.asarray(x_prefix, dtype=float))
    x_other_prefix = np.atleast_1d(np.asarray(x_other_prefix, dtype=float))
    if len(x_prefix) != j - 1 or len(x_other_prefix) != j - 1:
        raise ValueError("prefix length must be j - 1")
    d = model.dim or j
    if j < 1 or j > d:
        raise ValueError("dimension index out of range")
    pad = d - (j - 1)
    a = np.concatenate([x_prefix, np.zeros(pad)])
    b = np.concatenate([x_other_prefix, np.zeros(pad)])
    return float(rho_matrix(model, a[None, :], b)[0, j - 1])


MODEL_KINDS = ("r-bp", "rd-bp", "ar-bp", "ard-bp", "arnet-bp")


def kind_name(model: BandwidthModel) -> str:
    """Variant name of an instantiated bandwidth model."""
    if isinstance(model, Constant):
        return "r-bp"
    if isinstance(model, PerDim):
        return "rd-bp"
    if isinstance(model, (Rbf, RationalQuadratic)):
        return "ar-bp" if np.asarray(model.rho0).ndim == 0 else "ard-bp"
    if isinstance(model, Net):
        return "arnet-bp"
    raise TypeError(f"unknown bandwidth model {type(model)!r}")


def make_model(kind: str, d: int, kernel: str = "rbf", rho0: float = 0.9,
               hidden: int = 16, latent: int = 4, seed: int = 0) -> BandwidthModel:
    """Default-initialized bandwidth model for a named variant.

    rho0 = 0.9 and unit length scales throughout; arnet weights are seeded.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    if kind == "r-bp":
        return Constant(rho0=rho0)
    if kind == "rd-bp":
        return PerDim(rho0=np.full(d, rho0))
    if kind in ("ar-bp", "ard-bp"):
        if d == 1:
            return Constant(rho0=rho0)  # no prefix to condition on
        r0 = rho0 if kind == "ar-bp" else np.full(d, rho0)
        if kernel == "rbf":
            return Rbf(rho0=r0, ell=np.ones(d - 1))
        if kernel == "rq":
            return RationalQuadratic(rho0=r0, ell=np.ones(d - 1), gamma=1.0)
        raise ValueError(f"unknown kernel {kernel!r}")
    if kind == "arnet-bp":
        return Net(rho0=rho0, weights=init_net(d, hidden=hidden, latent=latent,
                                               rng=np.random.default_rng(seed)))
    raise ValueError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")


# --- constrained <-> unconstrained transforms -------------------------------
#
# rho0 maps through a RHO_MAX-scaled logit, length scales and gamma through
# log/exp, and net weights pass through unchanged.


def _rho0_to_unc(rho0):
    return logit(np.asarray(rho0, dtype=float) / RHO_MAX)


def _rho0_from_unc(t):
    return RHO_MAX * expit(np.asarray(t, dtype=float))


def to_unconstrained(model: BandwidthModel) -> np.ndarray:
    parts = [np.atleast_1d(_rho0_to_unc(model.rho0))]
    if isinstance(model, (Rbf, RationalQuadratic)):
        parts.append(np.log(model.ell))
    if isinstance(model, RationalQuadratic):
        parts.append(np.atleast_1d(np.log(model.gamma)))
    if isinstance(model, Net):
        w = model.weights
        parts += [w.W.ravel(), w.b.ravel(), w.V.ravel()]
    return np.concatenate(parts)


def from_unconstrained(vec, template: BandwidthModel) -> BandwidthModel:
    """Rebuild a model of the same variant/shapes as ``template`` from ``vec``."""
    vec = np.asarray(vec, dtype=float)
    if vec.shape != to_unconstrained(template).shape:
        raise ValueError("parameter vector shape mismatch")
    nr = np.atleast_1d(np.asarray(template.rho0)).shape[0]
    rho0 = _rho0_from_unc(vec[:nr])
    if np.asarray(template.rho0).ndim == 0:
        rho0 = float(rho0[0])
    pos = nr
    if isinstance(template, Constant):
        return Constant(rho0=rho0)
    if isinstance(template, PerDim):
        return PerDim(rho0=rho0)
    if isinstance(template, (Rbf, RationalQuadratic)):
        ne = len(template.ell)
        ell = np.exp(vec[pos:pos + ne])
        pos += ne
        if isinstance(template, Rbf):
            return Rbf(rho0=rho0, ell=ell)
        gamma = float(np.exp(vec[pos]))
        return RationalQuadratic(rho0=rho0, ell=ell, gamma=gamma)
    if isinstance(template, Net):
        w = template.weights
        nW, nb, nV = w.W.size, w.b.size, w.V.size
        W = vec[pos:pos + nW].reshape(w.W.shape)
        b = vec[pos + nW:pos + nW + nb]
        V = vec[pos + nW + nb:pos + nW + nb + nV].reshape(w.V.shape)
        return replace(template, rho0=rho0, weights=ArNetWeights(W=W, b=b, V=V))
    raise TypeError(f"unknown bandwidth model {type(template)!r}")
