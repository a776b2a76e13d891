"""Scalar probability primitives for the copula recursions.

Everything here is a pure function of its arguments and vectorizes over
numpy arrays. Density-like quantities are computed in the log domain and
only exponentiated on demand.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtr, ndtri

# CDF values are clamped away from {0, 1} so that the normal quantile stays
# finite, and correlations away from 1 so that 1 - rho^2 never vanishes.
EPS_U = 1e-6
RHO_MAX = 0.999

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


class NumericFault(RuntimeError):
    """Non-finite value produced inside a recursion.

    Carries the recursion step index when known so that faults can be
    localized in long prequential passes.
    """

    def __init__(self, message, step=None):
        if step is not None:
            message = f"{message} (at step {step})"
        super().__init__(message)
        self.step = step


def clamp_unit(u):
    """Clamp CDF values into [EPS_U, 1 - EPS_U]."""
    return np.clip(u, EPS_U, 1.0 - EPS_U)


def clamp_rho(rho):
    """Clamp a correlation into [-RHO_MAX, RHO_MAX]."""
    return np.clip(rho, -RHO_MAX, RHO_MAX)


def std_normal_cdf(x):
    """Standard normal CDF Phi(x)."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("std_normal_cdf requires finite input")
    return ndtr(x)


def std_normal_log_pdf(x):
    x = np.asarray(x, dtype=float)
    return -0.5 * x * x - _LOG_SQRT_2PI


def std_normal_quantile(p):
    """Inverse standard normal CDF for p strictly inside (0, 1)."""
    p = np.asarray(p, dtype=float)
    if not np.all((p > 0.0) & (p < 1.0)):
        raise ValueError("std_normal_quantile requires p in (0, 1)")
    return ndtri(p)


def alpha(i):
    """Update weight alpha_i = (2 - 1/i) / (i + 1) for step i >= 1."""
    i = np.asarray(i)
    if np.any(i < 1):
        raise ValueError("step index must be >= 1")
    i = i.astype(float)
    return (2.0 - 1.0 / i) / (i + 1.0)


def log_copula_density(u, v, rho):
    """Log bivariate Gaussian copula density log c(u, v; rho).

    With a = Phi^{-1}(u), b = Phi^{-1}(v):

        log c = -0.5 log(1 - rho^2) + (2 rho a b - rho^2 (a^2 + b^2))
                / (2 (1 - rho^2))
    """
    u = clamp_unit(np.asarray(u, dtype=float))
    v = clamp_unit(np.asarray(v, dtype=float))
    rho = clamp_rho(np.asarray(rho, dtype=float))
    a = ndtri(u)
    b = ndtri(v)
    om = 1.0 - rho * rho
    return -0.5 * np.log(om) + (2.0 * rho * a * b - rho * rho * (a * a + b * b)) / (2.0 * om)


def copula_density(u, v, rho):
    """Bivariate Gaussian copula density c(u, v; rho) (strictly positive)."""
    out = np.exp(log_copula_density(u, v, rho))
    if not np.all(np.isfinite(out)):
        raise NumericFault("copula density overflowed")
    return out


def copula_conditional_cdf(u, v, rho):
    """Conditional Gaussian copula CDF H(u, v; rho) = int_0^u c(u', v; rho) du'.

    Closed form: Phi{(Phi^{-1}(u) - rho Phi^{-1}(v)) / sqrt(1 - rho^2)}.
    """
    u = clamp_unit(np.asarray(u, dtype=float))
    v = clamp_unit(np.asarray(v, dtype=float))
    rho = clamp_rho(np.asarray(rho, dtype=float))
    a = ndtri(u)
    b = ndtri(v)
    return clamp_unit(ndtr((a - rho * b) / np.sqrt(1.0 - rho * rho)))
