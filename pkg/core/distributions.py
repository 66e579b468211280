"""Generalized Pareto and standardized Generalized Extreme Value kernels.

Every function accepts a scalar or an array for the evaluation point and
returns the same shape back (a Python float for scalar input).  Values outside
the support clamp: cdfs go to 0/1, densities to 0, log-densities to -inf.

Random samples come from inversion of seeded uniforms.  The uniform stream is
numpy's ``Generator(PCG64(seed))``: PCG-XSL-RR 128/64 state transitions, each
double built as ``(next_uint64 >> 11) * 2**-53`` in [0, 1).  The same seed
therefore reproduces bit-identical samples on every platform numpy supports.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from config import DIST_CONFIG
from core.errors import DomainError, InvalidParameterError

logger = logging.getLogger(__name__)

XI_ZERO_TOL = DIST_CONFIG['xi_zero_tol']


@dataclass(frozen=True)
class GpdParams:
    xi: float    # shape
    beta: float  # scale, same units as the data

    @property
    def upper_endpoint(self) -> float:
        if self.xi < 0:
            return -self.beta / self.xi
        return math.inf


@dataclass(frozen=True)
class GevParams:
    gamma: float  # extreme value index


@dataclass(frozen=True)
class Moments:
    mean: float
    variance: float


def _unwrap(value, like):
    """Return a float when the caller passed a scalar."""
    if np.ndim(like) == 0:
        return float(value)
    return value


def _check_gpd(p: GpdParams, op: str):
    if not (p.beta > 0) or not math.isfinite(p.beta):
        raise InvalidParameterError(f"{op}: scale beta must be positive and finite, got {p.beta}")
    if not math.isfinite(p.xi):
        raise InvalidParameterError(f"{op}: shape xi must be finite, got {p.xi}")


def is_exponential_shape(xi: float) -> bool:
    return abs(xi) < XI_ZERO_TOL


def uniforms(n: int, seed: int) -> np.ndarray:
    """n doubles in [0, 1) from a freshly seeded PCG64 stream."""
    if n < 0:
        raise DomainError(f"uniforms: sample size must be >= 0, got {n}")
    return np.random.Generator(np.random.PCG64(seed)).random(n)


# Generalized Pareto

def gpd_cdf(p: GpdParams, x):
    """P(X <= x) for excesses X ~ GPD(xi, beta), exponential form when xi is near 0."""
    _check_gpd(p, 'gpd_cdf')
    x_arr = np.asarray(x, dtype=float)
    y = np.clip(x_arr, 0.0, None) / p.beta
    if is_exponential_shape(p.xi):
        out = -np.expm1(-y)
    else:
        z = p.xi * y
        inside = z > -1.0
        with np.errstate(divide='ignore', invalid='ignore'):
            out = np.where(inside, -np.expm1(-np.log1p(np.where(inside, z, 0.0)) / p.xi), 1.0)
    out = np.where(x_arr < 0, 0.0, out)
    return _unwrap(out, x)


def gpd_survival(p: GpdParams, x):
    """1 - gpd_cdf, computed directly so deep tails keep full relative precision."""
    _check_gpd(p, 'gpd_survival')
    x_arr = np.asarray(x, dtype=float)
    y = np.clip(x_arr, 0.0, None) / p.beta
    if is_exponential_shape(p.xi):
        out = np.exp(-y)
    else:
        z = p.xi * y
        inside = z > -1.0
        with np.errstate(divide='ignore', invalid='ignore'):
            out = np.where(inside, np.exp(-np.log1p(np.where(inside, z, 0.0)) / p.xi), 0.0)
    out = np.where(x_arr < 0, 1.0, out)
    return _unwrap(out, x)


def gpd_logpdf(p: GpdParams, x):
    _check_gpd(p, 'gpd_logpdf')
    x_arr = np.asarray(x, dtype=float)
    y = x_arr / p.beta
    with np.errstate(divide='ignore', invalid='ignore'):
        if is_exponential_shape(p.xi):
            out = -math.log(p.beta) - y
            out = np.where(x_arr >= 0, out, -np.inf)
        elif p.xi == -1.0:
            # uniform on [0, beta], endpoint included
            out = np.where((x_arr >= 0) & (y <= 1.0), -math.log(p.beta), -np.inf)
        else:
            z = p.xi * y
            inside = (x_arr >= 0) & (z > -1.0)
            log_term = np.log1p(np.where(inside, z, 0.0))
            out = np.where(inside, -math.log(p.beta) - (1.0 / p.xi + 1.0) * log_term, -np.inf)
    return _unwrap(out, x)


def gpd_pdf(p: GpdParams, x):
    _check_gpd(p, 'gpd_pdf')
    out = np.exp(np.asarray(gpd_logpdf(p, x), dtype=float))
    return _unwrap(out, x)


def gpd_quantile(p: GpdParams, q):
    """Inverse of gpd_cdf on [0, 1)."""
    _check_gpd(p, 'gpd_quantile')
    q_arr = np.asarray(q, dtype=float)
    if np.any(~np.isfinite(q_arr)) or np.any(q_arr < 0.0) or np.any(q_arr >= 1.0):
        raise DomainError(f"gpd_quantile: probabilities must lie in [0, 1), got {q}")
    log_surv = np.log1p(-q_arr)
    if is_exponential_shape(p.xi):
        unit = -log_surv
    else:
        unit = np.expm1(-p.xi * log_surv) / p.xi
    # beta multiplies last so that quantiles are exactly equivariant in scale
    return _unwrap(p.beta * unit, q)


def gpd_tail_quantile(p: GpdParams, u):
    """F^{-1}(1 - u) for survival probability u in (0, 1]."""
    _check_gpd(p, 'gpd_tail_quantile')
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr <= 0.0) or np.any(u_arr > 1.0):
        raise DomainError(f"gpd_tail_quantile: survival probabilities must lie in (0, 1], got {u}")
    if is_exponential_shape(p.xi):
        unit = -np.log(u_arr)
    else:
        unit = np.expm1(-p.xi * np.log(u_arr)) / p.xi
    return _unwrap(p.beta * unit, u)


def gpd_moments(p: GpdParams) -> Moments:
    _check_gpd(p, 'gpd_moments')
    xi, beta = p.xi, p.beta
    mean = beta / (1.0 - xi) if xi < 1.0 else math.inf
    if xi < 0.5:
        variance = beta ** 2 / ((1.0 - xi) ** 2 * (1.0 - 2.0 * xi))
    else:
        variance = math.inf
    return Moments(mean=mean, variance=variance)


def gpd_sample(p: GpdParams, n: int, seed: int) -> np.ndarray:
    _check_gpd(p, 'gpd_sample')
    return np.asarray(gpd_quantile(p, uniforms(n, seed)), dtype=float)


# Generalized Extreme Value (standardized)

def gev_cdf(g: GevParams, x):
    x_arr = np.asarray(x, dtype=float)
    if is_exponential_shape(g.gamma):
        out = np.exp(-np.exp(-x_arr))
    else:
        t = g.gamma * x_arr
        inside = t > -1.0
        with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
            inner = np.exp(-np.log1p(np.where(inside, t, 0.0)) / g.gamma)
            outside = 0.0 if g.gamma > 0 else 1.0
            out = np.where(inside, np.exp(-inner), outside)
    return _unwrap(out, x)


def gev_quantile(g: GevParams, q):
    q_arr = np.asarray(q, dtype=float)
    if np.any(~np.isfinite(q_arr)) or np.any(q_arr < 0.0) or np.any(q_arr >= 1.0):
        raise DomainError(f"gev_quantile: probabilities must lie in [0, 1), got {q}")
    with np.errstate(divide='ignore'):
        log_log = np.log(-np.log(q_arr))
    if is_exponential_shape(g.gamma):
        out = -log_log
    else:
        with np.errstate(over='ignore', invalid='ignore'):
            out = np.expm1(-g.gamma * log_log) / g.gamma
    return _unwrap(out, q)


def gev_sample(g: GevParams, n: int, seed: int) -> np.ndarray:
    return np.asarray(gev_quantile(g, uniforms(n, seed)), dtype=float)


def excess_params(p: GpdParams, u: float) -> GpdParams:
    """Parameters of X - u | X > u for X ~ GPD(p): same shape, scale beta + xi*u."""
    _check_gpd(p, 'excess_params')
    return GpdParams(xi=p.xi, beta=p.beta + p.xi * u)
