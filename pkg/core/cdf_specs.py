"""Built-in CdfSpec registry addressed by name, e.g. ``pareto:2`` or ``gpd:0.3,1``."""
from __future__ import annotations

import math

import numpy as np
from scipy import stats

from core.distributions import (
    GpdParams, gpd_cdf, gpd_pdf, gpd_quantile, gpd_survival, gpd_tail_quantile,
)
from core.doa import CdfSpec
from core.errors import InvalidInputError, InvalidParameterError


def exponential_spec(rate: float = 1.0) -> CdfSpec:
    if not rate > 0:
        raise InvalidParameterError(f"exponential: rate must be positive, got {rate}")
    return CdfSpec(
        name=f'exponential:{rate:g}',
        cdf=lambda x: -math.expm1(-rate * max(x, 0.0)),
        survival=lambda x: math.exp(-rate * max(x, 0.0)),
        quantile=lambda q: -math.log1p(-q) / rate,
        tail_quantile=lambda u: -math.log(u) / rate,
        tail_quantile_derivative=lambda u: -1.0 / (rate * u),
        hazard=lambda x: rate if x >= 0 else 0.0,
        derivative=lambda x: rate * math.exp(-rate * x) if x >= 0 else 0.0,
        second_derivative=lambda x: -rate * rate * math.exp(-rate * x) if x >= 0 else 0.0,
        lep=0.0,
    )


def pareto_spec(alpha: float) -> CdfSpec:
    """Standard Pareto on [1, inf): S(x) = x^-alpha."""
    if not alpha > 0:
        raise InvalidParameterError(f"pareto: alpha must be positive, got {alpha}")
    return CdfSpec(
        name=f'pareto:{alpha:g}',
        cdf=lambda x: 1.0 - x ** -alpha if x >= 1.0 else 0.0,
        survival=lambda x: x ** -alpha if x >= 1.0 else 1.0,
        quantile=lambda q: (1.0 - q) ** (-1.0 / alpha),
        tail_quantile=lambda u: u ** (-1.0 / alpha),
        tail_quantile_derivative=lambda u: -(1.0 / alpha) * u ** (-1.0 / alpha - 1.0),
        hazard=lambda x: alpha / x if x >= 1.0 else 0.0,
        derivative=lambda x: alpha * x ** (-alpha - 1.0) if x >= 1.0 else 0.0,
        second_derivative=lambda x: -alpha * (alpha + 1.0) * x ** (-alpha - 2.0) if x >= 1.0 else 0.0,
        lep=1.0,
    )


def uniform_spec() -> CdfSpec:
    return CdfSpec(
        name='uniform',
        cdf=lambda x: min(max(x, 0.0), 1.0),
        survival=lambda x: 1.0 - min(max(x, 0.0), 1.0),
        quantile=lambda q: q,
        tail_quantile=lambda u: 1.0 - u,
        tail_quantile_derivative=lambda u: -1.0,
        derivative=lambda x: 1.0 if 0.0 <= x <= 1.0 else 0.0,
        second_derivative=lambda x: 0.0,
        lep=0.0,
        uep=1.0,
    )


def normal_spec() -> CdfSpec:
    norm = stats.norm
    return CdfSpec(
        name='normal',
        cdf=lambda x: float(norm.cdf(x)),
        survival=lambda x: float(norm.sf(x)),
        quantile=lambda q: float(norm.ppf(q)),
        tail_quantile=lambda u: float(norm.isf(u)),
        tail_quantile_derivative=lambda u: -1.0 / float(norm.pdf(norm.isf(u))),
        derivative=lambda x: float(norm.pdf(x)),
        second_derivative=lambda x: -x * float(norm.pdf(x)),
    )


def lognormal_spec(mu: float = 0.0, sigma: float = 1.0) -> CdfSpec:
    if not sigma > 0:
        raise InvalidParameterError(f"lognormal: sigma must be positive, got {sigma}")
    dist = stats.lognorm(s=sigma, scale=math.exp(mu))

    def pdf(x):
        return float(dist.pdf(x)) if x > 0 else 0.0

    def pdf_prime(x):
        if x <= 0:
            return 0.0
        return -pdf(x) * (1.0 + (math.log(x) - mu) / sigma ** 2) / x

    return CdfSpec(
        name=f'lognormal:{mu:g},{sigma:g}',
        cdf=lambda x: float(dist.cdf(x)),
        survival=lambda x: float(dist.sf(x)),
        quantile=lambda q: float(dist.ppf(q)),
        tail_quantile=lambda u: float(dist.isf(u)),
        tail_quantile_derivative=lambda u: -1.0 / pdf(float(dist.isf(u))),
        derivative=pdf,
        second_derivative=pdf_prime,
        lep=0.0,
    )


def gpd_spec(xi: float, beta: float = 1.0) -> CdfSpec:
    p = GpdParams(xi=xi, beta=beta)

    def pdf_prime(x):
        if x < 0 or x > p.upper_endpoint:
            return 0.0
        return -(1.0 + xi) / beta * gpd_pdf(p, x) / (1.0 + xi * x / beta)

    def hazard(x):
        if x < 0 or x >= p.upper_endpoint:
            return 0.0
        return 1.0 / (beta + xi * x)

    return CdfSpec(
        name=f'gpd:{xi:g},{beta:g}',
        cdf=lambda x: gpd_cdf(p, x),
        survival=lambda x: gpd_survival(p, x),
        quantile=lambda q: gpd_quantile(p, q),
        tail_quantile=lambda u: gpd_tail_quantile(p, u),
        tail_quantile_derivative=lambda u: -beta * u ** (-xi - 1.0),
        hazard=hazard,
        derivative=lambda x: gpd_pdf(p, x),
        second_derivative=pdf_prime,
        lep=0.0,
        uep=p.upper_endpoint,
    )


SPEC_BUILDERS = {
    'exponential': (exponential_spec, (0, 1)),
    'pareto': (pareto_spec, (1, 1)),
    'uniform': (uniform_spec, (0, 0)),
    'normal': (normal_spec, (0, 0)),
    'gpd': (gpd_spec, (1, 2)),
    'lognormal': (lognormal_spec, (0, 2)),
}


def build_spec(text: str) -> CdfSpec:
    """Parse ``name[:p1,p2]`` into a CdfSpec."""
    name, _, args = text.strip().partition(':')
    name = name.lower()
    if name not in SPEC_BUILDERS:
        raise InvalidInputError(f"build_spec: unknown distribution '{name}'; "
                                f"choose from {', '.join(sorted(SPEC_BUILDERS))}")
    builder, (min_args, max_args) = SPEC_BUILDERS[name]
    try:
        values = [float(v) for v in args.split(',')] if args else []
    except ValueError:
        raise InvalidInputError(f"build_spec: parameters of '{text}' are not numbers") from None
    if not min_args <= len(values) <= max_args or not all(np.isfinite(values)):
        raise InvalidInputError(f"build_spec: '{name}' takes {min_args} to {max_args} finite parameters")
    return builder(*values)
