"""Tail probability, VaR, expected shortfall and return levels from a GPD anchored at u.

Above the threshold the survival function is estimated as

    S(y) = (n_u / n) * (1 + xi (y - u) / beta) ** (-1 / xi)

and every quantity here is an exact algebraic consequence of that formula.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from config import RISK_CONFIG
from core.distributions import GpdParams, gpd_survival, is_exponential_shape
from core.errors import BelowThresholdError, DomainError, InvalidParameterError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TailModel:
    u: float
    xi: float
    beta: float
    n: int
    n_u: int

    def __post_init__(self):
        if not (self.beta > 0) or not math.isfinite(self.beta):
            raise InvalidParameterError(f"TailModel: beta must be positive, got {self.beta}")
        if not 0 < self.n_u <= self.n:
            raise InvalidParameterError(f"TailModel: need 0 < n_u <= n, got n_u={self.n_u}, n={self.n}")

    @classmethod
    def from_fit(cls, fit) -> 'TailModel':
        return cls(u=fit.threshold, xi=fit.params.xi, beta=fit.params.beta,
                   n=fit.n_total, n_u=fit.n_exceed)

    @property
    def p_u(self) -> float:
        return self.n_u / self.n

    @property
    def params(self) -> GpdParams:
        return GpdParams(xi=self.xi, beta=self.beta)

    @property
    def upper_endpoint(self) -> float:
        return self.u + self.params.upper_endpoint


@dataclass(frozen=True)
class RiskEstimates:
    q: float
    var_q: float
    es_q: float


def tail_prob(m: TailModel, y: float) -> float:
    """P(Y > y) for y at or above the threshold."""
    if y < m.u:
        raise BelowThresholdError(f"tail_prob: y={y} lies below the threshold u={m.u}")
    return m.p_u * gpd_survival(m.params, y - m.u)


def _excess_quantile(m: TailModel, ratio: float) -> float:
    """Excess over u whose GPD survival equals ratio, ratio in (0, 1]."""
    log_ratio = math.log(ratio)
    if is_exponential_shape(m.xi):
        return -m.beta * log_ratio
    return m.beta * math.expm1(-m.xi * log_ratio) / m.xi


def var_q(m: TailModel, q: float) -> float:
    """Value at risk: the q-quantile of the claim distribution, q in (0, 1]."""
    if not 0.0 < q <= 1.0 or math.isnan(q):
        raise DomainError(f"var_q: q must lie in (0, 1], got {q}")
    if q <= 1.0 - m.p_u:
        raise BelowThresholdError(
            f"var_q: q={q} does not exceed 1 - n_u/n = {1.0 - m.p_u:.6g}; the quantile lies below u")
    if q == 1.0:
        return m.upper_endpoint
    return m.u + _excess_quantile(m, (1.0 - q) / m.p_u)


def es_q(m: TailModel, q: float) -> float:
    """Expected shortfall: mean claim size beyond var_q."""
    value_at_risk = var_q(m, q)
    if m.xi >= 1.0:
        return math.inf
    if math.isinf(value_at_risk):
        return math.inf
    return (value_at_risk + m.beta - m.xi * m.u) / (1.0 - m.xi)


def return_level(m: TailModel, r: float, period_count: float) -> float:
    """Level exceeded on average once every period_count periods of r observations."""
    if not r > 0 or not period_count > 0:
        raise DomainError(f"return_level: r and period_count must be positive, got {r}, {period_count}")
    ratio = 1.0 / (r * period_count * m.p_u)
    if ratio > 1.0:
        raise BelowThresholdError(
            f"return_level: a {period_count}-period level with r={r} lies below the threshold")
    return m.u + _excess_quantile(m, ratio)


def risk_table(m: TailModel, qs=None) -> list[RiskEstimates]:
    qs = RISK_CONFIG['q_list'] if qs is None else qs
    return [RiskEstimates(q=q, var_q=var_q(m, q), es_q=es_q(m, q)) for q in qs]
