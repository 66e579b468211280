"""Sample L-moments from unbiased probability-weighted moments.

The estimator works on the ascending order statistics x_(1) <= ... <= x_(n):

    b_r = n^-1 * sum_i [(i-1)(i-2)...(i-r)] / [(n-1)(n-2)...(n-r)] * x_(i)

    l1 = b0
    l2 = 2 b1 - b0
    l3 = 6 b2 - 6 b1 + b0
    l4 = 20 b3 - 30 b2 + 12 b1 - b0
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from core.errors import DegenerateSampleError, InsufficientDataError


@dataclass(frozen=True)
class LMoments:
    l1: float
    l2: float
    l3: float
    l4: float

    @property
    def tau3(self) -> float:
        return self.l3 / self.l2

    @property
    def tau4(self) -> float:
        return self.l4 / self.l2


def pwm_b(values, r_max: int = 3) -> np.ndarray:
    """Unbiased probability-weighted moments b_0..b_{r_max}."""
    x = np.sort(np.asarray(values, dtype=float))
    n = x.size
    i = np.arange(1, n + 1, dtype=float)
    b = np.empty(r_max + 1)
    weights = np.ones(n)
    b[0] = x.mean()
    for r in range(1, r_max + 1):
        weights = weights * (i - r) / (n - r)
        b[r] = np.mean(weights * x)
    return b


def sample_lmoments(values) -> LMoments:
    x = np.asarray(values, dtype=float)
    if x.size < 4:
        raise InsufficientDataError(f"sample_lmoments: need at least 4 values, got {x.size}")
    b0, b1, b2, b3 = pwm_b(x, 3)
    l2 = 2.0 * b1 - b0
    if not l2 > 0:
        raise DegenerateSampleError("sample_lmoments: all values are equal, L-scale is zero")
    return LMoments(
        l1=float(b0),
        l2=float(l2),
        l3=float(6.0 * b2 - 6.0 * b1 + b0),
        l4=float(20.0 * b3 - 30.0 * b2 + 12.0 * b1 - b0),
    )


def gpd_tau4_of_tau3(tau3: float) -> float:
    """L-kurtosis of the GPD family as a function of its L-skewness."""
    return tau3 * (1.0 + 5.0 * tau3) / (5.0 + tau3)


def gpd_lmoment_ratios(xi: float) -> tuple[float, float]:
    """Population (tau3, tau4) of GPD(xi, beta); independent of beta."""
    tau3 = (1.0 + xi) / (3.0 - xi)
    tau4 = (1.0 + xi) * (2.0 + xi) / ((3.0 - xi) * (4.0 - xi))
    return tau3, tau4
