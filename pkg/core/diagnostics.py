"""Plot-ready point sets for QQ, PP, return-level, density and Hill plots.

Nothing is rendered here.  Every series uses the plotting position i/(n+1).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import pandas as pd
from scipy import stats

from config import DIAG_CONFIG, RISK_CONFIG
from core.distributions import gpd_cdf, gpd_pdf, gpd_quantile
from core.errors import (
    BelowThresholdError, DomainError, InsufficientDataError, InvalidInputError, RangeError,
)
from core.fit import GpdFit, hill_curve
from core.tail_risk import TailModel, return_level

logger = logging.getLogger(__name__)


class SeriesKind(Enum):
    QQExp = 'qqexp'
    PP = 'pp'
    QQGpd = 'qqgpd'
    ReturnLevel = 'return_level'
    Density = 'density'
    Histogram = 'histogram'
    Hill = 'hill'


@dataclass
class PlotSeries:
    kind: SeriesKind
    points: np.ndarray                  # shape (n, 2), ordered by x
    bands: np.ndarray | None = None     # shape (n, 3): x, lo, hi
    meta: dict = field(default_factory=dict)

    @property
    def x(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.points[:, 1]

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({'x': self.x, 'y': self.y})
        if self.bands is not None:
            frame['lo'] = self.bands[:, 1]
            frame['hi'] = self.bands[:, 2]
        return frame

    def to_dict(self) -> dict:
        out = {'kind': self.kind.value, 'points': self.points.tolist(), 'meta': self.meta}
        if self.bands is not None:
            out['bands'] = self.bands.tolist()
        return out


def plotting_positions(n: int) -> np.ndarray:
    return np.arange(1, n + 1, dtype=float) / (n + 1)


def _series(kind: SeriesKind, x, y, **meta) -> PlotSeries:
    return PlotSeries(kind=kind, points=np.column_stack([x, y]).astype(float), meta=meta)


def _require_converged(fit: GpdFit, op: str):
    if not fit.converged:
        raise InvalidInputError(f"{op}: fit did not converge")


def qq_exponential(data) -> PlotSeries:
    """Order statistics against standard exponential quantiles.

    meta carries the least-squares line and ``concavity``: the sign of the
    quadratic coefficient of a degree-2 fit (+1 bends up, heavier than
    exponential; -1 bends down, shorter tail).
    """
    x = np.sort(np.asarray(data, dtype=float).ravel())
    if x.size < 2:
        raise InsufficientDataError(f"qq_exponential: need at least 2 values, got {x.size}")
    theo = -np.log1p(-plotting_positions(x.size))
    slope, intercept = np.polyfit(theo, x, 1)
    concavity = 0
    if x.size >= 3:
        quad = np.polyfit(theo, x, 2)[0]
        concavity = int(np.sign(quad))
    return _series(SeriesKind.QQExp, theo, x, slope=float(slope), intercept=float(intercept),
                   concavity=concavity)


def pp_plot(fit: GpdFit, excesses) -> PlotSeries:
    """Fitted cdf at each sorted excess against its plotting position i / (n + 1)."""
    _require_converged(fit, 'pp_plot')
    x = np.sort(np.asarray(excesses, dtype=float).ravel())
    pos = plotting_positions(x.size)
    probs = np.asarray(gpd_cdf(fit.params, x), dtype=float)
    max_dev = float(np.max(np.abs(probs - pos))) if x.size else 0.0
    return _series(SeriesKind.PP, pos, probs, max_abs_dev=max_dev)


def qq_gpd(fit: GpdFit, excesses) -> PlotSeries:
    """Sorted excesses against fitted GPD quantiles at the plotting positions."""
    _require_converged(fit, 'qq_gpd')
    x = np.sort(np.asarray(excesses, dtype=float).ravel())
    theo = np.asarray(gpd_quantile(fit.params, plotting_positions(x.size)), dtype=float)
    meta = {}
    if x.size >= 2:
        slope, intercept = np.polyfit(theo, x, 1)
        meta = {'slope': float(slope), 'intercept': float(intercept)}
    return _series(SeriesKind.QQGpd, theo, x, **meta)


def default_periods() -> np.ndarray:
    return np.asarray(RISK_CONFIG['periods'], dtype=float)


def return_level_series(model: TailModel, fit_cov, periods=None, r: float | None = None,
                        level: float | None = None) -> PlotSeries:
    """Return levels over a period grid with delta-method bands from the (xi, beta) covariance."""
    if fit_cov is None:
        raise InvalidInputError("return_level_series: covariance is required")
    cov = np.asarray(fit_cov, dtype=float)
    periods = default_periods() if periods is None else np.asarray(periods, dtype=float)
    r = RISK_CONFIG['obs_per_period'] if r is None else r
    level = RISK_CONFIG['band_level'] if level is None else level
    crit = float(stats.norm.ppf(0.5 + level / 2.0))

    def level_at(xi, beta, t):
        return return_level(TailModel(u=model.u, xi=xi, beta=beta, n=model.n, n_u=model.n_u), r, t)

    xs, ys, bands = [], [], []
    for t in np.sort(periods):
        try:
            x_t = level_at(model.xi, model.beta, t)
        except (BelowThresholdError, DomainError):
            logger.debug("return_level_series: period %g infeasible, skipped", t)
            continue
        h_xi = 1e-6 * max(abs(model.xi), 1.0)
        h_beta = 1e-6 * model.beta
        grad = np.array([
            (level_at(model.xi + h_xi, model.beta, t) - level_at(model.xi - h_xi, model.beta, t)) / (2 * h_xi),
            (level_at(model.xi, model.beta + h_beta, t) - level_at(model.xi, model.beta - h_beta, t)) / (2 * h_beta),
        ])
        se = math.sqrt(max(float(grad @ cov @ grad), 0.0))
        xs.append(float(t))
        ys.append(x_t)
        bands.append((float(t), x_t - crit * se, x_t + crit * se))

    series = _series(SeriesKind.ReturnLevel, xs, ys, obs_per_period=r, level=level)
    series.bands = np.asarray(bands, dtype=float).reshape(-1, 3)
    return series


def density_series(fit: GpdFit, excesses, bins: int | None = None, grid_points: int = 200) -> dict:
    bins = DIAG_CONFIG['bins'] if bins is None else bins
    if bins < 1:
        raise RangeError(f"density_series: bins must be >= 1, got {bins}")
    x = np.asarray(excesses, dtype=float).ravel()
    if x.size == 0:
        raise InsufficientDataError("density_series: no excesses")
    heights, edges = np.histogram(x, bins=bins, density=True)
    centers = 0.5 * (edges[:-1] + edges[1:])
    histogram = _series(SeriesKind.Histogram, centers, heights, bin_width=float(edges[1] - edges[0]))

    grid = np.linspace(0.0, float(x.max()), grid_points)
    fitted = _series(SeriesKind.Density, grid, gpd_pdf(fit.params, grid))
    return {'histogram': histogram, 'fitted': fitted}


def hill_series(data, ks=None) -> PlotSeries:
    x = np.asarray(data, dtype=float).ravel()
    if ks is None:
        top = max(3, min(x.size - 1, x.size // 2))
        ks = np.arange(2, top)
    ks = np.asarray(ks, dtype=int)
    return _series(SeriesKind.Hill, ks, hill_curve(x, ks))


def figure_series(fit: GpdFit, excesses, periods=None, r: float | None = None,
                  bins: int | None = None) -> dict:
    """The four fitted-model plots for one threshold, keyed by file suffix."""
    bins = DIAG_CONFIG['bins'] if bins is None else bins
    out = {
        'pp': pp_plot(fit, excesses),
        'qqgpd': qq_gpd(fit, excesses),
    }
    if fit.cov is not None:
        out['return_level'] = return_level_series(TailModel.from_fit(fit), fit.cov, periods, r)
    else:
        logger.warning("figure_series: no covariance, return-level plot skipped")
    dens = density_series(fit, excesses, bins)
    out['histogram'] = dens['histogram']
    out['density'] = dens['fitted']
    return out
