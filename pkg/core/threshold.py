"""Exceedances and threshold-selection diagnostics.

All curves take an ascending threshold grid and skip grid points with fewer
than ``min_exceed`` exceedances.  Outputs keep grid order.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from config import DIAG_CONFIG
from core.errors import InsufficientDataError, InvalidInputError, NoExceedanceError, TailRiskError
from core.fit import GpdFit, fit_gpd_mle
from core.lmoments import gpd_tau4_of_tau3, sample_lmoments

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExcessSample:
    threshold: float
    excesses: np.ndarray
    n_total: int

    @property
    def n_exceed(self) -> int:
        return int(self.excesses.size)


@dataclass(frozen=True)
class MrlPoint:
    u: float
    mean_excess: float
    n_u: int
    sd_excess: float = math.nan


@dataclass(frozen=True)
class StabilityPoint:
    u: float
    sigma_star: float
    xi_hat: float
    se_sigma_star: float
    se_xi: float
    n_u: int = 0


@dataclass(frozen=True)
class LmomPoint:
    u: float
    tau3: float
    tau4: float
    tau4_gpd: float
    n_u: int = 0


@dataclass
class StabilityCurve:
    points: list = field(default_factory=list)
    skipped: int = 0    # thresholds whose fit failed

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    def __getitem__(self, index):
        return self.points[index]


@dataclass(frozen=True)
class CountCheck:
    mean_count: float
    var_count: float
    dispersion_ratio: float


@dataclass(frozen=True)
class ThresholdScore:
    u: float
    n_u: int
    mrl_chi2: float        # reduced chi-square of the trailing MRL line
    xi_hat: float
    se_xi: float
    xi_drift: float        # largest |xi_j - xi_i| / se_j over later grid points
    linear: bool
    stable: bool


@dataclass(frozen=True)
class ThresholdSuggestion:
    u_star: float
    found: bool
    scores: list


def _as_data(data, op: str) -> np.ndarray:
    x = np.asarray(data, dtype=float).ravel()
    if x.size == 0:
        raise InsufficientDataError(f"{op}: data is empty")
    return x


def _as_grid(u_grid, op: str) -> np.ndarray:
    grid = np.asarray(u_grid, dtype=float).ravel()
    if np.any(np.diff(grid) < 0):
        raise InvalidInputError(f"{op}: u_grid must be sorted ascending")
    return grid


def exceedances(data, u: float) -> ExcessSample:
    x = _as_data(data, 'exceedances')
    return ExcessSample(threshold=float(u), excesses=x[x > u] - u, n_total=int(x.size))


def empirical_mean_excess(data, u: float) -> float:
    sample = exceedances(data, u)
    if sample.n_exceed == 0:
        raise NoExceedanceError(f"empirical_mean_excess: no observation exceeds u={u}")
    return float(np.mean(sample.excesses))


def default_u_grid(data, points: int | None = None, lo_pct: float | None = None,
                   hi_pct: float | None = None) -> np.ndarray:
    x = _as_data(data, 'default_u_grid')
    points = DIAG_CONFIG['grid_points'] if points is None else points
    lo_pct = DIAG_CONFIG['grid_lo_pct'] if lo_pct is None else lo_pct
    hi_pct = DIAG_CONFIG['grid_hi_pct'] if hi_pct is None else hi_pct
    lo, hi = np.percentile(x, [lo_pct, hi_pct])
    return np.linspace(lo, hi, points)


def mrl_curve(data, u_grid, min_exceed: int | None = None) -> list[MrlPoint]:
    x = np.sort(_as_data(data, 'mrl_curve'))
    grid = _as_grid(u_grid, 'mrl_curve')
    min_exceed = DIAG_CONFIG['min_exceed'] if min_exceed is None else min_exceed
    min_exceed = max(min_exceed, 1)

    points = []
    for u in grid:
        excess = x[np.searchsorted(x, u, side='right'):] - u
        if excess.size < min_exceed:
            continue
        sd = float(np.std(excess, ddof=1)) if excess.size > 1 else math.nan
        points.append(MrlPoint(u=float(u), mean_excess=float(np.mean(excess)),
                               n_u=int(excess.size), sd_excess=sd))
    logger.debug("mrl_curve: %d of %d grid points kept", len(points), grid.size)
    return points


def _stability_point(x: np.ndarray, u: float) -> tuple[float, GpdFit | None, str]:
    excess = x[x > u] - u
    try:
        fit = fit_gpd_mle(excess, threshold=u, n_total=x.size)
    except TailRiskError as e:
        return u, None, str(e)
    if not fit.converged:
        return u, None, f"not converged, {fit.message}"
    return u, fit, ''


def stability_curve(data, u_grid, min_exceed: int | None = None,
                    n_jobs: int | None = None) -> StabilityCurve:
    """Modified scale sigma* = beta_u - xi u and xi per threshold, delta-method standard errors."""
    x = _as_data(data, 'stability_curve')
    grid = _as_grid(u_grid, 'stability_curve')
    min_exceed = DIAG_CONFIG['min_exceed'] if min_exceed is None else min_exceed
    n_jobs = DIAG_CONFIG['n_jobs'] if n_jobs is None else n_jobs

    counts = np.array([np.count_nonzero(x > u) for u in grid])
    todo = [float(u) for u, c in zip(grid, counts) if c >= min_exceed]
    results = Parallel(n_jobs=n_jobs, prefer='threads')(
        delayed(_stability_point)(x, u) for u in todo)

    curve = StabilityCurve()
    for u, fit, reason in results:
        if fit is None:
            curve.skipped += 1
            logger.warning("stability_curve: skipped u=%g (%s)", u, reason)
            continue
        xi, beta = fit.params.xi, fit.params.beta
        if fit.cov is None:
            logger.debug("stability_curve: no covariance at u=%g (xi=%.4g)", u, xi)
            var_star = math.nan
        else:
            c = fit.cov
            var_star = c[1, 1] + u * u * c[0, 0] - 2.0 * u * c[0, 1]
        curve.points.append(StabilityPoint(
            u=u,
            sigma_star=beta - xi * u,
            xi_hat=xi,
            se_sigma_star=math.sqrt(max(var_star, 0.0)) if math.isfinite(var_star) else math.nan,
            se_xi=fit.se_xi,
            n_u=fit.n_exceed,
        ))
    return curve


def lmoment_curve(data, u_grid, min_exceed: int | None = None) -> list[LmomPoint]:
    x = _as_data(data, 'lmoment_curve')
    grid = _as_grid(u_grid, 'lmoment_curve')
    min_exceed = max(DIAG_CONFIG['min_exceed'] if min_exceed is None else min_exceed, 4)

    points = []
    for u in grid:
        excess = x[x > u] - u
        if excess.size < min_exceed:
            continue
        try:
            lm = sample_lmoments(excess)
        except TailRiskError as e:
            logger.warning("lmoment_curve: skipped u=%g (%s)", u, e)
            continue
        points.append(LmomPoint(u=float(u), tau3=lm.tau3, tau4=lm.tau4,
                                tau4_gpd=gpd_tau4_of_tau3(lm.tau3), n_u=int(excess.size)))
    return points


def exceedance_count_check(data_batches, u: float) -> CountCheck:
    batches = list(data_batches)
    if len(batches) < 2:
        raise InsufficientDataError("exceedance_count_check: need at least 2 batches")
    counts = np.array([np.count_nonzero(np.asarray(b, dtype=float) > u) for b in batches], dtype=float)
    mean = float(counts.mean())
    var = float(counts.var(ddof=1))
    ratio = var / mean if mean > 0 else math.nan
    return CountCheck(mean_count=mean, var_count=var, dispersion_ratio=ratio)


def _weighted_line_chi2(u: np.ndarray, y: np.ndarray, se: np.ndarray) -> float:
    if u.size < 3:
        return 0.0
    w = 1.0 / np.square(se)
    design = np.column_stack([np.ones_like(u), u]) * np.sqrt(w)[:, None]
    coef, *_ = np.linalg.lstsq(design, y * np.sqrt(w), rcond=None)
    resid = (y - (coef[0] + coef[1] * u)) / se
    return float(np.sum(resid ** 2) / (u.size - 2))


def suggest_threshold(data, u_grid, min_exceed: int | None = None,
                      linearity_bound: float | None = None, xi_z: float | None = None,
                      n_jobs: int | None = None) -> ThresholdSuggestion:
    """Smallest grid threshold whose trailing MRL curve is linear and whose xi is stable above it."""
    linearity_bound = DIAG_CONFIG['mrl_linearity_bound'] if linearity_bound is None else linearity_bound
    xi_z = DIAG_CONFIG['xi_stability_z'] if xi_z is None else xi_z
    grid = _as_grid(u_grid, 'suggest_threshold')

    mrl = {p.u: p for p in mrl_curve(data, grid, min_exceed) if p.n_u > 1 and p.sd_excess > 0}
    stab = {p.u: p for p in stability_curve(data, grid, min_exceed, n_jobs=n_jobs)}
    usable = [float(u) for u in grid if float(u) in mrl and float(u) in stab]
    if not usable:
        logger.warning("suggest_threshold: no grid point has enough exceedances")
        return ThresholdSuggestion(u_star=float(grid.max()), found=False, scores=[])

    us = np.array(usable)
    me = np.array([mrl[u].mean_excess for u in usable])
    me_se = np.array([mrl[u].sd_excess / math.sqrt(mrl[u].n_u) for u in usable])
    xis = np.array([stab[u].xi_hat for u in usable])
    xi_se = np.array([stab[u].se_xi for u in usable])

    scores = []
    u_star, found = float(grid.max()), False
    for i, u in enumerate(usable):
        chi2 = _weighted_line_chi2(us[i:], me[i:], me_se[i:])
        later = slice(i + 1, None)
        measured = np.isfinite(xi_se[later])
        if not measured.all():
            drift = math.nan
        elif i + 1 < len(usable):
            drift = float(np.max(np.abs(xis[later] - xis[i]) / xi_se[later]))
        else:
            drift = 0.0
        linear = chi2 <= linearity_bound
        # a shape without standard error cannot be called stable
        stable = bool(np.isfinite(xi_se[i])) and drift <= xi_z
        scores.append(ThresholdScore(u=u, n_u=mrl[u].n_u, mrl_chi2=chi2, xi_hat=float(xis[i]),
                                     se_xi=float(xi_se[i]), xi_drift=drift, linear=linear, stable=stable))
        if not found and linear and stable:
            u_star, found = u, True
    if not found:
        logger.warning("suggest_threshold: no threshold passed both checks, using grid maximum %g", u_star)
    return ThresholdSuggestion(u_star=u_star, found=found, scores=scores)
