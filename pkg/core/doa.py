"""Domain-of-attraction checks and quantile functions from regular-variation representations.

The limit criteria are evaluated on geometric grids: x in DOA_CONFIG['x_points']
for survival-scale criteria and u in DOA_CONFIG['u_points'] for tail-quantile
criteria, where the tail quantile is t(u) = F^{-1}(1 - u).

A verdict's residual is the larger of two numbers taken over the last
``tail_points`` usable points: the worst misfit of the log-ratios to a pure
power of lambda, and the relative drift of the gamma estimate between points.
A check is accepted when its residual is at most ``acceptance_residual``.

CdfSpec callables must be safe to call from several threads at once.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from config import DOA_CONFIG
from core.distributions import uniforms
from core.errors import (
    CapabilityError, DivergedIntegralError, DomainError, InvalidInputError,
    InvalidParameterError, InvalidRepresentationError, WrongBranchError,
)

logger = logging.getLogger(__name__)


class Criterion(Enum):
    A11 = 'A11'     # regular variation of the survival function
    A12 = 'A12'     # regular variation of the tail quantile
    A13 = 'A13'     # von Mises, heavy tail
    A21 = 'A21'
    A22 = 'A22'     # Gamma-variation with R(x) as auxiliary function
    A23 = 'A23'     # von Mises, light tail (survival form)
    Lo86 = 'Lo86'   # slow variation of s(u) = -u t'(u)
    B11 = 'B11'     # regular variation of S(uep - 1/x)
    B12 = 'B12'     # regular variation of uep - t(u)
    B13 = 'B13'     # von Mises, bounded tail


class Domain(Enum):
    Frechet = 'Frechet'
    Gumbel = 'Gumbel'
    Weibull = 'Weibull'
    Unclassified = 'Unclassified'


@dataclass(frozen=True)
class CdfSpec:
    cdf: Callable
    quantile: Callable
    derivative: Optional[Callable] = None
    second_derivative: Optional[Callable] = None
    lep: float = -math.inf
    uep: float = math.inf
    name: str = 'custom'
    survival: Optional[Callable] = None                  # 1 - F without cancellation
    tail_quantile: Optional[Callable] = None             # u -> F^{-1}(1 - u)
    tail_quantile_derivative: Optional[Callable] = None  # d/du F^{-1}(1 - u)
    hazard: Optional[Callable] = None                    # F' / (1 - F), finite where both underflow

    def __post_init__(self):
        if not self.lep < self.uep:
            raise InvalidParameterError(f"CdfSpec: need lep < uep, got {self.lep}, {self.uep}")

    def sf(self, x: float) -> float:
        if self.survival is not None:
            return float(self.survival(x))
        return 1.0 - float(self.cdf(x))

    def tq(self, u: float) -> float:
        if self.tail_quantile is not None:
            return float(self.tail_quantile(u))
        return float(self.quantile(1.0 - u))

    def mills_ratio(self, x: float) -> float | None:
        """(1 - F(x)) / F'(x), or None where it cannot be evaluated."""
        if self.hazard is not None:
            h = float(self.hazard(x))
            ratio = 1.0 / h if h > 0 else math.nan
        elif self.derivative is not None:
            dens = float(self.derivative(x))
            ratio = self.sf(x) / dens if dens > 0 else math.nan
        else:
            return None
        return ratio if ratio > 0 and math.isfinite(ratio) else None


@dataclass(frozen=True)
class DoaVerdict:
    gamma_hat: float
    criterion_used: Criterion
    residual: float
    classified_domain: Domain

    def to_dict(self) -> dict:
        return {
            'gamma_hat': self.gamma_hat,
            'criterion_used': self.criterion_used.value,
            'residual': self.residual,
            'classified_domain': self.classified_domain.value,
        }


@dataclass(frozen=True)
class KaramataRep:
    gamma: float
    c: float = 1.0
    a_fn: Optional[Callable] = None      # a(u) -> 0 as u -> 0; None means a == 0
    ell_fn: Optional[Callable] = None    # l(u) -> 0 as u -> 0; None means l == 0
    uep: float = math.inf
    d: float = 0.0
    s_fn: Optional[Callable] = None      # gamma = 0 only; built from (c, a, l) when None


@dataclass(frozen=True)
class NormalizingConstants:
    a_n: float
    b_n: float
    domain: Domain


def _cfg(overrides: dict) -> dict:
    return {**DOA_CONFIG, **{k: v for k, v in overrides.items() if v is not None}}


def _verdict(gamma: float, criterion: Criterion, residual: float, domain: Domain, cfg: dict) -> DoaVerdict:
    if not residual <= cfg['acceptance_residual']:
        domain = Domain.Unclassified
    return DoaVerdict(gamma_hat=gamma, criterion_used=criterion, residual=residual, classified_domain=domain)


def _failed(criterion: Criterion) -> DoaVerdict:
    return DoaVerdict(gamma_hat=math.nan, criterion_used=criterion, residual=math.inf,
                      classified_domain=Domain.Unclassified)


def _safe_log(value: float) -> float | None:
    if not (value > 0) or not math.isfinite(value):
        return None
    return math.log(value)


def _power_slope(points, log_ratio, lambdas, tail_points: int):
    """Slope of log-ratio against log(lambda) at the last usable points, with its residual."""
    log_lams = np.log(np.asarray(lambdas, dtype=float))
    rows = []
    for p in points:
        vals = [log_ratio(p, lam) for lam in lambdas]
        if any(v is None for v in vals):
            continue
        vals = np.asarray(vals)
        slope = float(vals @ log_lams / (log_lams @ log_lams))
        rows.append((slope, float(np.max(np.abs(vals - slope * log_lams)))))
    if len(rows) < max(tail_points, 2):
        return None
    last = rows[-tail_points:]
    slope = last[-1][0]
    if slope == 0.0:
        return slope, math.inf
    drift = max(abs(s - slope) for s, _ in last) / abs(slope)
    return slope, max(max(dev for _, dev in last), drift)


def _point_estimates(values, tail_points: int):
    """Last finite point estimate and its relative drift over the last points."""
    vals = [v for v in values if v is not None and math.isfinite(v)]
    if len(vals) < max(tail_points, 2):
        return None
    last = vals[-tail_points:]
    est = last[-1]
    if est == 0.0:
        return est, math.inf
    return est, max(abs(v - est) for v in last) / abs(est)


def _best(verdicts) -> DoaVerdict:
    accepted = [v for v in verdicts if v.classified_domain is not Domain.Unclassified]
    pool = accepted or list(verdicts)
    return min(pool, key=lambda v: (v.residual, list(Criterion).index(v.criterion_used)))


def asymptotic_moment_R(spec: CdfSpec, x: float) -> float:
    """Mean excess over x: integral of the survival function beyond x, divided by S(x)."""
    if not spec.lep < x < spec.uep:
        raise DomainError(f"asymptotic_moment_R: x={x} must lie strictly inside ({spec.lep}, {spec.uep})")
    s_x = spec.sf(x)
    if not s_x > 0:
        raise DomainError(f"asymptotic_moment_R: survival at x={x} is zero")

    def ratio(t):
        return spec.sf(x + t) / s_x

    if math.isinf(spec.uep):
        scale = max(abs(x), 1.0)
        t1, t2 = 1e3 * scale, 1e9 * scale
        near = t1 * ratio(t1)
        if near > 0 and t2 * ratio(t2) > 0.5 * near:
            raise DivergedIntegralError(
                f"asymptotic_moment_R: tail integral beyond x={x} diverges (infinite mean excess)")
    upper = spec.uep - x
    with warnings.catch_warnings():
        warnings.simplefilter('error', IntegrationWarning)
        try:
            value, _ = quad(ratio, 0.0, upper, epsabs=1e-13, epsrel=DOA_CONFIG['quad_epsrel'],
                            limit=DOA_CONFIG['quad_limit'])
        except IntegrationWarning as e:
            raise DivergedIntegralError(f"asymptotic_moment_R: quadrature failed beyond x={x}: {e}") from e
    if not math.isfinite(value):
        raise DivergedIntegralError(f"asymptotic_moment_R: tail integral beyond x={x} is not finite")
    return value


# Heavy tails

def _criteria(spec: CdfSpec, criterion, cascade: tuple, op: str) -> list[Criterion]:
    """The requested criterion alone, else the cascade without a von Mises step the spec cannot evaluate."""
    has_ratio = spec.hazard is not None or spec.derivative is not None
    if criterion is None:
        return [c for c in cascade if c is not cascade[-1] or has_ratio]
    criterion = Criterion(criterion)
    if criterion not in cascade:
        raise CapabilityError(f"{op}: criterion {criterion.value} does not apply on this branch")
    if criterion is cascade[-1] and not has_ratio:
        raise CapabilityError(f"{op}: {criterion.value} needs CdfSpec.derivative or CdfSpec.hazard")
    return [criterion]


def _run_cascade(spec: CdfSpec, wanted, evaluate, op: str) -> DoaVerdict:
    verdicts = []
    for crit in wanted:
        verdicts.append(evaluate(crit))
        logger.debug("%s[%s]: %s -> %s", op, spec.name, crit.value, verdicts[-1])
        if verdicts[-1].classified_domain is not Domain.Unclassified:
            break
    return _best(verdicts)


def check_frechet(spec: CdfSpec, criterion: Criterion | str | None = None,
                  lambdas=None, x_points=None, u_points=None,
                  acceptance_residual: float | None = None) -> DoaVerdict:
    """Positive tail index from S (A11), the tail quantile (A12) or the von Mises ratio (A13)."""
    cfg = _cfg({'lambdas': lambdas, 'x_points': x_points, 'u_points': u_points,
                'acceptance_residual': acceptance_residual})
    if math.isfinite(spec.uep):
        raise WrongBranchError(
            f"check_frechet: upper endpoint {spec.uep} is finite; use check_weibull")
    wanted = _criteria(spec, criterion, (Criterion.A11, Criterion.A12, Criterion.A13), 'check_frechet')
    lams, tail = cfg['lambdas'], cfg['tail_points']
    xs = [x for x in cfg['x_points'] if x > spec.lep and x > 0]

    def a11(x, lam):
        lo, hi = _safe_log(spec.sf(x)), _safe_log(spec.sf(lam * x))
        return None if lo is None or hi is None else hi - lo

    def a12(u, lam):
        if lam * u >= 1.0:
            return None
        lo, hi = _safe_log(spec.tq(u)), _safe_log(spec.tq(lam * u))
        return None if lo is None or hi is None else hi - lo

    def a13(x):
        ratio = spec.mills_ratio(x)
        return None if ratio is None else ratio / x

    def evaluate(crit: Criterion) -> DoaVerdict:
        if crit is Criterion.A11:
            fit = _power_slope(xs, a11, lams, tail)
            if fit is not None and fit[0] < 0:
                return _verdict(-1.0 / fit[0], crit, fit[1], Domain.Frechet, cfg)
        elif crit is Criterion.A12:
            fit = _power_slope(cfg['u_points'], a12, lams, tail)
            if fit is not None and fit[0] < 0:
                return _verdict(-fit[0], crit, fit[1], Domain.Frechet, cfg)
        else:
            est = _point_estimates([a13(x) for x in xs], tail)
            if est is not None and est[0] > 0:
                return _verdict(est[0], crit, est[1], Domain.Frechet, cfg)
        return _failed(crit)

    return _run_cascade(spec, wanted, evaluate, 'check_frechet')


# Light tails

def gamma_variation_ratio(spec: CdfSpec, x: float, t: float) -> float:
    """S(x + t R(x)) / S(x); tends to exp(-t) in the Gumbel domain."""
    r = asymptotic_moment_R(spec, x)
    return spec.sf(x + t * r) / spec.sf(x)


def von_mises_ratio(spec: CdfSpec, x: float) -> float:
    """F''(x) S(x) / F'(x)^2; tends to -1 in the Gumbel domain."""
    if spec.derivative is None or spec.second_derivative is None:
        raise CapabilityError("von_mises_ratio: needs CdfSpec.derivative and CdfSpec.second_derivative")
    dens = float(spec.derivative(x))
    return float(spec.second_derivative(x)) * spec.sf(x) / dens ** 2


def _gumbel_points(spec: CdfSpec, cfg: dict) -> list[float]:
    out = []
    for u in cfg['u_points']:
        x = spec.tq(u)
        if math.isfinite(x) and spec.lep < x < spec.uep and spec.sf(x) > 0:
            out.append(x)
    return out


def check_gumbel(spec: CdfSpec, criterion: Criterion | str | None = None,
                 t_points=None, u_points=None, lambdas=None,
                 acceptance_residual: float | None = None) -> DoaVerdict:
    """Light tail by Gamma-variation (A22), von Mises (A23) or slow variation of s(u) (Lo86)."""
    cfg = _cfg({'t_points': t_points, 'u_points': u_points, 'lambdas': lambdas,
                'acceptance_residual': acceptance_residual})
    if criterion is not None:
        criterion = Criterion(criterion)
        if criterion is Criterion.A23 and (spec.derivative is None or spec.second_derivative is None):
            raise CapabilityError("check_gumbel: A23 needs CdfSpec.derivative and CdfSpec.second_derivative")
        if criterion is Criterion.Lo86 and spec.tail_quantile_derivative is None:
            raise CapabilityError("check_gumbel: Lo86 needs CdfSpec.tail_quantile_derivative")
        if criterion not in (Criterion.A22, Criterion.A23, Criterion.Lo86):
            raise CapabilityError(f"check_gumbel: criterion {criterion.value} is not evaluated numerically")
        wanted = [criterion]
    else:
        wanted = [Criterion.A22]
        if spec.derivative is not None and spec.second_derivative is not None:
            wanted.append(Criterion.A23)
        if spec.tail_quantile_derivative is not None:
            wanted.append(Criterion.Lo86)

    points = _gumbel_points(spec, cfg)[-cfg['tail_points']:]
    verdicts = []
    for crit in wanted:
        if not points:
            verdicts.append(_failed(crit))
            continue
        if crit is Criterion.A22:
            try:
                residual = max(abs(gamma_variation_ratio(spec, x, t) - math.exp(-t))
                               for x in points for t in cfg['t_points'])
            except DivergedIntegralError as e:
                logger.debug("check_gumbel[%s]: A22 not applicable (%s)", spec.name, e)
                residual = math.inf
        elif crit is Criterion.A23:
            residual = max(abs(von_mises_ratio(spec, x) + 1.0) for x in points)
        else:
            us = [u for u in cfg['u_points'] if math.isfinite(spec.tq(u))][-cfg['tail_points']:]

            def s_of(u):
                return -u * float(spec.tail_quantile_derivative(u))
            gaps = [abs(s_of(lam * u) / s_of(u) - 1.0)
                    for u in us for lam in cfg['lambdas'] if lam * u < 1.0]
            residual = max(gaps) if gaps else math.inf
        if math.isnan(residual):
            residual = math.inf
        verdicts.append(_verdict(0.0, crit, residual, Domain.Gumbel, cfg))
        logger.debug("check_gumbel[%s]: %s -> residual %.3g", spec.name, crit.value, residual)
    return _best(verdicts)


# Bounded tails

def check_weibull(spec: CdfSpec, criterion: Criterion | str | None = None,
                  lambdas=None, x_points=None, u_points=None,
                  acceptance_residual: float | None = None) -> DoaVerdict:
    """Negative tail index on the scale x -> uep - 1/x (B11), the quantile scale (B12) or by von Mises (B13)."""
    cfg = _cfg({'lambdas': lambdas, 'x_points': x_points, 'u_points': u_points,
                'acceptance_residual': acceptance_residual})
    if math.isinf(spec.uep):
        raise WrongBranchError("check_weibull: upper endpoint is infinite; use check_frechet")
    wanted = _criteria(spec, criterion, (Criterion.B11, Criterion.B12, Criterion.B13), 'check_weibull')
    uep, lams, tail = spec.uep, cfg['lambdas'], cfg['tail_points']

    def b11(x, lam):
        near, far = uep - 1.0 / (lam * x), uep - 1.0 / x
        if far <= spec.lep:
            return None
        lo, hi = _safe_log(spec.sf(far)), _safe_log(spec.sf(near))
        return None if lo is None or hi is None else hi - lo

    def b12(u, lam):
        if lam * u >= 1.0:
            return None
        lo, hi = _safe_log(uep - spec.tq(u)), _safe_log(uep - spec.tq(lam * u))
        return None if lo is None or hi is None else hi - lo

    def b13(x):
        point = uep - 1.0 / x
        if point <= spec.lep:
            return None
        ratio = spec.mills_ratio(point)
        return None if ratio is None else -ratio / (uep - point)

    def evaluate(crit: Criterion) -> DoaVerdict:
        if crit is Criterion.B11:
            fit = _power_slope(cfg['x_points'], b11, lams, tail)
            if fit is not None and fit[0] < 0:
                return _verdict(1.0 / fit[0], crit, fit[1], Domain.Weibull, cfg)
        elif crit is Criterion.B12:
            fit = _power_slope(cfg['u_points'], b12, lams, tail)
            if fit is not None and fit[0] > 0:
                return _verdict(-fit[0], crit, fit[1], Domain.Weibull, cfg)
        else:
            est = _point_estimates([b13(x) for x in cfg['x_points']], tail)
            if est is not None and est[0] < 0:
                return _verdict(est[0], crit, est[1], Domain.Weibull, cfg)
        return _failed(crit)

    return _run_cascade(spec, wanted, evaluate, 'check_weibull')


def classify_domain(spec: CdfSpec, acceptance_residual: float | None = None) -> DoaVerdict:
    """Power-law check for the endpoint branch first, then Gumbel.

    An accepted power verdict whose |gamma_hat| exceeds its residual has a
    resolved sign and is kept; otherwise the smallest accepted residual wins.
    """
    if math.isfinite(spec.uep):
        power = check_weibull(spec, acceptance_residual=acceptance_residual)
    else:
        power = check_frechet(spec, acceptance_residual=acceptance_residual)
    light = check_gumbel(spec, acceptance_residual=acceptance_residual)
    if power.classified_domain is not Domain.Unclassified and abs(power.gamma_hat) > power.residual:
        verdict = power
    else:
        verdict = _best([power, light])
    if verdict.classified_domain is Domain.Unclassified:
        logger.info("classify_domain[%s]: no criterion accepted (best residual %.3g)", spec.name, verdict.residual)
    return verdict


# Normalized maxima

def normalizing_constants(spec: CdfSpec, n: int, domain: Domain | str) -> NormalizingConstants:
    domain = Domain(domain)
    if n < 2:
        raise DomainError(f"normalizing_constants: need n >= 2, got {n}")
    top = spec.tq(1.0 / n)
    if domain is Domain.Frechet:
        return NormalizingConstants(a_n=top, b_n=0.0, domain=domain)
    if domain is Domain.Weibull:
        if math.isinf(spec.uep):
            raise WrongBranchError("normalizing_constants: Weibull constants need a finite upper endpoint")
        return NormalizingConstants(a_n=spec.uep - top, b_n=spec.uep, domain=domain)
    if domain is Domain.Gumbel:
        return NormalizingConstants(a_n=spec.tq(1.0 / (n * math.e)) - top, b_n=top, domain=domain)
    raise InvalidInputError("normalizing_constants: domain is Unclassified")


def _limit_cdf(domain: Domain, gamma: float, x: float) -> float:
    if domain is Domain.Gumbel:
        return math.exp(-math.exp(-x))
    if domain is Domain.Frechet:
        return math.exp(-x ** (-1.0 / gamma)) if x > 0 else 0.0
    return math.exp(-(-x) ** (-1.0 / gamma)) if x < 0 else 1.0


def maxima_limit_check(spec: CdfSpec, n: int, verdict: DoaVerdict, grid=None) -> float:
    """Largest gap between F^n(a_n x + b_n) and the limit law of the verdict's domain."""
    if verdict.classified_domain is Domain.Unclassified:
        raise InvalidInputError("maxima_limit_check: verdict is Unclassified")
    consts = normalizing_constants(spec, n, verdict.classified_domain)
    grid = DOA_CONFIG['maxima_grid'] if grid is None else grid
    worst = 0.0
    for x in grid:
        z = consts.a_n * x + consts.b_n
        if z <= spec.lep:
            fn = 0.0
        elif z >= spec.uep:
            fn = 1.0
        else:
            surv = min(max(spec.sf(z), 0.0), 1.0)
            fn = 0.0 if surv >= 1.0 else math.exp(n * math.log1p(-surv))
        worst = max(worst, abs(fn - _limit_cdf(verdict.classified_domain, verdict.gamma_hat, x)))
    return worst


# Karamata / de Haan representations

def _log_scale_integral(fn: Callable, u: float) -> float:
    """Integral of fn(t)/t over (u, 1], as the integral of fn(e^v) over (ln u, 0]."""
    if u >= 1.0:
        return 0.0
    value, _ = quad(lambda v: float(fn(math.exp(v))), math.log(u), 0.0,
                    epsabs=0.0, epsrel=DOA_CONFIG['quad_epsrel'], limit=DOA_CONFIG['quad_limit'])
    return value


def _power_part(rep: KaramataRep, u: float) -> float:
    """c (1 + a(u)) exp(integral of l(t)/t over (u, 1])."""
    a = 0.0 if rep.a_fn is None else float(rep.a_fn(u))
    ell = 0.0 if rep.ell_fn is None else _log_scale_integral(rep.ell_fn, u)
    return rep.c * (1.0 + a) * math.exp(ell)


def _check_rep(rep: KaramataRep):
    if rep.gamma < 0 and math.isinf(rep.uep):
        raise InvalidRepresentationError("karamata_quantile: gamma < 0 needs a finite upper endpoint")
    if rep.gamma != 0 and not rep.c > 0:
        raise InvalidRepresentationError(f"karamata_quantile: constant c must be positive, got {rep.c}")


def _karamata_point(rep: KaramataRep, u: float) -> float:
    if rep.gamma > 0:
        return _power_part(rep, u) * u ** (-rep.gamma)
    if rep.gamma < 0:
        return rep.uep - _power_part(rep, u) * u ** (-rep.gamma)

    def s(t):
        return float(rep.s_fn(t)) if rep.s_fn is not None else _power_part(rep, t)

    if rep.s_fn is None and rep.a_fn is None and rep.ell_fn is None:
        integral = -rep.c * math.log(u)
    else:
        integral = _log_scale_integral(s, u)
    return rep.d + s(u) + integral


def karamata_quantile(rep: KaramataRep, u):
    """F^{-1}(1 - u) for u in (0, 1); accepts a scalar or an array."""
    _check_rep(rep)
    u_arr = np.asarray(u, dtype=float)
    if np.any(~(u_arr > 0.0)) or np.any(u_arr >= 1.0):
        raise DomainError(f"karamata_quantile: u must lie in (0, 1), got {u}")
    if u_arr.ndim == 0:
        return _karamata_point(rep, float(u_arr))
    return np.array([_karamata_point(rep, float(v)) for v in u_arr.ravel()]).reshape(u_arr.shape)


def karamata_sample(rep: KaramataRep, n: int, seed: int) -> np.ndarray:
    _check_rep(rep)
    u = 1.0 - uniforms(n, seed)     # in (0, 1]
    plain = rep.a_fn is None and rep.ell_fn is None and rep.s_fn is None
    if plain and rep.gamma != 0:
        body = rep.c * u ** (-rep.gamma)
        return body if rep.gamma > 0 else rep.uep - body
    if plain:
        return rep.d + rep.c - rep.c * np.log(u)
    return np.array([_karamata_point(rep, float(v)) for v in u])
