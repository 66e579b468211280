"""GPD estimation from threshold excesses, Hill tail index and model ranking.

Maximum likelihood runs on excesses divided by their mean, so the optimizer
sees the same problem for any unit of measurement; the scale is mapped back
afterwards.  The free parameters are (xi, log b) with b the standardized scale.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.optimize import minimize

from config import FIT_CONFIG
from core.distributions import GpdParams, gpd_logpdf, is_exponential_shape
from core.errors import (
    DataError, DegenerateSampleError, DomainError, InsufficientDataError,
    InvalidInputError, NonConvergenceError, RangeError,
)
from core.lmoments import sample_lmoments

logger = logging.getLogger(__name__)


@dataclass
class GpdFit:
    params: GpdParams
    threshold: float
    n_total: int
    n_exceed: int
    loglik: float
    cov: np.ndarray | None          # (xi, beta) order
    converged: bool                 # on the xi = -1 edge: constrained optimum, gradient_norm 0
    method: str                     # 'MLE', 'PWM' or 'EXP'
    iterations: int = 0
    gradient_norm: float = math.nan
    message: str = ''

    @property
    def se_xi(self) -> float:
        if self.cov is None:
            return math.nan
        return math.sqrt(max(self.cov[0, 0], 0.0))

    @property
    def se_beta(self) -> float:
        if self.cov is None:
            return math.nan
        return math.sqrt(max(self.cov[1, 1], 0.0))

    @property
    def reliable(self) -> bool:
        return self.params.xi > -0.5

    @property
    def k(self) -> int:
        return 1 if self.method == 'EXP' else 2

    def to_dict(self) -> dict:
        return {
            'method': self.method,
            'threshold': self.threshold,
            'xi': self.params.xi,
            'beta': self.params.beta,
            'se_xi': self.se_xi,
            'se_beta': self.se_beta,
            'cov': None if self.cov is None else self.cov.tolist(),
            'loglik': self.loglik,
            'n_total': self.n_total,
            'n_exceed': self.n_exceed,
            'converged': self.converged,
            'reliable': self.reliable,
            'iterations': self.iterations,
            'gradient_norm': self.gradient_norm,
            'message': self.message,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'GpdFit':
        cov = data.get('cov')
        return cls(
            params=GpdParams(xi=float(data['xi']), beta=float(data['beta'])),
            threshold=float(data['threshold']),
            n_total=int(data['n_total']),
            n_exceed=int(data['n_exceed']),
            loglik=float(data['loglik']),
            cov=None if cov is None else np.asarray(cov, dtype=float),
            converged=bool(data['converged']),
            method=data['method'],
            iterations=int(data.get('iterations', 0)),
            gradient_norm=float(data.get('gradient_norm', math.nan)),
            message=data.get('message', ''),
        )


@dataclass(frozen=True)
class ModelScore:
    label: str
    aic: float
    deviance: float
    k: int
    loglik: float


def _as_excesses(excesses, op: str) -> np.ndarray:
    x = np.asarray(excesses, dtype=float).ravel()
    if x.size and (not np.all(np.isfinite(x)) or np.any(x < 0)):
        raise InvalidInputError(f"{op}: excesses must be finite and nonnegative")
    return x


def gpd_loglik(p: GpdParams, excesses) -> float:
    x = np.asarray(excesses, dtype=float).ravel()
    if x.size == 0:
        raise InsufficientDataError("gpd_loglik: no excesses")
    return float(np.sum(gpd_logpdf(p, x)))


def pwm_params(l1: float, l2: float) -> GpdParams:
    """GPD parameters matching the first two L-moments: xi = 2 - l1/l2, beta = l1 (l1/l2 - 1)."""
    if not l2 > 0:
        raise DegenerateSampleError("fit_gpd_pwm: L-scale is not positive")
    ratio = l1 / l2
    beta = l1 * (ratio - 1.0)
    if not beta > 0:
        raise DegenerateSampleError(f"fit_gpd_pwm: implied scale {beta} is not positive")
    return GpdParams(xi=2.0 - ratio, beta=beta)


def fit_gpd_pwm(excesses, threshold: float = 0.0, n_total: int | None = None) -> GpdFit:
    """Probability-weighted-moment estimate; no covariance."""
    x = _as_excesses(excesses, 'fit_gpd_pwm')
    if x.size < FIT_CONFIG['min_pwm_exceed']:
        raise InsufficientDataError(
            f"fit_gpd_pwm: need at least {FIT_CONFIG['min_pwm_exceed']} excesses, got {x.size}")
    lm = sample_lmoments(x)
    params = pwm_params(lm.l1, lm.l2)
    return GpdFit(
        params=params,
        threshold=threshold,
        n_total=x.size if n_total is None else n_total,
        n_exceed=x.size,
        loglik=gpd_loglik(params, x),
        cov=None,
        converged=True,
        method='PWM',
    )


class _StandardizedNll:
    """Mean negative log-likelihood of GPD(xi, exp(log_b)) on z = x / mean(x)."""

    def __init__(self, z: np.ndarray):
        self.z = z
        self.n = z.size
        self.z_max = float(z.max())

    def __call__(self, theta) -> float:
        xi, log_b = float(theta[0]), float(theta[1])
        if xi < -1.0 or not math.isfinite(log_b):
            return math.inf
        b = math.exp(log_b)
        if xi == -1.0:
            return log_b if b >= self.z_max else math.inf
        if is_exponential_shape(xi):
            return log_b + float(np.mean(self.z)) / b
        t = xi * self.z / b
        if xi < 0 and 1.0 + xi * self.z_max / b <= 0.0:
            return math.inf
        return log_b + (1.0 + 1.0 / xi) * float(np.mean(np.log1p(t)))

    def gradient(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        grad = np.empty(2)
        for i in range(2):
            h = 1e-6 * max(abs(theta[i]), 1.0)
            e = np.zeros(2)
            e[i] = h
            grad[i] = (self(theta + e) - self(theta - e)) / (2.0 * h)
        return grad

    def hessian(self, theta, rel_step: float) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        h = rel_step * np.maximum(np.abs(theta), 1.0)
        f0 = self(theta)
        hess = np.empty((2, 2))
        for i in range(2):
            ei = np.zeros(2)
            ei[i] = h[i]
            hess[i, i] = (self(theta + ei) - 2.0 * f0 + self(theta - ei)) / h[i] ** 2
        e0 = np.array([h[0], 0.0])
        e1 = np.array([0.0, h[1]])
        hess[0, 1] = hess[1, 0] = (
            self(theta + e0 + e1) - self(theta + e0 - e1)
            - self(theta - e0 + e1) + self(theta - e0 - e1)
        ) / (4.0 * h[0] * h[1])
        return hess


def _feasible_start(nll: _StandardizedNll, xi: float, b: float) -> np.ndarray:
    xi = max(xi, -0.9)
    if xi < 0 and 1.0 + xi * nll.z_max / b <= 0.0:
        b = 1.05 * (-xi) * nll.z_max
    return np.array([xi, math.log(b)])


def _simplex_search(nll: _StandardizedNll, theta0: np.ndarray, cfg: dict):
    options = {
        'xatol': cfg['xatol'],
        'fatol': cfg['fatol'],
        'maxiter': cfg['maxiter'],
        'initial_simplex': np.array([theta0, theta0 + [0.1, 0.0], theta0 + [0.0, 0.1]]),
    }
    res = minimize(nll, theta0, method='Nelder-Mead', options=options)
    iterations = res.nit
    # polish from a fresh simplex around the first optimum
    options['initial_simplex'] = np.array([res.x, res.x + [0.01, 0.0], res.x + [0.0, 0.01]])
    polish = minimize(nll, res.x, method='Nelder-Mead', options=options)
    if polish.fun <= res.fun:
        res = polish
    iterations += polish.nit
    grad_norm = float(np.max(np.abs(nll.gradient(res.x)))) if math.isfinite(res.fun) else math.inf
    ok = bool(polish.success) and grad_norm < cfg['grad_tol']
    return res, iterations, grad_norm, ok


def fit_gpd_mle(excesses, init: GpdParams | None = None, threshold: float = 0.0,
                n_total: int | None = None, **overrides) -> GpdFit:
    """Maximum likelihood GPD fit with observed-information covariance; keys of FIT_CONFIG can be overridden."""
    cfg = {**FIT_CONFIG, **overrides}
    x = _as_excesses(excesses, 'fit_gpd_mle')
    if x.size < cfg['min_mle_exceed']:
        raise InsufficientDataError(
            f"fit_gpd_mle: need at least {cfg['min_mle_exceed']} excesses, got {x.size}")
    if np.ptp(x) == 0.0:
        raise DegenerateSampleError("fit_gpd_mle: all excesses are equal, likelihood is unbounded")

    scale = float(x.mean())
    nll = _StandardizedNll(x / scale)

    if init is None:
        try:
            start = fit_gpd_pwm(nll.z).params
        except DataError:
            start = GpdParams(xi=cfg['restart_xi'], beta=1.0)
    else:
        start = GpdParams(xi=init.xi, beta=init.beta / scale)
    starts = [
        ('initial', _feasible_start(nll, start.xi, start.beta)),
        ('restart', _feasible_start(nll, cfg['restart_xi'], 1.0)),
    ]

    best = None
    ok = False
    for label, theta0 in starts:
        found = _simplex_search(nll, theta0, cfg)
        res, _, grad_norm, ok = found
        logger.debug("fit_gpd_mle: %s start %s -> xi=%.6g log_b=%.6g nll=%.10g grad=%.3g",
                     label, theta0, res.x[0], res.x[1], res.fun, grad_norm)
        if ok:
            best = found
            break
        if best is None or res.fun < best[0].fun:
            best = found
        logger.warning("fit_gpd_mle: %s start did not converge (gradient %.3g)", label, grad_norm)
    res, iterations, grad_norm, ok = best
    n_total = x.size if n_total is None else n_total

    # supremum on the xi = -1 edge: uniform on [0, max excess]
    if math.log(nll.z_max) <= res.fun:
        params = GpdParams(xi=-1.0, beta=float(x.max()))
        logger.warning("fit_gpd_mle: likelihood maximized on the xi = -1 boundary, beta = max excess %g",
                       params.beta)
        return GpdFit(params=params, threshold=threshold, n_total=n_total, n_exceed=x.size,
                      loglik=gpd_loglik(params, x), cov=None, converged=True, method='MLE',
                      iterations=iterations, gradient_norm=0.0, message='boundary optimum at xi = -1')

    xi_hat, log_b = float(res.x[0]), float(res.x[1])
    beta_hat = scale * math.exp(log_b)
    params = GpdParams(xi=xi_hat, beta=beta_hat)

    if not ok:
        if xi_hat > -0.5:
            raise NonConvergenceError(
                "fit_gpd_mle: simplex search failed from every start",
                best_point=params,
                best_value=-res.fun * nll.n - nll.n * math.log(scale),
            )
        # short tail: keep the best point, without covariance
        logger.warning("fit_gpd_mle: irregular optimum at xi=%.4g (gradient %.3g); no covariance",
                       xi_hat, grad_norm)
        return GpdFit(params=params, threshold=threshold, n_total=n_total, n_exceed=x.size,
                      loglik=gpd_loglik(params, x), cov=None, converged=False, method='MLE',
                      iterations=iterations, gradient_norm=grad_norm, message=res.message)

    hess = nll.hessian(res.x, cfg['hessian_rel_step'])
    cov = None
    try:
        cov_theta = np.linalg.inv(nll.n * hess)
        if np.all(np.linalg.eigvalsh(cov_theta) > 0):
            jac = np.diag([1.0, beta_hat])
            cov = jac @ cov_theta @ jac
    except np.linalg.LinAlgError:
        pass
    if cov is None:
        logger.warning("fit_gpd_mle: Hessian is not positive definite at xi=%.4g; no covariance", xi_hat)

    return GpdFit(
        params=params,
        threshold=threshold,
        n_total=n_total,
        n_exceed=x.size,
        loglik=gpd_loglik(params, x),
        cov=cov,
        converged=True,
        method='MLE',
        iterations=iterations,
        gradient_norm=grad_norm,
        message=res.message,
    )


def fit_exponential(excesses, threshold: float = 0.0, n_total: int | None = None) -> GpdFit:
    """The xi = 0 sub-model; closed-form MLE beta = mean excess."""
    x = _as_excesses(excesses, 'fit_exponential')
    if x.size == 0:
        raise InsufficientDataError("fit_exponential: no excesses")
    beta = float(x.mean())
    if not beta > 0:
        raise DegenerateSampleError("fit_exponential: mean excess is zero")
    params = GpdParams(xi=0.0, beta=beta)
    return GpdFit(
        params=params,
        threshold=threshold,
        n_total=x.size if n_total is None else n_total,
        n_exceed=x.size,
        loglik=gpd_loglik(params, x),
        cov=np.array([[0.0, 0.0], [0.0, beta ** 2 / x.size]]),
        converged=True,
        method='EXP',
    )


@dataclass(frozen=True)
class WaldInterval:
    estimate: float
    se: float
    lo: float
    hi: float
    z: float    # estimate / se


def wald_intervals(fit: GpdFit, level: float | None = None) -> dict:
    level = FIT_CONFIG['confidence_level'] if level is None else level
    if not 0.0 < level < 1.0:
        raise DomainError(f"wald_intervals: level must lie in (0, 1), got {level}")
    if fit.cov is None:
        raise InvalidInputError(f"wald_intervals: {fit.method} fit carries no covariance")
    crit = float(stats.norm.ppf(0.5 + level / 2.0))
    out = {}
    for name, est, se in (('xi', fit.params.xi, fit.se_xi), ('beta', fit.params.beta, fit.se_beta)):
        z = est / se if se > 0 else math.copysign(math.inf, est) if est else math.nan
        out[name] = WaldInterval(estimate=est, se=se, lo=est - crit * se, hi=est + crit * se, z=z)
    return out


# Hill

def _log_order_stats(data, op: str) -> np.ndarray:
    x = np.asarray(data, dtype=float).ravel()
    if x.size == 0 or np.any(~(x > 0)):
        raise DomainError(f"{op}: data must be positive")
    return np.sort(x)


def hill_estimator(data, k: int) -> float:
    """Mean log-spacing of the top k order statistics over the (k+1)-th."""
    x = _log_order_stats(data, 'hill_estimator')
    n = x.size
    if not 2 <= k < n:
        raise RangeError(f"hill_estimator: need 2 <= k < n, got k={k}, n={n}")
    return float(np.mean(np.log(x[n - k:] / x[n - k - 1])))


def hill_curve(data, ks) -> np.ndarray:
    x = _log_order_stats(data, 'hill_curve')
    n = x.size
    log_x = np.log(x)
    # suffix sums of the log order statistics
    tail_sums = np.cumsum(log_x[::-1])
    out = []
    for k in ks:
        k = int(k)
        if not 2 <= k < n:
            raise RangeError(f"hill_curve: need 2 <= k < n, got k={k}, n={n}")
        out.append(tail_sums[k - 1] / k - log_x[n - k - 1])
    return np.asarray(out, dtype=float)


# Spliced lognormal body / GPD tail, on the log scale

@dataclass
class SplicedFit:
    threshold: float
    floor: float | None
    mu: float
    sigma: float
    tail_weight: float
    tail: GpdFit
    n_total: int
    loglik: float
    converged: bool
    k: int = field(default=5, init=False)

    def to_dict(self) -> dict:
        return {
            'threshold': self.threshold,
            'floor': self.floor,
            'mu': self.mu,
            'sigma': self.sigma,
            'tail_weight': self.tail_weight,
            'tail': self.tail.to_dict(),
            'n_total': self.n_total,
            'loglik': self.loglik,
            'converged': self.converged,
            'k': self.k,
        }


def _truncated_normal_nll(theta, x, lo, hi):
    mu, log_sigma = theta
    sigma = math.exp(log_sigma)
    mass = stats.norm.cdf(hi, mu, sigma) - stats.norm.cdf(lo, mu, sigma)
    if not mass > 0:
        return math.inf
    return -(float(np.sum(stats.norm.logpdf(x, mu, sigma))) - x.size * math.log(mass))


def fit_spliced(values, u: float, floor: float | None = None) -> SplicedFit:
    """Normal body truncated to (floor, u] plus a GPD tail above u, weighted by the exceedance fraction."""
    x = np.asarray(values, dtype=float).ravel()
    if floor is not None:
        x = x[x > floor]
    body = x[x <= u]
    excesses = x[x > u] - u
    if body.size < 2 or np.ptp(body) == 0.0:
        raise InsufficientDataError(f"fit_spliced: body below u={u} has too few distinct values")
    tail = fit_gpd_mle(excesses, threshold=u, n_total=x.size)

    lo = -math.inf if floor is None else floor
    theta0 = np.array([body.mean(), math.log(body.std())])
    res = minimize(_truncated_normal_nll, theta0, args=(body, lo, u), method='Nelder-Mead',
                   options={'xatol': FIT_CONFIG['xatol'], 'fatol': 1e-10, 'maxiter': FIT_CONFIG['maxiter']})
    if not res.success:
        logger.warning("fit_spliced: body fit at u=%g did not converge: %s", u, res.message)

    p = excesses.size / x.size
    loglik = (-res.fun + body.size * math.log1p(-p) + excesses.size * math.log(p) + tail.loglik)
    return SplicedFit(
        threshold=u,
        floor=floor,
        mu=float(res.x[0]),
        sigma=math.exp(res.x[1]),
        tail_weight=p,
        tail=tail,
        n_total=x.size,
        loglik=float(loglik),
        converged=bool(res.success) and tail.converged,
    )


def score_models(fits, labels=None) -> list[ModelScore]:
    """AIC / deviance ranking. Only meaningful for fits to the same observations."""
    fits = list(fits)
    labels = [str(i) for i in range(len(fits))] if labels is None else list(labels)
    if len(labels) != len(fits):
        raise InvalidInputError("score_models: one label per fit is required")
    for fit, label in zip(fits, labels):
        if not fit.converged:
            raise InvalidInputError(f"score_models: fit '{label}' did not converge")
    if not fits:
        return []

    best_loglik = max(f.loglik for f in fits)
    scored = []
    for index, (fit, label) in enumerate(zip(fits, labels)):
        score = ModelScore(
            label=label,
            aic=2.0 * fit.k - 2.0 * fit.loglik,
            deviance=2.0 * (best_loglik - fit.loglik),
            k=fit.k,
            loglik=fit.loglik,
        )
        scored.append((score.aic, score.k, index, score))
    scored.sort(key=lambda item: item[:3])
    return [item[3] for item in scored]
