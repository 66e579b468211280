"""tailrisk batch command line.

    python app.py <subcommand> [--input claims.csv | --simulate-config sim.json] [options]

Analyses run on natural-log claim sizes unless ``--scale raw`` is given.  Every
run writes ``run_manifest.json`` into the output directory, whatever its outcome.
Exit codes: 0 success, 2 usage error, 3 data error, 4 non-convergence.
"""
import argparse
import logging
import os
import sys
from dataclasses import dataclass

import numpy as np
import pandas as pd

from config import DIAG_CONFIG, DOA_CONFIG, OUTPUT_CONFIG, RISK_CONFIG
from core.cache import FitCache
from core.cdf_specs import build_spec
from core.diagnostics import figure_series, hill_series, qq_exponential
from core.doa import Domain, classify_domain, maxima_limit_check
from core.errors import InvalidInputError, TailRiskError
from core.export import records_frame, write_csv, write_output
from core.fit import fit_exponential, fit_gpd_mle, fit_gpd_pwm, fit_spliced, score_models, wald_intervals
from core.metadata import RunManifest
from core.portfolio import (
    GROUPINGS, SimulationConfig, group, load_csv, load_simulation_config, simulate_portfolio, summarize,
)
from core.tail_risk import TailModel, risk_table
from core.threshold import (
    default_u_grid, exceedances, lmoment_curve, mrl_curve, stability_curve, suggest_threshold,
)
from utils.helpers import check_probabilities, parse_float_list, parse_grid, slug

logger = logging.getLogger('tailrisk')


@dataclass
class RunContext:
    args: argparse.Namespace
    manifest: RunManifest
    out_dir: str
    fmt: str
    _cache: FitCache = None

    @property
    def cache(self):
        if self._cache is None:
            self._cache = FitCache(os.path.join(self.out_dir, OUTPUT_CONFIG['cache_filename']))
        return self._cache

    def emit(self, name, kind, frame=None, payload=None, fmt=None):
        path = write_output(f"{name}_{kind}", self.out_dir, fmt or self.fmt, frame=frame, payload=payload)
        self.manifest.add_output(path)
        return path


# Data selection

def _datasets(ctx):
    """(name, values) per requested group, on the analysis scale"""
    args = ctx.args
    if bool(args.input) == bool(args.simulate_config):
        raise InvalidInputError("exactly one of --input / --simulate-config is required")
    if args.input:
        portfolio = load_csv(args.input)
        ctx.manifest.record_input(args.input)
        dataset = args.dataset or os.path.splitext(os.path.basename(args.input))[0]
    else:
        cfg = _simulation_config(args.simulate_config, ctx)
        portfolio = simulate_portfolio(cfg, seed=args.seed)
        dataset = args.dataset or 'simulated'
    ctx.manifest.record_setting('dataset', dataset)
    ctx.manifest.record_setting('scale', args.scale)

    out = []
    for label, part in group(portfolio, args.group_by).items():
        name = dataset if args.group_by == 'none' else f"{dataset}_{slug(label)}"
        values = part.log_sizes if args.scale == 'log' else part.claim_sizes
        logger.info("%s: %d claims", name, values.size)
        out.append((name, values))
    if not out:
        raise InvalidInputError("no claims to analyse")
    return out


def _simulation_config(spec, ctx):
    if spec in (None, 'default'):
        return SimulationConfig()
    ctx.manifest.record_input(spec)
    return load_simulation_config(spec)


def _grid(ctx, values):
    if ctx.args.u_grid:
        return parse_grid(ctx.args.u_grid)
    return default_u_grid(values)


def _fit(ctx, name, values, u, method='mle', refit=False):
    """GPD fit of the excesses over u; MLE fits are shared through the fit cache"""
    sample = exceedances(values, u)
    if method == 'pwm':
        return fit_gpd_pwm(sample.excesses, threshold=u, n_total=sample.n_total)
    if method == 'exp':
        return fit_exponential(sample.excesses, threshold=u, n_total=sample.n_total)
    if not refit:
        cached = ctx.cache.get_fit(name, u, values)
        if cached is not None:
            logger.info("%s: reusing cached fit at u=%g", name, u)
            return cached
    fit = fit_gpd_mle(sample.excesses, threshold=u, n_total=sample.n_total)
    ctx.cache.update_fit(name, u, values, fit)
    ctx.cache.save_cache()
    ctx.manifest.add_output(ctx.cache.cache_file)
    return fit


# Subcommands

def cmd_summary(ctx):
    rows = []
    for name, values in _datasets(ctx):
        stats = summarize(values)
        ctx.emit(name, 'summary', frame=records_frame([stats]), payload=stats)
        rows.append({'dataset': name, **stats.to_dict()})
    print(pd.DataFrame(rows).to_string(index=False, float_format=lambda v: f"{v:.4f}"))


def cmd_mrl(ctx):
    for name, values in _datasets(ctx):
        points = mrl_curve(values, _grid(ctx, values), ctx.args.min_exceed)
        ctx.emit(name, 'mrl', frame=records_frame(points).reindex(columns=['u', 'mean_excess', 'n_u', 'sd_excess']))


def cmd_stability(ctx):
    for name, values in _datasets(ctx):
        curve = stability_curve(values, _grid(ctx, values), ctx.args.min_exceed, n_jobs=ctx.args.n_jobs)
        if curve.skipped:
            logger.warning("%s: %d thresholds skipped (fit failed)", name, curve.skipped)
        columns = ['u', 'sigma_star', 'xi_hat', 'se_sigma_star', 'se_xi', 'n_u']
        ctx.emit(name, 'stability', frame=records_frame(curve.points).reindex(columns=columns),
                 payload={'points': curve.points, 'skipped': curve.skipped})


def cmd_lmom(ctx):
    for name, values in _datasets(ctx):
        points = lmoment_curve(values, _grid(ctx, values), ctx.args.min_exceed)
        ctx.emit(name, 'lmom', frame=records_frame(points).reindex(columns=['u', 'tau3', 'tau4', 'tau4_gpd', 'n_u']))


def cmd_qqexp(ctx):
    for name, values in _datasets(ctx):
        series = qq_exponential(values)
        ctx.emit(name, 'qqexp', frame=series.to_frame(), payload=series.to_dict())
        logger.info("%s: QQ-exponential concavity %+d", name, series.meta['concavity'])


def cmd_fit(ctx):
    for name, values in _datasets(ctx):
        fit = _fit(ctx, name, values, ctx.args.u, ctx.args.method, refit=True)
        payload = {'dataset': name, 'scale': ctx.args.scale, **fit.to_dict()}
        if fit.cov is not None:
            payload['wald'] = wald_intervals(fit)
        ctx.emit(name, 'fit', payload=payload, fmt='json')
        logger.info("%s: xi=%.4f beta=%.4f (n_u=%d, reliable=%s)",
                    name, fit.params.xi, fit.params.beta, fit.n_exceed, fit.reliable)


def cmd_select(ctx):
    args = ctx.args
    for name, values in _datasets(ctx):
        suggestion = suggest_threshold(values, _grid(ctx, values), args.min_exceed, n_jobs=args.n_jobs)
        ctx.emit(name, 'suggest', frame=records_frame(suggestion.scores),
                 payload={'u_star': suggestion.u_star, 'found': suggestion.found, 'scores': suggestion.scores})
        logger.info("%s: suggested threshold %g (found=%s)", name, suggestion.u_star, suggestion.found)
        if not args.candidates:
            continue
        candidates = parse_float_list(args.candidates)
        fits = [fit_spliced(values, u, floor=args.floor) for u in candidates]
        scores = score_models(fits, labels=[f"u={u:g}" for u in candidates])
        ctx.emit(name, 'select', frame=records_frame(scores),
                 payload={'scores': scores, 'fits': {f"u={u:g}": f for u, f in zip(candidates, fits)}})
        logger.info("%s: best model %s (AIC %.2f)", name, scores[0].label, scores[0].aic)


def cmd_var(ctx):
    qs = check_probabilities(parse_float_list(ctx.args.q) if ctx.args.q else RISK_CONFIG['q_list'], 'var')
    for name, values in _datasets(ctx):
        fit = _fit(ctx, name, values, ctx.args.u)
        table = risk_table(TailModel.from_fit(fit), qs)
        ctx.emit(name, 'var', frame=records_frame(table))


def cmd_diagnose(ctx):
    args = ctx.args
    periods = parse_float_list(args.periods) if args.periods else None
    for name, values in _datasets(ctx):
        fit = _fit(ctx, name, values, args.u)
        excesses = exceedances(values, args.u).excesses
        series = figure_series(fit, excesses, periods=periods, r=args.obs_per_period, bins=args.bins)
        sizes = np.exp(values) if args.scale == 'log' else values
        if np.all(sizes > 0) and sizes.size >= 4:
            series['hill'] = hill_series(sizes)
        for kind, s in series.items():
            if ctx.fmt == 'csv':
                ctx.emit(name, kind, frame=s.to_frame())
        combined = {'dataset': name, 'fit': fit.to_dict(), 'series': {k: s.to_dict() for k, s in series.items()}}
        fit_file = os.path.join(ctx.out_dir, f"{name}_fit.json")
        if os.path.exists(fit_file):
            combined['fit_file'] = os.path.basename(fit_file)
        ctx.emit(name, 'diagnostics', payload=combined, fmt='json')


def cmd_simulate(ctx):
    args = ctx.args
    cfg = _simulation_config(args.simulate_config, ctx)
    if args.n is not None:
        cfg = SimulationConfig.from_dict({**cfg.to_dict(), 'n': args.n})
    portfolio = simulate_portfolio(cfg, seed=args.seed)
    ctx.manifest.record_setting('simulation', cfg.to_dict())
    path = write_csv(portfolio.to_frame(), os.path.join(ctx.out_dir, OUTPUT_CONFIG['simulated_filename']))
    ctx.manifest.add_output(path)


def cmd_classify_doa(ctx):
    rows = []
    for text in ctx.args.spec:
        spec = build_spec(text)
        verdict = classify_domain(spec, acceptance_residual=ctx.args.acceptance)
        row = {'spec': text, **verdict.to_dict(), 'maxima_gap': float('nan')}
        if verdict.classified_domain is not Domain.Unclassified:
            row['maxima_gap'] = maxima_limit_check(spec, ctx.args.n_maxima, verdict)
        logger.info("%s: %s (gamma %.4g via %s)", text, verdict.classified_domain.value,
                    verdict.gamma_hat, verdict.criterion_used.value)
        rows.append(row)
    path = write_output('classify_doa', ctx.out_dir, ctx.fmt, frame=pd.DataFrame(rows), payload=rows)
    ctx.manifest.add_output(path)


COMMANDS = {
    'summary': cmd_summary,
    'mrl': cmd_mrl,
    'stability': cmd_stability,
    'lmom': cmd_lmom,
    'qqexp': cmd_qqexp,
    'fit': cmd_fit,
    'select': cmd_select,
    'var': cmd_var,
    'diagnose': cmd_diagnose,
    'simulate': cmd_simulate,
    'classify-doa': cmd_classify_doa,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--out-dir', default=OUTPUT_CONFIG['out_dir'])
    common.add_argument('--format', choices=['csv', 'json'], default=OUTPUT_CONFIG['format'])
    common.add_argument('--seed', type=int, default=0)
    common.add_argument('--verbose', action='store_true')

    data = argparse.ArgumentParser(add_help=False)
    source = data.add_mutually_exclusive_group()
    source.add_argument('--input', help='claims CSV')
    source.add_argument('--simulate-config', help="simulator JSON, or 'default'")
    data.add_argument('--group-by', choices=GROUPINGS, default='none')
    data.add_argument('--scale', choices=['log', 'raw'], default='log')
    data.add_argument('--dataset', help='output name prefix (default: input file stem)')

    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument('--u-grid', help='lo:hi:steps (default: 50th-99.5th percentile)')
    grid.add_argument('--min-exceed', type=int, default=DIAG_CONFIG['min_exceed'])
    grid.add_argument('--n-jobs', type=int, default=DIAG_CONFIG['n_jobs'])

    threshold = argparse.ArgumentParser(add_help=False)
    threshold.add_argument('--u', type=float, required=True)

    parser = argparse.ArgumentParser(prog='app.py', description='Peaks-over-threshold claim severity analysis')
    sub = parser.add_subparsers(dest='command', required=True)
    sub.add_parser('summary', parents=[common, data])
    sub.add_parser('mrl', parents=[common, data, grid])
    sub.add_parser('stability', parents=[common, data, grid])
    sub.add_parser('lmom', parents=[common, data, grid])
    sub.add_parser('qqexp', parents=[common, data])

    p = sub.add_parser('fit', parents=[common, data, threshold])
    p.add_argument('--method', choices=['mle', 'pwm', 'exp'], default='mle')

    p = sub.add_parser('select', parents=[common, data, grid])
    p.add_argument('--candidates', nargs='+', help='thresholds ranked by AIC of the spliced model')
    p.add_argument('--floor', type=float, default=None, help='ignore observations at or below this value')

    p = sub.add_parser('var', parents=[common, data, threshold])
    p.add_argument('--q', nargs='+', help='probabilities (default 0.95 0.99 0.995)')

    p = sub.add_parser('diagnose', parents=[common, data, threshold])
    p.add_argument('--obs-per-period', type=float, default=RISK_CONFIG['obs_per_period'])
    p.add_argument('--periods', nargs='+')
    p.add_argument('--bins', type=int, default=DIAG_CONFIG['bins'])

    p = sub.add_parser('simulate', parents=[common])
    p.add_argument('--simulate-config', default='default')
    p.add_argument('--n', type=int, default=None)

    p = sub.add_parser('classify-doa', parents=[common])
    p.add_argument('--spec', nargs='+', required=True,
                   help='exponential, pareto:alpha, uniform, normal, gpd:xi,beta, lognormal:mu,sigma')
    p.add_argument('--acceptance', type=float, default=DOA_CONFIG['acceptance_residual'])
    p.add_argument('--n-maxima', type=int, default=1000)
    return parser


def configure_logging(verbose):
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO,
                        format='[%(name)s] %(message)s', force=True)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    configure_logging(args.verbose)

    manifest = RunManifest(args.command, argv)
    manifest.record_setting('seed', args.seed)
    ctx = RunContext(args=args, manifest=manifest, out_dir=args.out_dir, fmt=args.format)
    code, error = 0, None
    try:
        with manifest.stage(args.command):
            COMMANDS[args.command](ctx)
    except TailRiskError as e:
        code, error = e.exit_code, e
        logger.error("%s failed: %s", args.command, e)
    except OSError as e:
        code, error = 1, e
        logger.error("%s failed: %s", args.command, e)
    finally:
        manifest.finish(code, error)
        try:
            manifest.write(args.out_dir)
        except OSError as e:
            logger.error("could not write run manifest: %s", e)
    return code


if __name__ == "__main__":
    sys.exit(main())
