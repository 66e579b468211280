import math
import unittest

import numpy as np

from core.diagnostics import (
    SeriesKind, density_series, figure_series, hill_series, plotting_positions, pp_plot,
    qq_exponential, qq_gpd, return_level_series,
)
from core.distributions import GpdParams, gpd_pdf, gpd_quantile, gpd_sample, uniforms
from core.errors import InvalidInputError, RangeError
from core.fit import GpdFit, fit_exponential, fit_gpd_mle
from core.tail_risk import TailModel


def exact_fit(params, n=10000, cov=None):
    return GpdFit(params=params, threshold=0.0, n_total=n, n_exceed=n, loglik=0.0,
                  cov=cov, converged=True, method='MLE')


class QQExponentialTest(unittest.TestCase):

    def test_exact_quantiles_on_diagonal(self):
        theo = -np.log1p(-plotting_positions(50))
        series = qq_exponential(theo[::-1])
        np.testing.assert_allclose(series.x, series.y, atol=1e-12)
        self.assertAlmostEqual(series.meta['slope'], 1.0, places=9)
        self.assertEqual(series.kind, SeriesKind.QQExp)

    def test_concavity_sign(self):
        for seed in range(10):
            heavy = gpd_sample(GpdParams(0.5, 1.0), 2000, seed)
            self.assertEqual(qq_exponential(heavy).meta['concavity'], 1)
            self.assertEqual(qq_exponential(uniforms(2000, 100 + seed)).meta['concavity'], -1)


class FittedPlotsTest(unittest.TestCase):

    def setUp(self):
        self.params = GpdParams(0.2, 1.0)
        self.x = gpd_sample(self.params, 10000, 41)

    def test_pp_self_consistent(self):
        series = pp_plot(exact_fit(self.params), self.x)
        self.assertLess(series.meta['max_abs_dev'], 0.03)
        self.assertTrue(np.all(np.diff(series.x) > 0))

    def test_pp_misspecified(self):
        pareto = (1.0 - uniforms(10000, 42)) ** -0.5 - 1.0
        series = pp_plot(fit_exponential(pareto), pareto)
        self.assertGreater(series.meta['max_abs_dev'], 0.05)

    def test_pp_single_point(self):
        series = pp_plot(exact_fit(self.params), [1.0])
        self.assertEqual(series.points.shape, (1, 2))
        self.assertAlmostEqual(series.x[0], 0.5)

    def test_qq_gpd_slopes(self):
        self.assertAlmostEqual(qq_gpd(exact_fit(self.params), self.x).meta['slope'], 1.0, delta=0.05)
        self.assertAlmostEqual(qq_gpd(exact_fit(self.params), 2.0 * self.x).meta['slope'], 2.0, delta=0.1)
        self.assertEqual(qq_gpd(exact_fit(self.params), [0.3]).points.shape, (1, 2))

    def test_requires_converged_fit(self):
        fit = exact_fit(self.params)
        fit.converged = False
        with self.assertRaises(InvalidInputError):
            pp_plot(fit, self.x)
        with self.assertRaises(InvalidInputError):
            qq_gpd(fit, self.x)


class ReturnLevelSeriesTest(unittest.TestCase):

    def test_exponential_linear_in_log_period(self):
        m = TailModel(u=0.0, xi=0.0, beta=1.0, n=1000, n_u=100)
        periods = np.array([10.0, 100.0, 1000.0, 10000.0])
        series = return_level_series(m, np.eye(2) * 1e-4, periods)
        steps = np.diff(series.y)
        np.testing.assert_allclose(steps, math.log(10.0), rtol=1e-9)

    def test_heavy_tail_convex(self):
        m = TailModel(u=0.0, xi=0.3, beta=1.0, n=1000, n_u=100)
        series = return_level_series(m, np.eye(2) * 1e-4, [10.0, 100.0, 1000.0, 10000.0])
        self.assertTrue(np.all(np.diff(series.y, 2) > 0))

    def test_zero_covariance_collapses_bands(self):
        m = TailModel(u=1.0, xi=0.1, beta=2.0, n=1000, n_u=100)
        series = return_level_series(m, np.zeros((2, 2)))
        np.testing.assert_allclose(series.bands[:, 1], series.y)
        np.testing.assert_allclose(series.bands[:, 2], series.y)

    def test_bands_bracket_curve(self):
        fit = fit_gpd_mle(gpd_sample(GpdParams(0.1, 1.0), 2000, 43), threshold=0.0, n_total=20000)
        series = return_level_series(TailModel.from_fit(fit), fit.cov, [20.0, 100.0, 1000.0])
        self.assertTrue(np.all(series.bands[:, 1] < series.y))
        self.assertTrue(np.all(series.y < series.bands[:, 2]))
        self.assertEqual(list(series.to_frame().columns), ['x', 'y', 'lo', 'hi'])

    def test_infeasible_periods_skipped(self):
        m = TailModel(u=0.0, xi=0.1, beta=1.0, n=1000, n_u=100)
        series = return_level_series(m, np.zeros((2, 2)), [2.0, 5.0, 50.0])
        self.assertEqual(list(series.x), [50.0])

    def test_requires_covariance(self):
        m = TailModel(u=0.0, xi=0.1, beta=1.0, n=1000, n_u=100)
        with self.assertRaises(InvalidInputError):
            return_level_series(m, None)


class DensityTest(unittest.TestCase):

    def test_histogram_area(self):
        x = gpd_sample(GpdParams(0.1, 1.0), 5000, 44)
        hist = density_series(exact_fit(GpdParams(0.1, 1.0)), x, bins=30)['histogram']
        self.assertAlmostEqual(float(np.sum(hist.y) * hist.meta['bin_width']), 1.0, delta=1e-9)

    def test_matches_model_density(self):
        params = GpdParams(-0.2, 1.0)
        x = gpd_sample(params, 100000, 45)
        hist = density_series(exact_fit(params), x, bins=50)['histogram']
        self.assertLess(float(np.max(np.abs(hist.y - gpd_pdf(params, hist.x)))), 0.05)

    def test_single_bin(self):
        x = np.array([0.5, 1.0, 2.5])
        hist = density_series(exact_fit(GpdParams(0.0, 1.0)), x, bins=1)['histogram']
        self.assertEqual(hist.points.shape, (1, 2))
        self.assertAlmostEqual(hist.y[0], 1 / 2.0)

    def test_bins_must_be_positive(self):
        with self.assertRaises(RangeError):
            density_series(exact_fit(GpdParams(0.0, 1.0)), [1.0, 2.0], bins=0)


class FigureSeriesTest(unittest.TestCase):

    def test_keys(self):
        x = gpd_sample(GpdParams(0.1, 1.0), 3000, 46)
        fit = fit_gpd_mle(x, n_total=30000)
        series = figure_series(fit, x)
        self.assertEqual(set(series), {'pp', 'qqgpd', 'return_level', 'histogram', 'density'})
        for s in series.values():
            self.assertIn('points', s.to_dict())

    def test_no_covariance_skips_return_levels(self):
        params = GpdParams(0.1, 1.0)
        x = gpd_quantile(params, plotting_positions(200))
        self.assertNotIn('return_level', figure_series(exact_fit(params, n=200), x))

    def test_hill_series(self):
        x = (1.0 - uniforms(2000, 47)) ** -0.5
        series = hill_series(x, ks=[10, 100, 500])
        self.assertEqual(series.kind, SeriesKind.Hill)
        self.assertEqual(list(series.x), [10.0, 100.0, 500.0])
        self.assertAlmostEqual(series.y[-1], 0.5, delta=0.1)


if __name__ == '__main__':
    unittest.main()
