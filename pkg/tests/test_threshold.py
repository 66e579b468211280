import unittest

import numpy as np

from core.distributions import GpdParams, gpd_quantile, gpd_sample, uniforms
from core.errors import InsufficientDataError, InvalidInputError, NoExceedanceError
from core.portfolio import simulate_portfolio
from core.threshold import (
    default_u_grid, empirical_mean_excess, exceedance_count_check, exceedances, lmoment_curve,
    mrl_curve, stability_curve, suggest_threshold,
)
from utils.helpers import parse_grid


class ExceedanceTest(unittest.TestCase):

    def test_examples(self):
        sample = exceedances([1, 2, 3, 4], 2.5)
        np.testing.assert_allclose(sample.excesses, [0.5, 1.5])
        self.assertEqual(sample.n_exceed, 2)
        self.assertEqual(sample.n_total, 4)
        self.assertEqual(exceedances([1, 2], 5).n_exceed, 0)

    def test_fraction(self):
        p = GpdParams(0.2, 1.0)
        x = gpd_sample(p, 10000, 1)
        sample = exceedances(x, gpd_quantile(p, 0.9))
        self.assertAlmostEqual(sample.n_exceed / sample.n_total, 0.1, delta=0.01)

    def test_mean_excess(self):
        self.assertAlmostEqual(empirical_mean_excess([1, 2, 3, 4], 2), 1.5)
        x = gpd_sample(GpdParams(0.0, 1.0), 100000, 2)
        self.assertAlmostEqual(empirical_mean_excess(x, 2.0), 1.0, delta=0.05)
        with self.assertRaises(NoExceedanceError):
            empirical_mean_excess([1, 2], 5)

    def test_translation_equivariance(self):
        x = np.array([0.5, 1.25, 2.0, 3.5, 7.0])
        self.assertEqual(empirical_mean_excess(x + 4.0, 5.0), empirical_mean_excess(x, 1.0))

    def test_scale_equivariance(self):
        x = gpd_sample(GpdParams(0.2, 1.0), 5000, 11)
        s = 3.0
        self.assertAlmostEqual(empirical_mean_excess(s * x, s * 1.5), s * empirical_mean_excess(x, 1.5), delta=1e-12)


class MrlTest(unittest.TestCase):

    def _slope(self, points):
        u = np.array([p.u for p in points])
        e = np.array([p.mean_excess for p in points])
        return np.polyfit(u, e, 1)[0]

    def test_constant_data(self):
        points = mrl_curve([5, 5, 5], [4], min_exceed=1)
        self.assertEqual(len(points), 1)
        self.assertAlmostEqual(points[0].mean_excess, 1.0)

    def test_gpd_slope(self):
        p = GpdParams(0.25, 1.0)
        x = gpd_sample(p, 100000, 3)
        points = mrl_curve(x, np.linspace(0, gpd_quantile(p, 0.9), 20))
        self.assertAlmostEqual(self._slope(points), 1 / 3, delta=0.1)

    def test_exponential_flat(self):
        p = GpdParams(0.0, 1.0)
        x = gpd_sample(p, 100000, 4)
        points = mrl_curve(x, np.linspace(0, gpd_quantile(p, 0.95), 20))
        self.assertAlmostEqual(self._slope(points), 0.0, delta=0.05)
        for point in points:
            self.assertAlmostEqual(point.mean_excess, 1.0, delta=0.1)

    def test_min_exceed_filters(self):
        points = mrl_curve(np.arange(100.0), [10.0, 80.0, 95.0], min_exceed=10)
        self.assertEqual([p.u for p in points], [10.0, 80.0])

    def test_unsorted_grid(self):
        with self.assertRaises(InvalidInputError):
            mrl_curve([1, 2, 3], [2.0, 1.0])


class StabilityTest(unittest.TestCase):

    def test_modified_scale_invariant(self):
        x = gpd_sample(GpdParams(0.3, 1.0), 20000, 5)
        curve = stability_curve(x, np.linspace(0.0, 1.0, 5))
        self.assertEqual(len(curve), 5)
        self.assertEqual(curve.skipped, 0)
        for point in curve:
            self.assertAlmostEqual(point.xi_hat, 0.3, delta=0.08)
            self.assertLess(abs(point.sigma_star - 1.0), 2 * point.se_sigma_star)
        sigmas = [p.sigma_star for p in curve]
        self.assertLess(max(sigmas) - min(sigmas), 0.1)
        xis = [p.xi_hat for p in curve]
        self.assertLess(max(xis) - min(xis), 0.08)

    def test_exponential_shape(self):
        x = gpd_sample(GpdParams(0.0, 1.0), 20000, 6)
        for point in stability_curve(x, np.linspace(0.0, 2.0, 5)):
            self.assertAlmostEqual(point.xi_hat, 0.0, delta=0.08)

    def test_tiny_data_empty(self):
        curve = stability_curve(np.arange(10.0), [1.0, 2.0])
        self.assertEqual(len(curve), 0)

    def test_threads_keep_grid_order(self):
        x = gpd_sample(GpdParams(0.1, 1.0), 5000, 7)
        grid = np.linspace(0.0, 1.5, 6)
        serial = stability_curve(x, grid, n_jobs=1)
        threaded = stability_curve(x, grid, n_jobs=3)
        self.assertEqual([p.u for p in threaded], list(grid))
        self.assertEqual([p.xi_hat for p in serial], [p.xi_hat for p in threaded])

    def test_uniform_boundary_fits_kept(self):
        curve = stability_curve(uniforms(20000, 3), np.linspace(0.5, 0.95, 10))
        self.assertEqual(curve.skipped, 0)
        self.assertEqual(len(curve), 10)
        for point in curve:
            self.assertAlmostEqual(point.xi_hat, -1.0, delta=0.05)


class LmomentCurveTest(unittest.TestCase):

    def test_gpd_on_curve(self):
        x = gpd_sample(GpdParams(0.2, 1.0), 100000, 8)
        points = lmoment_curve(x, [0.0, 0.5, 1.0])
        for point in points:
            self.assertEqual(point.n_u, int(np.count_nonzero(x > point.u)))
            self.assertLess(abs(point.tau4 - point.tau4_gpd), 0.03)

    def test_below_min_exceed(self):
        self.assertEqual(lmoment_curve(np.arange(20.0), [5.0, 10.0]), [])


class CountCheckTest(unittest.TestCase):

    def test_poisson_dispersion(self):
        n = 10000
        batches = uniforms(500 * n, 9).reshape(500, n)
        check = exceedance_count_check(batches, 1.0 - 5.0 / n)
        self.assertAlmostEqual(check.mean_count, 5.0, delta=0.5)
        self.assertGreaterEqual(check.dispersion_ratio, 0.8)
        self.assertLessEqual(check.dispersion_ratio, 1.2)

    def test_duplicated_batch(self):
        batch = [1.0, 2.0, 3.0, 4.0]
        check = exceedance_count_check([batch, batch], 2.5)
        self.assertEqual(check.var_count, 0.0)
        self.assertEqual(check.dispersion_ratio, 0.0)

    def test_no_exceedances(self):
        check = exceedance_count_check([[1.0, 2.0], [0.5]], 10.0)
        self.assertEqual(check.mean_count, 0.0)
        self.assertTrue(np.isnan(check.dispersion_ratio))

    def test_single_batch(self):
        with self.assertRaises(InsufficientDataError):
            exceedance_count_check([[1.0, 2.0]], 1.5)


class SuggestThresholdTest(unittest.TestCase):

    def test_exact_gpd_near_grid_minimum(self):
        x = gpd_sample(GpdParams(0.1, 1.0), 20000, 10)
        grid = np.linspace(0.0, 2.0, 9)
        suggestion = suggest_threshold(x, grid)
        self.assertTrue(suggestion.found)
        self.assertLessEqual(suggestion.u_star, grid[2])

    def test_spliced_portfolio(self):
        values = simulate_portfolio(seed=1).log_sizes
        grid = parse_grid('7.5:10:11')
        suggestion = suggest_threshold(values, grid)
        self.assertTrue(suggestion.found)
        self.assertLessEqual(abs(suggestion.u_star - 8.5), 0.25 + 1e-9)

    def test_fallback_to_grid_maximum(self):
        suggestion = suggest_threshold(np.arange(20.0), [1.0, 5.0])
        self.assertFalse(suggestion.found)
        self.assertEqual(suggestion.u_star, 5.0)
        self.assertEqual(suggestion.scores, [])

    def test_uniform_data_keeps_score_table(self):
        grid = np.linspace(0.5, 0.95, 10)
        suggestion = suggest_threshold(uniforms(20000, 3), grid)
        self.assertEqual([s.u for s in suggestion.scores], list(grid))
        self.assertEqual(suggestion.scores[-1].u, grid[-1])
        for score in suggestion.scores:
            self.assertLess(score.xi_hat, -0.5)
        self.assertIn(suggestion.u_star, list(grid))

    def test_default_grid(self):
        grid = default_u_grid(np.arange(1001.0), points=5)
        np.testing.assert_allclose(grid, np.linspace(500.0, 995.0, 5))


if __name__ == '__main__':
    unittest.main()
