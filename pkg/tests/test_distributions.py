import math
import unittest

import numpy as np
from scipy.integrate import quad

from core.distributions import (
    GevParams, GpdParams, excess_params, gev_cdf, gev_quantile, gev_sample, gpd_cdf,
    gpd_logpdf, gpd_moments, gpd_pdf, gpd_quantile, gpd_sample, gpd_survival, gpd_tail_quantile,
)
from core.errors import DomainError, InvalidParameterError


class GpdKernelTest(unittest.TestCase):

    def test_cdf_examples(self):
        self.assertAlmostEqual(gpd_cdf(GpdParams(0.0, 2.0), 2.0), 1 - math.exp(-1), places=12)
        self.assertAlmostEqual(gpd_cdf(GpdParams(1.0, 1.0), 1.0), 0.5, places=12)
        self.assertEqual(gpd_cdf(GpdParams(-1.0, 1.0), 1.0), 1.0)

    def test_pdf_examples(self):
        self.assertAlmostEqual(gpd_pdf(GpdParams(0.0, 1.0), 0.0), 1.0, places=12)
        self.assertAlmostEqual(gpd_pdf(GpdParams(1.0, 1.0), 1.0), 0.25, places=12)
        self.assertEqual(gpd_pdf(GpdParams(-1.0, 1.0), 2.0), 0.0)

    def test_quantile_examples(self):
        self.assertAlmostEqual(gpd_quantile(GpdParams(0.0, 1.0), 1 - math.exp(-1)), 1.0, places=12)
        self.assertAlmostEqual(gpd_quantile(GpdParams(1.0, 1.0), 0.5), 1.0, places=12)
        self.assertAlmostEqual(gpd_quantile(GpdParams(0.5, 2.0), 0.75), 4.0, places=12)

    def test_outside_support_clamps(self):
        p = GpdParams(-0.5, 1.0)
        self.assertEqual(gpd_cdf(p, -1.0), 0.0)
        self.assertEqual(gpd_cdf(p, 3.0), 1.0)
        self.assertEqual(gpd_survival(p, 3.0), 0.0)
        self.assertEqual(gpd_logpdf(p, 3.0), -math.inf)
        self.assertEqual(gpd_logpdf(p, -0.1), -math.inf)

    def test_cdf_quantile_round_trip(self):
        qs = np.linspace(0.001, 0.999, 60)
        for xi in (-0.4, -0.1, 0.0, 0.2, 0.7):
            p = GpdParams(xi, 1.3)
            back = gpd_cdf(p, gpd_quantile(p, qs))
            np.testing.assert_allclose(back, qs, rtol=0, atol=1e-12)

    def test_tail_quantile_matches_quantile(self):
        p = GpdParams(0.3, 2.0)
        us = np.array([0.5, 0.1, 1e-3])
        np.testing.assert_allclose(gpd_tail_quantile(p, us), gpd_quantile(p, 1 - us), rtol=1e-12)

    def test_pdf_integrates_to_one(self):
        for xi in (-0.3, 0.0, 0.3):
            p = GpdParams(xi, 1.0)
            upper = p.upper_endpoint
            if math.isinf(upper):
                total = quad(lambda x: gpd_pdf(p, x), 0, 10)[0] + quad(lambda x: gpd_pdf(p, x), 10, math.inf)[0]
            else:
                total = quad(lambda x: gpd_pdf(p, x), 0, upper)[0]
            self.assertAlmostEqual(total, 1.0, delta=1e-6)

    def test_shape_continuity_at_zero(self):
        x = np.linspace(0, 10, 41)
        near = gpd_cdf(GpdParams(1e-9, 1.0), x)
        exact = gpd_cdf(GpdParams(0.0, 1.0), x)
        np.testing.assert_allclose(near, exact, atol=1e-7)

    def test_threshold_stability(self):
        p = GpdParams(0.3, 2.0)
        for u in (0.5, 1.5, 4.0):
            y = np.linspace(0, 20, 25)
            conditional = gpd_survival(p, u + y) / gpd_survival(p, u)
            np.testing.assert_allclose(conditional, gpd_survival(excess_params(p, u), y), rtol=1e-12)

    def test_moments(self):
        m = gpd_moments(GpdParams(0.5, 1.0))
        self.assertAlmostEqual(m.mean, 2.0)
        self.assertEqual(m.variance, math.inf)
        m = gpd_moments(GpdParams(0.0, 3.0))
        self.assertAlmostEqual(m.mean, 3.0)
        self.assertAlmostEqual(m.variance, 9.0)
        self.assertEqual(gpd_moments(GpdParams(1.0, 1.0)).mean, math.inf)

    def test_invalid_parameters(self):
        with self.assertRaises(InvalidParameterError):
            gpd_cdf(GpdParams(0.1, 0.0), 1.0)
        with self.assertRaises(InvalidParameterError):
            gpd_quantile(GpdParams(math.nan, 1.0), 0.5)
        with self.assertRaises(DomainError):
            gpd_quantile(GpdParams(0.1, 1.0), 1.0)
        with self.assertRaises(DomainError):
            gpd_quantile(GpdParams(0.1, 1.0), -0.1)
        # ValueError callers catch it too
        with self.assertRaises(ValueError):
            gpd_quantile(GpdParams(0.1, 1.0), 2.0)


class SamplingTest(unittest.TestCase):

    def test_empty_sample(self):
        self.assertEqual(gpd_sample(GpdParams(0.2, 1.0), 0, 1).size, 0)
        self.assertEqual(gev_sample(GevParams(0.0), 0, 1).size, 0)

    def test_same_seed_same_sample(self):
        p = GpdParams(0.2, 1.0)
        np.testing.assert_array_equal(gpd_sample(p, 100, 42), gpd_sample(p, 100, 42))
        self.assertFalse(np.array_equal(gpd_sample(p, 100, 42), gpd_sample(p, 100, 43)))

    def test_exponential_mean(self):
        x = gpd_sample(GpdParams(0.0, 1.0), 100000, 7)
        self.assertAlmostEqual(x.mean(), 1.0, delta=0.03)

    def test_bounded_support(self):
        x = gpd_sample(GpdParams(-0.5, 1.0), 10000, 7)
        self.assertLessEqual(x.max(), 2.0)
        self.assertGreaterEqual(x.min(), 0.0)


class GevTest(unittest.TestCase):

    def test_cdf_examples(self):
        self.assertAlmostEqual(gev_cdf(GevParams(0.0), 0.0), math.exp(-1), places=12)
        self.assertAlmostEqual(gev_cdf(GevParams(1.0), 0.0), math.exp(-1), places=12)
        self.assertEqual(gev_cdf(GevParams(-1.0), 2.0), 1.0)
        self.assertEqual(gev_cdf(GevParams(0.5), -3.0), 0.0)

    def test_round_trip(self):
        qs = np.linspace(0.01, 0.99, 30)
        for gamma in (-0.5, 0.0, 0.4):
            g = GevParams(gamma)
            np.testing.assert_allclose(gev_cdf(g, gev_quantile(g, qs)), qs, atol=1e-12)

    def test_gumbel_median(self):
        x = gev_sample(GevParams(0.0), 100000, 3)
        self.assertAlmostEqual(float(np.median(x)), -math.log(math.log(2)), delta=0.02)

    def test_frechet_support(self):
        x = gev_sample(GevParams(0.2), 10000, 3)
        self.assertTrue(np.all(x > -1 / 0.2))


if __name__ == '__main__':
    unittest.main()
