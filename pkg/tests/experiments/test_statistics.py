#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
推定と検定のテスト
"""

import math
import unittest

import numpy as np
import pytest

from core.lattice import RngStream
from experiments.statistics import (
    binomial_interval,
    complement,
    dominating_constant,
    estimate_frequency,
    fit_loglog_slope,
    frequency_from_counts,
    ks_against,
    ks_exponential,
    tail_estimates,
)
from utils.error_handler import InvalidParameterError


class TestBinomialInterval(unittest.TestCase):
    """信頼区間"""

    def test_zero_successes_use_clopper_pearson(self):
        """成功 0 回の上限は 1 − (α/2)^{1/n}"""
        for n in (1, 10, 250):
            low, high, method = binomial_interval(0, n)
            self.assertEqual(method, "clopper-pearson")
            self.assertEqual(low, 0.0)
            self.assertAlmostEqual(high, 1.0 - 0.025 ** (1.0 / n), places=10)

    def test_wilson(self):
        low, high, method = binomial_interval(30, 100)
        self.assertEqual(method, "wilson")
        self.assertAlmostEqual(low, 0.2189, places=3)
        self.assertAlmostEqual(high, 0.3958, places=3)

    def test_all_successes_capped(self):
        low, high, _ = binomial_interval(20, 20)
        self.assertLessEqual(high, 1.0)
        self.assertLess(low, 1.0)

    def test_empty_and_invalid(self):
        low, high, method = binomial_interval(0, 0)
        self.assertTrue(math.isnan(low) and math.isnan(high))
        self.assertEqual(method, "none")
        with self.assertRaises(InvalidParameterError):
            binomial_interval(5, 3)


class TestFrequency(unittest.TestCase):
    """頻度の推定"""

    def test_estimate(self):
        estimate = estimate_frequency([True, False, True, True])
        self.assertEqual((estimate.count, estimate.reps), (3, 4))
        self.assertAlmostEqual(estimate.p_hat, 0.75)
        self.assertAlmostEqual(estimate.stderr, math.sqrt(0.75 * 0.25 / 4))
        self.assertLessEqual(estimate.ci_low, estimate.p_hat)
        self.assertGreaterEqual(estimate.ci_high, estimate.p_hat)

    def test_complement(self):
        estimate = frequency_from_counts(2, 10, truncated=True)
        other = complement(estimate)
        self.assertEqual(other.count, 8)
        self.assertAlmostEqual(other.p_hat, 0.8)
        self.assertTrue(other.truncated)

    def test_no_replicas(self):
        estimate = estimate_frequency([])
        self.assertEqual(estimate.reps, 0)
        self.assertTrue(math.isnan(estimate.p_hat))


class TestSlopeFit(unittest.TestCase):
    """両対数の傾き"""

    def test_exact_power_law(self):
        x = np.array([1.0, 2.0, 4.0, 8.0])
        fit = fit_loglog_slope(x, 3.0 * x ** -0.5, target=-0.5)
        self.assertAlmostEqual(fit.slope, -0.5, places=10)
        self.assertAlmostEqual(math.exp(fit.intercept), 3.0, places=10)
        self.assertAlmostEqual(fit.residual, 0.0, places=12)
        self.assertTrue(fit.within(1e-8))

    def test_zero_frequencies_excluded(self):
        fit = fit_loglog_slope([1.0, 2.0, 4.0, 8.0], [0.5, 0.25, 0.0, 0.0625])
        self.assertEqual(fit.excluded, (4.0,))
        self.assertEqual(fit.grid, (1.0, 2.0, 8.0))
        self.assertAlmostEqual(fit.slope, -1.0, places=10)

    def test_too_few_points(self):
        with self.assertRaises(InvalidParameterError):
            fit_loglog_slope([1.0, 2.0, 3.0], [0.1, 0.0, math.nan])
        with self.assertRaises(InvalidParameterError):
            fit_loglog_slope([1.0, 2.0], [0.1])

    def test_no_target(self):
        fit = fit_loglog_slope([1.0, 10.0], [1.0, 10.0])
        self.assertTrue(fit.within(0.0))


def test_dominating_constant():
    x = np.array([1.0, 4.0, 9.0])
    y = np.array([1.0, 3.0, 2.0])
    c = dominating_constant(x, y, 0.5)
    assert c == pytest.approx(1.5)
    assert np.all(c * x ** 0.5 >= y - 1e-12)
    assert math.isnan(dominating_constant([1.0], [math.nan], 1.0))


def test_ks_exponential():
    samples = RngStream(600).exponential(2.0, 5000)
    assert ks_exponential(samples, 2.0, level=1e-3).passed
    assert not ks_exponential(samples, 0.5, level=1e-3).passed


def test_ks_against_critical_value():
    result = ks_against(RngStream(601).uniform_open(2000), "uniform", level=0.01)
    assert result.n == 2000
    assert result.critical == pytest.approx(1.628 / math.sqrt(2000), rel=0.02)
    with pytest.raises(InvalidParameterError):
        ks_against([], "uniform")


def test_tail_estimates():
    samples = np.arange(1, 101, dtype=float)
    tail = tail_estimates(samples, [10.0, 50.0, 90.0], [1.0, 5.0, 9.0], "R", target=-1.0)
    np.testing.assert_allclose(tail.p_hats, [0.9, 0.5, 0.1])
    assert tail.fit is not None
    assert tail.grid == (1.0, 5.0, 9.0)

    lower = tail_estimates(samples, [10.0, 50.0], [1.0, 5.0], "alpha", upper=False)
    np.testing.assert_allclose(lower.p_hats, [0.1, 0.5])


def test_tail_estimates_records_failed_fit():
    """当てはめに使える点が足りなければ note に理由を残す"""
    tail = tail_estimates([1.0, 2.0], [5.0, 6.0], [1.0, 2.0], "R")
    assert tail.fit is None
    assert tail.note


if __name__ == '__main__':
    unittest.main()
