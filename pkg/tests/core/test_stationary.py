#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
定常 LPP のテスト
境界の分布、境界付き DP、逆向きの鏡映、出口点、Burke 性
"""

import math
import unittest

import numpy as np
import pytest

from core import kernels
from core.boundary import BoundaryWeights, Orientation
from core.lattice import Coord, Rect, RngStream, WeightField, ORIGIN, sample_weight_field
from core.passage import backtrack_geodesic, increments
from core.stationary import (
    Density,
    burke_edge_increments,
    characteristic_direction,
    density_for_direction,
    dual_weights,
    exit_point,
    sample_stationary_boundary,
    stationary_passage,
)
from experiments.statistics import ks_exponential
from utils.error_handler import InvalidParameterError, OutOfRangeError


class TestDensity(unittest.TestCase):
    """密度と特性方向のテスト"""

    def test_range(self):
        """(0,1) の外は拒否"""
        for value in (0.0, 1.0, -0.2, float("nan")):
            with self.assertRaises(InvalidParameterError):
                Density(value)

    def test_rates(self):
        density = Density(0.3)
        self.assertAlmostEqual(density.e1_rate, 0.7)
        self.assertAlmostEqual(density.e2_rate, 0.3)

    def test_characteristic_direction(self):
        self.assertEqual(characteristic_direction(0.5), (0.5, 0.5))
        xi = characteristic_direction(0.3)
        self.assertAlmostEqual(xi[0] + xi[1], 1.0)
        self.assertAlmostEqual(xi[0] / xi[1], (0.7 / 0.3) ** 2)

    def test_direction_roundtrip(self):
        """特性方向から密度を復元"""
        for rho in (0.1, 0.3, 0.5, 0.8):
            self.assertAlmostEqual(density_for_direction(characteristic_direction(rho)).rho, rho)

    def test_direction_is_normalized(self):
        self.assertAlmostEqual(density_for_direction((2.0, 2.0)).rho, 0.5)
        with self.assertRaises(InvalidParameterError):
            density_for_direction((1.0, 0.0))


class TestStationaryPassage(unittest.TestCase):
    """境界付き DP のテスト"""

    def setUp(self):
        rng = RngStream(31, 2)
        self.boundary = sample_stationary_boundary(rng.child(0), 0.4, (8, 6))
        self.bulk = sample_weight_field(rng.child(1), self.boundary.bulk_rect())
        self.field = stationary_passage(self.bulk, self.boundary)

    def test_axes_are_cumulative_sums(self):
        """角は 0、軸上は境界重みの累積和"""
        values = self.field.values
        self.assertEqual(values[0, 0], 0.0)
        np.testing.assert_allclose(values[0, 1:], np.cumsum(self.boundary.I))
        np.testing.assert_allclose(values[1:, 0], np.cumsum(self.boundary.J))

    def test_matches_augmented_forward_sweep(self):
        """境界を重みとして埋め込んだ通常の DP と値・測地線が一致"""
        augmented = np.zeros((7, 9))
        augmented[0, 1:] = self.boundary.I
        augmented[1:, 0] = self.boundary.J
        augmented[1:, 1:] = self.bulk.values
        values, bits = kernels.forward_sweep(augmented)
        np.testing.assert_allclose(self.field.values, values, rtol=1e-12)
        unpacked = np.unpackbits(self.field.backptr, axis=1, count=9)
        np.testing.assert_array_equal(unpacked, bits)

    def test_exact_increments(self):
        """保持している辺増分は値の差と一致し、周回和は 0"""
        self.assertTrue(self.field.has_exact_increments)
        inc = increments(self.field, self.field.rect)
        np.testing.assert_allclose(inc.h_e1, np.diff(self.field.values, axis=1), atol=1e-9)
        np.testing.assert_allclose(inc.h_e2, np.diff(self.field.values, axis=0), atol=1e-9)
        self.assertLess(inc.square_residual(), 1e-9)

    def test_value_follows_step_bit(self):
        """各バルク点の値は、ビットが指す直前の点の値に重みを足したものと厳密に等しい"""
        values = self.field.values
        bits = np.unpackbits(self.field.backptr, axis=1, count=9)
        for r in range(1, 7):
            for c in range(1, 9):
                previous = values[r, c - 1] if bits[r, c] else values[r - 1, c]
                self.assertEqual(values[r, c], self.bulk.values[r - 1, c - 1] + previous)

    def test_exact_tie_goes_to_e2(self):
        """増分が等しいときは e2 を選び、値もその直前の点から決まる"""
        values, east, north, bits = kernels.stationary_sweep(
            np.array([[2.0]]), np.array([1.0]), np.array([1.0])
        )
        self.assertEqual(bits[1, 1], 0)
        self.assertEqual(values[1, 1], 3.0)
        self.assertEqual(east[1, 1], 2.0)
        self.assertEqual(north[1, 1], 2.0)

    def test_bulk_shape_mismatch(self):
        wrong = sample_weight_field(RngStream(1), Rect.from_size(8, 6))
        with self.assertRaises(InvalidParameterError):
            stationary_passage(wrong, self.boundary)
        with self.assertRaises(InvalidParameterError):
            stationary_passage(None, self.boundary)

    def test_degenerate_boundary(self):
        """長さ 0 の境界ではバルクなしの一次元の場"""
        boundary = BoundaryWeights(ORIGIN, Orientation.FORWARD, [1.0, 2.0, 3.0], [])
        field = stationary_passage(None, boundary)
        np.testing.assert_allclose(field.values, [[0.0, 1.0, 3.0, 6.0]])


def test_reversed_is_reflection_of_forward():
    """逆向きの定常場は鏡映した前向きの定常場の鏡映"""
    rng = RngStream(12)
    inc_i = rng.child(0).exponential(0.6, 7)
    inc_j = rng.child(1).exponential(0.4, 5)
    bulk = rng.child(2).exponential(1.0, (5, 7))
    corner = Coord(7, 5)
    reversed_boundary = BoundaryWeights(corner, Orientation.REVERSED, inc_i, inc_j)
    assert reversed_boundary.bulk_rect() == Rect(ORIGIN, Coord(6, 4))
    backward = stationary_passage(WeightField(reversed_boundary.bulk_rect(), bulk), reversed_boundary)
    forward_boundary = BoundaryWeights(ORIGIN, Orientation.FORWARD, inc_i, inc_j)
    forward = stationary_passage(WeightField(forward_boundary.bulk_rect(), bulk[::-1, ::-1]), forward_boundary)
    assert backward.origin == corner
    np.testing.assert_allclose(backward.values, forward.values[::-1, ::-1], rtol=1e-12)
    np.testing.assert_allclose(backward.edge_e1, forward.edge_e1[::-1, ::-1], rtol=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_exit_point_matches_geodesic(seed):
    """出口点は測地線が原点の軸に沿って進んだ歩数"""
    rng = RngStream(seed, 40)
    boundary = sample_stationary_boundary(rng.child(0), 0.5, (10, 10))
    field = stationary_passage(sample_weight_field(rng.child(1), boundary.bulk_rect()), boundary)
    target = Coord(10, 10)
    z = exit_point(field, target)
    points = backtrack_geodesic(field, target).points
    if points[1] == Coord(1, 0):
        assert z.side == "e1"
        assert z.z == max(p.x for p in points if p.y == 0)
    else:
        assert z.side == "e2"
        assert -z.z == max(p.y for p in points if p.x == 0)
    assert z.magnitude == abs(z.z) >= 1


def test_exit_point_rejects_boundary_target():
    boundary = sample_stationary_boundary(RngStream(1), 0.5, (4, 4))
    field = stationary_passage(sample_weight_field(RngStream(2), boundary.bulk_rect()), boundary)
    with pytest.raises(InvalidParameterError):
        exit_point(field, Coord(3, 0))
    with pytest.raises(OutOfRangeError):
        exit_point(field, Coord(5, 1))


def test_boundary_distribution():
    """I は Exp(1−ρ)、J は Exp(ρ)"""
    boundary = sample_stationary_boundary(RngStream(50), 0.3, (5000, 5000))
    assert ks_exponential(boundary.I, 0.7, level=1e-3).passed
    assert ks_exponential(boundary.J, 0.3, level=1e-3).passed


def test_boundary_rejects_nonpositive():
    with pytest.raises(InvalidParameterError):
        BoundaryWeights(ORIGIN, Orientation.FORWARD, [1.0, 0.0], [1.0])


@pytest.mark.parametrize("rho", [0.3, 0.5, 0.7])
def test_burke_edge_increments(rho):
    """北東の縁の増分は境界と同じ指数分布"""
    rng = RngStream(60, int(rho * 10))
    boundary = sample_stationary_boundary(rng.child(0), rho, (300, 300))
    field = stationary_passage(sample_weight_field(rng.child(1), boundary.bulk_rect()), boundary)
    inc_e1, inc_e2 = burke_edge_increments(field)
    assert inc_e1.size == 300 and inc_e2.size == 300
    assert ks_exponential(inc_e1, 1.0 - rho, level=1e-3).passed
    assert ks_exponential(inc_e2, rho, level=1e-3).passed


def test_dual_weights_are_exp1():
    boundary = sample_stationary_boundary(RngStream(70), 0.5, (150, 150))
    field = stationary_passage(sample_weight_field(RngStream(71), boundary.bulk_rect()), boundary)
    dual = dual_weights(field)
    assert dual.shape == (150, 150)
    assert abs(float(dual.mean()) - 1.0) < 0.04


def test_point_field_has_no_exact_increments():
    from core.passage import last_passage
    field = last_passage(sample_weight_field(RngStream(1), Rect.from_size(3, 3)), ORIGIN)
    with pytest.raises(InvalidParameterError):
        burke_edge_increments(field)
    assert math.isfinite(field.value(Coord(2, 2)))
