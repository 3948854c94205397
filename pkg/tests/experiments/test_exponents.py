#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
揺らぎの指数のテスト（小さな規模）
"""

import math

import numpy as np
import pytest

from core.lattice import RngStream
from experiments.exponents import (
    burke_check,
    exit_point_tail,
    profile_gaussianity,
    variance_exponent,
)
from utils.error_handler import InvalidParameterError


def test_variance_exponent_shape(serial_pool):
    result = variance_exponent(RngStream(900), (8, 16, 32), 12, pool=serial_pool)
    assert [m.N for m in result.moments] == [8, 16, 32]
    assert all(m.reps == 12 for m in result.moments)
    assert all(m.variance > 0 for m in result.moments)
    # 平均/N は N とともに 4 に近づく
    assert 2.0 < result.moments[-1].mean_over_N < 4.5
    assert result.fit is not None
    assert result.fit.target == pytest.approx(2.0 / 3.0)


def test_variance_exponent_validation(serial_pool):
    with pytest.raises(InvalidParameterError):
        variance_exponent(RngStream(1), (16, 8), 4, pool=serial_pool)
    with pytest.raises(InvalidParameterError):
        variance_exponent(RngStream(1), (8, 16), 1, pool=serial_pool)


def test_variance_single_point_records_note(serial_pool):
    result = variance_exponent(RngStream(901), (8,), 4, pool=serial_pool)
    assert result.fit is None
    assert result.note


def test_profile_gaussianity_shape(serial_pool):
    result = profile_gaussianity(RngStream(910), 27, 0.5, 20, pool=serial_pool)
    assert result.window == math.floor(0.5 * 27 ** (2.0 / 3.0))
    assert result.step_ks.n == 20 * result.window
    assert result.stationary_ks.n == result.point_ks.n == 20
    assert result.step_variance > 0


def test_profile_gaussianity_window_too_large(serial_pool):
    with pytest.raises(InvalidParameterError):
        profile_gaussianity(RngStream(1), 8, 5.0, 2, pool=serial_pool)
    with pytest.raises(InvalidParameterError):
        profile_gaussianity(RngStream(1), 8, 0.0, 2, pool=serial_pool)


def test_exit_point_tail_is_monotone(serial_pool):
    tail = exit_point_tail(RngStream(920), 0.5, 64, (0.25, 0.5, 1.0), 30, pool=serial_pool)
    assert tail.parameter == "r"
    assert np.all(np.diff(tail.p_hats) <= 0)


def test_burke_check(serial_pool):
    summary = burke_check(RngStream(930), 0.4, 40, 6, level=1e-3, pool=serial_pool)
    assert summary.rho == pytest.approx(0.4)
    assert summary.e1.reps == summary.e2.reps == 6
    assert 0.0 <= summary.mean_statistic_e1 <= 1.0
    assert 0.0 <= summary.mean_statistic_e2 <= 1.0
