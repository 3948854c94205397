#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
待ち行列の検査のテスト（小さな規模）
"""

import pytest

from core.lattice import RngStream
from experiments.queue_suite import bound_check, optimal_theta, queue_check
from queueing.queue_operators import empty_queue_bound
from utils.error_handler import InvalidParameterError

EXPECTED_CHECKS = {
    "departures",
    "services",
    "departure_dominance",
    "waiting_atom",
    "waiting_tail",
    "idle_identity",
    "interchange",
    "fixed_point_d1",
    "fixed_point_d2",
    "past_future_correlation",
}


def test_queue_check_rows():
    rows = queue_check(RngStream(950), 0.3, 0.6, 3000, windows=200, steps=300, idle_pairs=40)
    by_name = {row.name: row for row in rows}
    assert set(by_name) == EXPECTED_CHECKS
    # 決定論的な恒等式は常に成り立つ
    assert by_name["departure_dominance"].passed
    assert by_name["idle_identity"].passed
    assert by_name["interchange"].passed
    assert by_name["waiting_atom"].samples == 200


def test_queue_check_requires_stability():
    with pytest.raises(InvalidParameterError):
        queue_check(RngStream(1), 0.6, 0.6, 100)


def test_optimal_theta_minimizes_bound():
    beta, alpha, m = 0.45, 0.55, 50
    theta = optimal_theta(beta, alpha, m)
    assert 0.0 < theta < beta
    best = empty_queue_bound(beta, alpha, m, theta)
    for other in (theta * 0.5, theta * 1.5):
        if other < beta:
            assert best <= empty_queue_bound(beta, alpha, m, other) + 1e-9


def test_bound_check_row(serial_pool):
    row = bound_check(RngStream(960), 0.5, 1000, 1.0, 10, 100, pool=serial_pool)
    assert row.beta == pytest.approx(0.4)
    assert row.alpha == pytest.approx(0.6)
    assert row.estimate.reps == 100
    assert row.heavy_traffic == pytest.approx(row.bound, abs=1e-9)
    assert row.bound >= 1.0 - row.beta / row.alpha


def test_bound_check_invalid_drift(serial_pool):
    with pytest.raises(InvalidParameterError):
        bound_check(RngStream(1), 0.5, 1000, 6.0, 10, 5, pool=serial_pool)
