#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
受け入れ実行
大規模なプリセットを実行して判定する。LPP_LAB_ACCEPTANCE=1 のときだけ有効
"""

import logging

import pytest

from core.lattice import RngStream
from experiments.acceptance import (
    CHECKERS,
    PRESETS,
    determinism_suite,
    dominance_total,
    oracle_mismatches,
    preset,
)
from experiments.runner import ExperimentRunner

logger = logging.getLogger(__name__)

pytestmark = pytest.mark.acceptance


def test_oracle_agreement():
    """1000 個の小さな場で動的計画法と全列挙が一致"""
    assert oracle_mismatches(RngStream(2024, 1), instances=1000, max_side=6) == 0


def test_deterministic_properties():
    counts = determinism_suite(RngStream(2024, 2), instances=10000, max_side=8)
    assert counts == {"crossing": 0, "monotonicity": 0, "shift": 0}


def test_coupled_boundaries_are_ordered():
    assert dominance_total(RngStream(2024, 3), N=1000, reps=200) == 0


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_preset(name):
    result = ExperimentRunner(preset(name)).run()
    outcome = CHECKERS[name](result)
    logger.info(f"受け入れ {name}: {outcome.detail}")
    assert not result.truncated
    assert outcome.passed, outcome.detail
