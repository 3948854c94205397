#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
ユーティリティのテスト
"""

import io
import logging
import unittest

import pytest

from utils.error_handler import InvalidParameterError
from utils.utils import (
    MemoryGuard,
    ParameterValidator,
    ProgressBar,
    ensure_parent_directory,
    format_duration,
    performance_monitor,
)


class TestParameterValidator(unittest.TestCase):
    """パラメータ検証"""

    def test_density(self):
        self.assertEqual(ParameterValidator.density(0.25), 0.25)
        for bad in (0.0, 1.0, -0.1, float("nan")):
            with self.assertRaises(InvalidParameterError):
                ParameterValidator.density(bad)

    def test_density_names_field(self):
        with self.assertRaises(InvalidParameterError) as ctx:
            ParameterValidator.density(2.0, "rho_hi")
        self.assertIn("rho_hi", str(ctx.exception))

    def test_direction_is_normalized(self):
        x1, x2 = ParameterValidator.direction((1.0, 3.0))
        self.assertAlmostEqual(x1, 0.25)
        self.assertAlmostEqual(x2, 0.75)
        with self.assertRaises(InvalidParameterError):
            ParameterValidator.direction((0.0, 1.0))
        with self.assertRaises(InvalidParameterError):
            ParameterValidator.direction((0.2, 0.3, 0.5))

    def test_rate_and_integers(self):
        self.assertEqual(ParameterValidator.rate(2), 2.0)
        with self.assertRaises(InvalidParameterError):
            ParameterValidator.rate(0.0)
        with self.assertRaises(InvalidParameterError):
            ParameterValidator.rate(float("inf"))
        self.assertEqual(ParameterValidator.positive_int(3.0, "reps"), 3)
        with self.assertRaises(InvalidParameterError):
            ParameterValidator.positive_int(2.5, "reps")
        with self.assertRaises(InvalidParameterError):
            ParameterValidator.positive_int(-1, "reps", minimum=0)

    def test_grid(self):
        self.assertEqual(ParameterValidator.grid([1, 2, 4], "N", ascending=True), (1, 2, 4))
        with self.assertRaises(InvalidParameterError):
            ParameterValidator.grid([4, 2], "N", ascending=True)
        with self.assertRaises(InvalidParameterError):
            ParameterValidator.grid([4], "N", minimum_length=2)


def test_memory_guard():
    MemoryGuard.check(100, 100, 8192)
    assert MemoryGuard.estimate_field_bytes(10, 10) == pytest.approx(100 * (16 + 1 / 8))
    with pytest.raises(InvalidParameterError):
        MemoryGuard.check(8193, 10, 8192)


def test_progress_bar_writes_to_stream():
    stream = io.StringIO()
    bar = ProgressBar(4, "レプリカ", width=8, stream=stream)
    bar.update(2)
    bar.finish()
    text = stream.getvalue()
    assert "レプリカ" in text
    assert "(4/4)" in text
    assert text.endswith("\n")


def test_format_duration():
    assert format_duration(None) == "-"
    assert format_duration(1.5) == "1.50秒"
    assert format_duration(90.0) == "1.5分"


def test_ensure_parent_directory(tmp_path):
    target = ensure_parent_directory(tmp_path / "a" / "b" / "out.csv")
    assert target.parent.is_dir()
    assert not target.exists()


def test_performance_monitor_logs(caplog):
    @performance_monitor
    def square(x):
        return x * x

    with caplog.at_level(logging.INFO, logger="utils.utils"):
        assert square(3) == 9
    assert any("square" in record.getMessage() for record in caplog.records)


if __name__ == '__main__':
    unittest.main()
