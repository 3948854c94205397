#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
設定管理のテスト
"""

import unittest

import pytest

from config.config import DEFAULT_CONFIG, Config, coerce_like, parse_flat_config
from config.optimization_config import OptimizationConfig
from utils.error_handler import ConfigError


class TestParseFlatConfig(unittest.TestCase):
    """key = value 形式の解析"""

    def test_comments_and_blank_lines(self):
        text = "# コメント\n\nseed = 42  # 行末コメント\nxi = 0.3,0.7\n"
        self.assertEqual(parse_flat_config(text), {"seed": "42", "xi": "0.3,0.7"})

    def test_missing_equals(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_flat_config("seed 42", "run.conf")
        self.assertIn("run.conf:1", str(ctx.exception))

    def test_empty_key(self):
        with self.assertRaises(ConfigError):
            parse_flat_config(" = 3")


class TestCoerce(unittest.TestCase):
    """既定値の型への変換"""

    def test_types(self):
        self.assertEqual(coerce_like(4, "8", "jobs"), 8)
        self.assertEqual(coerce_like(0.5, "0.25", "rho"), 0.25)
        self.assertIs(coerce_like(False, "yes", "show_progress"), True)
        self.assertEqual(coerce_like("csv", "json", "format"), "json")
        self.assertEqual(coerce_like(None, "x", "new"), "x")

    def test_invalid(self):
        with self.assertRaises(ConfigError) as ctx:
            coerce_like(4, "many", "experiments.jobs")
        self.assertEqual(ctx.exception.field, "experiments.jobs")
        with self.assertRaises(ConfigError):
            coerce_like(True, "maybe", "flag")


class TestConfig(unittest.TestCase):
    """Config クラス"""

    def test_defaults_without_file(self):
        cfg = Config(config_file=None, setup_logging=False)
        self.assertEqual(cfg.get("simulation.anchor_multiplier"), DEFAULT_CONFIG["simulation"]["anchor_multiplier"])
        self.assertEqual(cfg.get("output.float_format"), "%.17g")
        self.assertIsNone(cfg.get("simulation.missing"))
        self.assertEqual(cfg.get("missing.key", 3), 3)


def test_file_and_environment(tmp_path, monkeypatch):
    """設定ファイルの値は型を合わせて読み込み、環境変数がさらに上書きする"""
    path = tmp_path / "lpp_lab.conf"
    path.write_text("simulation.seed = 11\nexperiments.jobs = 2\nexperiments.show_progress = true\n", encoding="utf-8")
    monkeypatch.setenv("LPP_LAB_JOBS", "3")
    monkeypatch.delenv("LPP_LAB_SEED", raising=False)
    cfg = Config(config_file=str(path), setup_logging=False)
    assert cfg.get("simulation.seed") == 11
    assert cfg.get("experiments.jobs") == 3
    assert cfg.get("experiments.show_progress") is True


def test_broken_file_falls_back_to_defaults(tmp_path, monkeypatch):
    monkeypatch.delenv("LPP_LAB_SEED", raising=False)
    path = tmp_path / "broken.conf"
    path.write_text("simulation.seed: 3\n", encoding="utf-8")
    cfg = Config(config_file=str(path), setup_logging=False)
    assert cfg.get("simulation.seed") == DEFAULT_CONFIG["simulation"]["seed"]


def test_optimization_config_copies():
    performance = OptimizationConfig.get_performance_config()
    performance["row_block"] = -1
    assert OptimizationConfig.get_performance_config()["row_block"] > 0
    assert OptimizationConfig.get_memory_config()["full_field_limit"] == 8192
    assert OptimizationConfig.get_queueing_config()["burn_in_constant"] == 40


def test_invalid_environment_value(monkeypatch):
    monkeypatch.setenv("LPP_LAB_JOBS", "many")
    with pytest.raises(ConfigError):
        Config(config_file=None, setup_logging=False)


if __name__ == '__main__':
    unittest.main()
