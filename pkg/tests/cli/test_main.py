#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
コマンドラインのテスト
"""

import json

import pytest

from cli.main import EXIT_CONFIG_ERROR, EXIT_OK, EXIT_TRUNCATED, build_parser, main, resolve_config
from config.config import config
from experiments.reporting import HEADER_PREFIX

SMALL_RUN = ["simulate", "--n", "10", "--reps", "2", "--jobs", "1", "--seed", "3"]


def test_no_arguments_is_config_error(capsys):
    assert main([]) == EXIT_CONFIG_ERROR
    assert "usage" in capsys.readouterr().err


def test_unknown_subcommand():
    assert main(["nonsense"]) == EXIT_CONFIG_ERROR


def test_help_exits_cleanly():
    assert main(["simulate", "--help"]) == EXIT_OK


def test_successful_run_writes_file(tmp_path):
    out = tmp_path / "runs" / "a.csv"
    assert main(SMALL_RUN + ["--out", str(out)]) == EXIT_OK
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith(HEADER_PREFIX)
    assert "seed=3" in lines[0]
    assert lines[1].startswith("row_type,N,")
    assert len(lines) == 3


def test_same_seed_same_file(tmp_path):
    """同じ設定は同じバイト列を出力（並列度は結果に影響しない）"""
    first, second = tmp_path / "1.csv", tmp_path / "2.csv"
    assert main(SMALL_RUN + ["--out", str(first)]) == EXIT_OK
    assert main(["simulate", "--n", "10", "--reps", "2", "--jobs", "2", "--seed", "3", "--out", str(second)]) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()


def test_json_to_stdout(capsys):
    assert main(SMALL_RUN + ["--format", "json"]) == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["experiment"] == "simulate"
    assert payload["rows"][0]["N"] == 10


def test_invalid_value_names_field(capsys):
    assert main(["simulate", "--reps", "-3"]) == EXIT_CONFIG_ERROR
    assert "reps" in capsys.readouterr().err


@pytest.mark.parametrize("seed", ["18446744073709551616", "-1"])
def test_seed_outside_64_bits(seed, capsys):
    """64bit に収まらないシードは設定エラー"""
    assert main(["simulate", "--n", "10", "--reps", "1", "--jobs", "1", "--seed", seed]) == EXIT_CONFIG_ERROR
    assert "seed" in capsys.readouterr().err


def test_largest_seed_is_accepted():
    assert main(SMALL_RUN[:-1] + ["18446744073709551615", "--format", "json"]) == EXIT_OK


def test_zero_jobs_is_config_error(capsys):
    assert main(["simulate", "--n", "10", "--reps", "1", "--jobs", "0"]) == EXIT_CONFIG_ERROR
    assert "jobs" in capsys.readouterr().err


def test_malformed_grid(capsys):
    assert main(["simulate", "--n", "10:20"]) == EXIT_CONFIG_ERROR
    assert "n" in capsys.readouterr().err


def test_unknown_config_key(tmp_path, capsys):
    path = tmp_path / "run.conf"
    path.write_text("reps = 2\ncolour = blue\n", encoding="utf-8")
    assert main(["simulate", "--config", str(path)]) == EXIT_CONFIG_ERROR
    assert "colour" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "missing.conf")]) == EXIT_CONFIG_ERROR


def test_precedence(tmp_path, monkeypatch):
    """既定値 < 設定ファイル < フラグ"""
    monkeypatch.setitem(config.config["simulation"], "seed", 77)
    path = tmp_path / "run.conf"
    path.write_text("reps = 2\nn = 10,20\nrho = 0.3\n", encoding="utf-8")
    args = build_parser().parse_args(["stabilization", "--config", str(path), "--reps", "5", "--m", "1,2"])
    cfg = resolve_config(args)
    assert cfg.seed == 77
    assert cfg.reps == 5
    assert cfg.N == (10, 20)
    assert cfg.rho == 0.3
    assert cfg.M == (1, 2)
    assert cfg.experiment == "stabilization"


def test_lambda_and_xi_flags():
    args = build_parser().parse_args(["queue-check", "--lambda", "0.2", "--xi", "0.3,0.7", "--progress"])
    cfg = resolve_config(args)
    assert cfg.lam == 0.2
    assert cfg.xi == (0.3, 0.7)
    assert cfg.show_progress is True


def test_budget_exhaustion_is_partial():
    argv = ["simulate", "--n", "10", "--reps", "3", "--jobs", "1", "--budget-seconds", "0.000000001"]
    assert main(argv) == EXIT_TRUNCATED


@pytest.mark.parametrize("family", ["local-stationarity", "stabilization", "coalescence", "exponents",
                                    "queue-check", "bound-check"])
def test_empty_grids_succeed(family, capsys):
    """グリッドが空なら空の表で正常終了"""
    assert main([family, "--jobs", "1"]) == EXIT_OK
    assert capsys.readouterr().out.startswith(HEADER_PREFIX)
