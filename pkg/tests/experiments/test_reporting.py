#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
結果の出力のテスト
"""

import io
import json
import math

from rich.console import Console

from experiments.reporting import HEADER_PREFIX, print_summary, render_csv, render_json, write_result
from experiments.runner import EstimateRow, ExperimentResult


def _result(truncated: bool = False) -> ExperimentResult:
    rows = [
        EstimateRow(parameters={"N": 10}, estimate=0.1, stderr=math.nan, reps=3, count=1,
                    extra={"ci_low": 0.0}, truncated=truncated),
        EstimateRow.error({"N": 20}, "InvalidParameterError: N が小さすぎます"),
    ]
    return ExperimentResult("stabilization", "experiment=stabilization;seed=1", rows, "disagreements", "p_hat")


def test_csv_header_and_precision():
    """1 行目は解決済み設定、浮動小数は 17 桁"""
    lines = render_csv(_result()).splitlines()
    assert lines[0] == HEADER_PREFIX + "experiment=stabilization;seed=1"
    header = lines[1].split(",")
    assert header[:6] == ["row_type", "N", "disagreements", "reps", "p_hat", "stderr"]
    assert "0.10000000000000001" in lines[2]
    assert lines[3].startswith("error,20")
    assert len(lines) == 4


def test_csv_of_empty_result():
    result = ExperimentResult("simulate", "experiment=simulate", [])
    assert render_csv(result) == HEADER_PREFIX + "experiment=simulate\n"


def test_json_nan_is_null():
    payload = json.loads(render_json(_result(truncated=True)))
    assert payload["resolved_config"] == "experiment=stabilization;seed=1"
    assert payload["truncated"] is True
    first, second = payload["rows"]
    assert first["stderr"] is None
    assert first["p_hat"] == 0.1
    assert first["disagreements"] == 1
    assert second["row_type"] == "error"
    assert "小さすぎます" in second["note"]


def test_write_result_creates_parent(tmp_path):
    target = tmp_path / "nested" / "dir" / "out.json"
    written = write_result(_result(), target, "json")
    assert written == target
    assert json.loads(target.read_text(encoding="utf-8"))["experiment"] == "stabilization"

    csv_path = write_result(_result(), tmp_path / "out.csv")
    assert csv_path.read_text(encoding="utf-8") == render_csv(_result())


def test_print_summary():
    buffer = io.StringIO()
    console = Console(file=buffer, width=200)
    print_summary(_result(truncated=True), console)
    text = buffer.getvalue()
    assert "stabilization" in text
    assert "予算切れ" in text
    assert "エラー" in text

    empty = io.StringIO()
    print_summary(ExperimentResult("simulate", "", []), Console(file=empty))
    assert "結果は空です" in empty.getvalue()
