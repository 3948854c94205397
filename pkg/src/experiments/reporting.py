#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
結果の出力
CSV/JSON への書き出しとコンソールの要約表
"""

from __future__ import annotations

import io
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
from rich.console import Console
from rich.table import Table

from config.config import config
from experiments.runner import ExperimentResult
from utils.error_handler import ErrorCategory, ErrorHandler, ErrorSeverity
from utils.utils import ensure_parent_directory, format_duration

logger = logging.getLogger(__name__)

HEADER_PREFIX = "# resolved-config: "


def render_csv(result: ExperimentResult, float_format: Optional[str] = None) -> str:
    """
    CSV の文字列を作る

    1 行目は解決済み設定のコメント、2 行目が列名。浮動小数は 17 桁。
    """
    float_format = float_format or config.get("output.float_format", "%.17g")
    buffer = io.StringIO()
    buffer.write(f"{HEADER_PREFIX}{result.resolved_config}\n")
    frame = result.to_frame()
    if len(frame.columns):
        frame.to_csv(buffer, index=False, float_format=float_format, lineterminator="\n")
    return buffer.getvalue()


def _json_value(value: Any) -> Any:
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return None if math.isnan(value) or math.isinf(value) else value
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def render_json(result: ExperimentResult) -> str:
    """JSON の文字列を作る（NaN は null）"""
    records: List[Dict[str, Any]] = [
        {key: _json_value(value) for key, value in row.to_record(result.count_label, result.estimate_label).items()}
        for row in result.rows
    ]
    payload = {
        "resolved_config": result.resolved_config,
        "experiment": result.experiment,
        "truncated": result.truncated,
        "rows": records,
    }
    return json.dumps(payload, ensure_ascii=False, indent=2) + "\n"


def write_result(result: ExperimentResult, path: Union[str, Path], fmt: str = "csv",
                 error_handler: Optional[ErrorHandler] = None) -> Path:
    """
    結果をファイルに書き出す

    Args:
        result (ExperimentResult): 結果
        path (str | Path): 出力先
        fmt (str): "csv" または "json"
        error_handler (ErrorHandler): 書き込み失敗の記録先

    Returns:
        Path: 書き出したパス
    """
    text = render_json(result) if fmt == "json" else render_csv(result)
    target = ensure_parent_directory(path)
    try:
        with open(target, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    except OSError as e:
        (error_handler or ErrorHandler()).handle_error(
            e, ErrorCategory.IO, ErrorSeverity.HIGH, {"path": str(target)}
        )
        raise
    logger.info(f"結果を保存しました: {target} ({len(result.rows)} 行)")
    return target


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return "" if math.isnan(value) else f"{value:.4g}"
    return str(value)


def print_summary(result: ExperimentResult, console: Optional[Console] = None):
    """推定行と当てはめ行の要約表をコンソールに表示"""
    console = console or Console(stderr=True)
    frame = result.to_frame()
    title = f"{result.experiment} ({format_duration(result.wall_time)})"
    if result.truncated:
        title += "（予算切れ: 部分結果）"
    table = Table(title=title)
    if frame.empty:
        console.print(f"{result.experiment}: 結果は空です")
        return

    hidden = {"ci_method", "note", "excluded"}
    columns = [c for c in frame.columns if c not in hidden]
    for column in columns:
        table.add_column(str(column), justify="right" if column != "row_type" else "left")
    for record in frame.to_dict(orient="records"):
        style = {"fit": "bold cyan", "error": "red", "summary": "magenta"}.get(record["row_type"])
        table.add_row(*(_cell(record[c]) for c in columns), style=style)
    console.print(table)

    for row in result.errors:
        console.print(f"[red]エラー[/red] {row.parameters}: {row.note}")
