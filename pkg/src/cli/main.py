#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
コマンドライン
実験ファミリごとのサブコマンド、設定ファイルとフラグの解決、結果の出力
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from config.config import config, parse_flat_config
from experiments.reporting import print_summary, render_csv, render_json, write_result
from experiments.runner import FAMILIES, ExperimentConfig, ExperimentRunner, parse_grid
from utils.error_handler import ConfigError, ErrorHandler, InvalidParameterError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_TRUNCATED = 2


def _int(text: str) -> int:
    return int(text)


def _bool(text: str) -> bool:
    lowered = str(text).strip().lower()
    if lowered not in ("true", "false", "1", "0", "yes", "no"):
        raise ValueError(text)
    return lowered in ("true", "1", "yes")


def _xi(text: str) -> Tuple[float, float]:
    values = parse_grid(text, float, "xi")
    if len(values) != 2:
        raise ValueError(text)
    return values


# 設定キー → (ExperimentConfig のフィールド, 変換関数)
OPTIONS: Dict[str, Tuple[str, Callable[[str], Any]]] = {
    "seed": ("seed", _int),
    "reps": ("reps", _int),
    "n": ("N", lambda text: parse_grid(text, int, "n")),
    "rho": ("rho", float),
    "lambda": ("lam", float),
    "xi": ("xi", _xi),
    "c": ("c", lambda text: parse_grid(text, float, "c")),
    "m": ("M", lambda text: parse_grid(text, int, "m")),
    "r": ("r", lambda text: parse_grid(text, float, "r")),
    "k": ("k", lambda text: parse_grid(text, int, "k")),
    "R": ("R", lambda text: parse_grid(text, float, "R")),
    "alpha": ("alpha", lambda text: parse_grid(text, float, "alpha")),
    "a": ("a", lambda text: parse_grid(text, float, "a")),
    "l": ("l", lambda text: parse_grid(text, int, "l")),
    "anchor": ("anchor", float),
    "suite": ("suite", lambda text: tuple(s.strip() for s in text.split(",") if s.strip())),
    "ks_level": ("ks_level", float),
    "jobs": ("jobs", _int),
    "out": ("out", str),
    "format": ("format", str),
    "budget_seconds": ("budget_seconds", float),
    "progress": ("show_progress", _bool),
}


class _Parser(argparse.ArgumentParser):
    """引数の誤りは使い方を表示して終了コード 1"""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG_ERROR, f"{self.prog}: エラー: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    """サブコマンドとフラグを定義"""
    parser = _Parser(prog="lpp_lab", description="指数重みの最終通過時間パーコレーションのモンテカルロ実験")
    subparsers = parser.add_subparsers(dest="command", metavar="{" + ",".join(FAMILIES) + "}", parser_class=_Parser)
    for family in FAMILIES:
        sub = subparsers.add_parser(family, help=f"{family} 実験")
        sub.add_argument("--config", help="key = value 形式の設定ファイル")
        sub.add_argument("--seed", help="64bit 非負整数のシード（既定は LPP_LAB_SEED）")
        sub.add_argument("--reps", help="レプリカ数")
        sub.add_argument("--n", help="N のグリッド（カンマ区切りまたは start:stop:count）")
        sub.add_argument("--rho", help="密度 ρ")
        sub.add_argument("--lambda", dest="lambda", help="到着率 λ（queue-check）")
        sub.add_argument("--xi", help="方向 ξ（f,f）")
        for name in ("c", "m", "r", "k", "R", "alpha", "a", "l"):
            sub.add_argument(f"--{name}", dest=name, help=f"{name} のグリッド")
        sub.add_argument("--anchor", help="安定化の錨の倍率 K")
        sub.add_argument("--suite", help="exponents の検査（variance,transversal,exit,profile,burke）")
        sub.add_argument("--ks-level", dest="ks_level", help="KS 検定の有意水準")
        sub.add_argument("--jobs", help="並列度の上限")
        sub.add_argument("--out", help="出力ファイル（省略時は標準出力）")
        sub.add_argument("--format", choices=("csv", "json"), help="出力形式")
        sub.add_argument("--budget-seconds", dest="budget_seconds", help="実行時間予算（秒）")
        sub.add_argument("--progress", action="store_const", const="true", help="進捗バーを表示")
    return parser


def _defaults(experiment: str) -> Dict[str, Any]:
    """グローバル設定から既定値を取り出す"""
    jobs = config.get("experiments.jobs")
    return {
        "experiment": experiment,
        "seed": config.get("simulation.seed", 0),
        "reps": config.get("experiments.reps", 100),
        "rho": config.get("simulation.rho", 0.5),
        "anchor": float(config.get("simulation.anchor_multiplier", 4)),
        "ks_level": config.get("experiments.ks_level", 0.01),
        "jobs": jobs if jobs else None,
        "format": config.get("output.format", "csv"),
        "budget_seconds": float(config.get("experiments.budget_seconds", 0) or 0),
        "show_progress": bool(config.get("experiments.show_progress", False)),
    }


def _apply(values: Dict[str, Any], key: str, text: str, source: str):
    if key not in OPTIONS:
        raise ConfigError(f"{source}: 未知の設定項目です: {key}", field=key)
    field, convert = OPTIONS[key]
    try:
        values[field] = convert(str(text).strip())
    except (ValueError, InvalidParameterError):
        raise ConfigError(f"{source}: 設定値が不正です: {key}={text!r}", field=key) from None


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """
    既定値 < 設定ファイル < フラグ の順に解決

    Args:
        args (argparse.Namespace): 解析済みの引数

    Returns:
        ExperimentConfig: 解決済みの実験設定
    """
    values = _defaults(args.command)
    if args.config:
        path = Path(args.config)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"設定ファイルを読めません: {path} ({e})", field="config") from None
        for key, value in parse_flat_config(text, str(path)).items():
            _apply(values, key, value, str(path))
    for key in OPTIONS:
        text = getattr(args, key, None)
        if text is not None:
            _apply(values, key, text, f"--{key}")
    try:
        return ExperimentConfig(**values)
    except InvalidParameterError as e:
        raise ConfigError(str(e), field=args.command) from None


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    コマンドラインの入口

    Args:
        argv (Sequence[str]): 引数（省略時は sys.argv[1:]）

    Returns:
        int: 終了コード（0 成功、1 設定の誤り、2 予算切れで部分結果）
    """
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG_ERROR
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG_ERROR

    error_handler = ErrorHandler()
    try:
        cfg = resolve_config(args)
    except ConfigError as e:
        error_handler.handle_error(e, context={"field": e.field})
        sys.stderr.write(f"設定エラー ({e.field}): {e}\n")
        return EXIT_CONFIG_ERROR

    logger.info(f"解決済みの設定: {cfg.canonical()}")
    try:
        runner = ExperimentRunner(cfg, error_handler)
    except InvalidParameterError as e:
        error_handler.handle_error(e, context={"experiment": cfg.experiment})
        sys.stderr.write(f"設定エラー: {e}\n")
        return EXIT_CONFIG_ERROR
    result = runner.run()

    if cfg.out:
        write_result(result, cfg.out, cfg.format, error_handler)
    else:
        sys.stdout.write(render_json(result) if cfg.format == "json" else render_csv(result))
    print_summary(result)
    statistics = error_handler.get_error_statistics()
    if statistics["total_errors"]:
        logger.info(f"エラー集計: {statistics['errors_by_category']} / 重要度 {statistics['errors_by_severity']}")

    if result.truncated:
        sys.stderr.write("予算切れのため部分結果を出力しました\n")
        return EXIT_TRUNCATED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
