#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
システム設定管理
環境変数、既定値、設定ファイル（key = value 形式）、ログ設定を管理
"""

import os
import copy
import logging
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import load_dotenv

from utils.error_handler import ConfigError

BASE_DIR = Path(__file__).resolve().parent.parent
DEFAULT_CONFIG_PATH = BASE_DIR / "lpp_lab.conf"

DEFAULT_CONFIG: Dict[str, Any] = {
    # シミュレーション設定
    "simulation": {
        "seed": 0,
        "rho": 0.5,
        "anchor_multiplier": 4,   # 無限測地線の代理: 距離 K·N に置く定常場
        "c0": 0.5,                # 局所定常性実験の c 上限
        "stabilization_c": 1.0,   # M ≤ c·N^{2/3}
    },

    # 実験実行設定
    "experiments": {
        "jobs": 4,
        "reps": 100,
        "budget_seconds": 0,      # 0 は無制限
        "show_progress": False,
        "ks_level": 0.01,
    },

    # 出力設定
    "output": {
        "format": "csv",
        "float_format": "%.17g",
    },

    # ログ設定
    "logging": {
        "level": "INFO",
        "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        "file": "",
        "max_size_mb": 10,
        "backup_count": 5,
    },
}

ENV_MAPPINGS = {
    "LPP_LAB_SEED": ("simulation", "seed"),
    "LPP_LAB_ANCHOR": ("simulation", "anchor_multiplier"),
    "LPP_LAB_JOBS": ("experiments", "jobs"),
    "LPP_LAB_BUDGET_SECONDS": ("experiments", "budget_seconds"),
    "LOG_LEVEL": ("logging", "level"),
    "LPP_LAB_LOG_FILE": ("logging", "file"),
}


def parse_flat_config(text: str, source: str = "<config>") -> Dict[str, str]:
    """
    key = value 形式の設定テキストを解析

    Args:
        text (str): 設定テキスト
        source (str): エラーメッセージ用の入力名

    Returns:
        Dict[str, str]: キーと生の文字列値
    """
    values: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: 'key = value' 形式ではありません: {raw.strip()}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: キーが空です")
        values[key] = value
    return values


def coerce_like(template: Any, value: Any, field: str) -> Any:
    """既定値の型に合わせて文字列値を変換"""
    if not isinstance(value, str):
        return value
    try:
        if isinstance(template, bool):
            lowered = value.lower()
            if lowered not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(value)
            return lowered in ("true", "1", "yes")
        if isinstance(template, int):
            return int(value)
        if isinstance(template, float):
            return float(value)
    except ValueError:
        raise ConfigError(f"設定値の型が不正です: {field}={value!r}", field=field) from None
    return value


class Config:
    """システム設定クラス"""

    def __init__(self, config_file: Optional[str] = str(DEFAULT_CONFIG_PATH), setup_logging: bool = True):
        """
        初期化

        Args:
            config_file (str): 設定ファイルのパス（存在しなければ既定値のみ）
            setup_logging (bool): ルートロガーを設定するか
        """
        self.config_file = config_file
        self.config = self._load_config()
        if setup_logging:
            self._setup_logging()

    def _load_config(self) -> Dict[str, Any]:
        """設定を読み込み"""
        load_dotenv()
        config = copy.deepcopy(DEFAULT_CONFIG)

        if self.config_file and os.path.exists(self.config_file):
            try:
                with open(self.config_file, "r", encoding="utf-8") as f:
                    self._merge_flat(config, parse_flat_config(f.read(), self.config_file))
            except ConfigError as e:
                logging.getLogger(__name__).warning(f"設定ファイルの読み込みに失敗: {e} / 既定値を使用します")

        self._apply_environment_overrides(config)
        return config

    def _merge_flat(self, config: Dict[str, Any], flat: Dict[str, str]):
        """ドット区切りキーの値をマージ"""
        for key, value in flat.items():
            path = key.split(".")
            current = config
            for part in path[:-1]:
                current = current.setdefault(part, {})
            current[path[-1]] = coerce_like(current.get(path[-1]), value, key)

    def _apply_environment_overrides(self, config: Dict[str, Any]):
        """環境変数で設定をオーバーライド"""
        for env_var, config_path in ENV_MAPPINGS.items():
            env_value = os.getenv(env_var)
            if env_value:
                current = config
                for key in config_path[:-1]:
                    current = current[key]
                current[config_path[-1]] = coerce_like(current.get(config_path[-1]), env_value, env_var)

    def _setup_logging(self):
        """ログ設定を初期化（再実行しても重複しない）"""
        log_config = self.config["logging"]
        log_level = getattr(logging, str(log_config["level"]).upper(), logging.INFO)
        formatter = logging.Formatter(log_config["format"])

        root = logging.getLogger()
        for handler in list(root.handlers):
            if getattr(handler, "_lpp_lab", False):
                root.removeHandler(handler)
                handler.close()

        if log_config["file"]:
            log_file = Path(log_config["file"])
            log_file.parent.mkdir(parents=True, exist_ok=True)
            file_handler = RotatingFileHandler(
                log_file,
                maxBytes=int(log_config["max_size_mb"]) * 1024 * 1024,
                backupCount=int(log_config["backup_count"]),
                encoding="utf-8",
            )
            file_handler.setFormatter(formatter)
            file_handler.setLevel(log_level)
            file_handler._lpp_lab = True
            root.addHandler(file_handler)

        console_handler = logging.StreamHandler()
        console_handler.setFormatter(formatter)
        console_handler.setLevel(log_level)
        console_handler._lpp_lab = True

        root.setLevel(log_level)
        root.addHandler(console_handler)

    def get(self, key_path: str, default: Any = None) -> Any:
        """
        設定値を取得

        Args:
            key_path (str): 設定キーのパス（例: "simulation.seed"）
            default (Any): デフォルト値

        Returns:
            Any: 設定値
        """
        current = self.config
        for key in key_path.split("."):
            if isinstance(current, dict) and key in current:
                current = current[key]
            else:
                return default
        return current


# グローバル設定インスタンス
config = Config()
