#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
ユーティリティ関数群
性能監視、メモリ見積もり、進捗表示、パラメータ検証などの共通機能
"""

import sys
import math
import time
import logging
from functools import wraps
from pathlib import Path
from typing import Iterable, Optional, Sequence, Tuple, Union

import psutil

from .error_handler import InvalidParameterError

logger = logging.getLogger(__name__)


class PerformanceMonitor:
    """パフォーマンス監視クラス"""

    def __init__(self):
        self.start_time = None
        self.memory_start = None

    def start(self):
        """監視開始"""
        self.start_time = time.perf_counter()
        self.memory_start = psutil.Process().memory_info().rss / 1024 / 1024  # MB

    def end(self, operation_name: str = "Operation") -> float:
        """監視終了（経過秒数を返す）"""
        if self.start_time is None:
            return 0.0

        elapsed_time = time.perf_counter() - self.start_time
        memory_end = psutil.Process().memory_info().rss / 1024 / 1024  # MB
        memory_diff = memory_end - self.memory_start

        logger.info(f"{operation_name}: {elapsed_time:.2f}s, Memory: {memory_diff:+.1f}MB")

        self.start_time = None
        self.memory_start = None
        return elapsed_time


def performance_monitor(func):
    """パフォーマンス監視デコレータ"""
    @wraps(func)
    def wrapper(*args, **kwargs):
        monitor = PerformanceMonitor()
        monitor.start()
        try:
            return func(*args, **kwargs)
        finally:
            monitor.end(func.__name__)
    return wrapper


class MemoryGuard:
    """格子全体を保持するフィールドのメモリ見積もり"""

    # 値（float64）と重み（float64）、ビット列（1bit/セル）
    BYTES_PER_CELL = 8 + 8 + 1 / 8

    @staticmethod
    def estimate_field_bytes(width: int, height: int) -> float:
        """フィールド1枚分の概算バイト数"""
        return width * height * MemoryGuard.BYTES_PER_CELL

    @staticmethod
    def check(width: int, height: int, limit: int):
        """
        フルフィールドの上限を確認

        Args:
            width (int): 幅
            height (int): 高さ
            limit (int): 一辺の上限（既定 8192）
        """
        if max(width, height) > limit:
            raise InvalidParameterError(
                f"フルフィールドの上限を超えています: {width}x{height} > {limit} "
                f"(約 {MemoryGuard.estimate_field_bytes(width, height) / 2**30:.1f} GiB)"
            )


class ProgressBar:
    """プログレスバークラス（標準エラー出力）"""

    def __init__(self, total: int, description: str = "処理中", width: int = 40, stream=None):
        """
        初期化

        Args:
            total (int): 総数
            description (str): 説明
            width (int): バーの幅
            stream: 出力先（既定は sys.stderr）
        """
        self.total = total
        self.description = description
        self.width = width
        self.current = 0
        self.start_time = time.time()
        self.stream = stream or sys.stderr

    def update(self, increment: int = 1):
        """進捗を更新"""
        self.current += increment
        self._display()

    def _display(self):
        """プログレスバーを表示"""
        if self.total == 0:
            return

        progress = min(self.current / self.total, 1.0)
        filled = int(self.width * progress)
        bar = "█" * filled + "░" * (self.width - filled)

        elapsed = time.time() - self.start_time
        if progress > 0:
            eta = elapsed / progress * (1 - progress)
            eta_str = f"残り: {format_duration(eta)}"
        else:
            eta_str = "残り: 計算中..."

        self.stream.write(
            f"\r{self.description}: |{bar}| {progress * 100:.1f}% ({self.current}/{self.total}) {eta_str}"
        )
        self.stream.flush()

    def finish(self):
        """完了"""
        self.current = self.total
        self._display()
        self.stream.write("\n")


class ParameterValidator:
    """パラメータ検証クラス（不正時は InvalidParameterError）"""

    @staticmethod
    def density(rho: float, field: str = "rho") -> float:
        """
        密度 ρ ∈ (0,1) を検証

        Args:
            rho (float): 密度
            field (str): エラーメッセージに含めるフィールド名

        Returns:
            float: 検証済みの値
        """
        rho = float(rho)
        if not (0.0 < rho < 1.0) or math.isnan(rho):
            raise InvalidParameterError(f"無効な密度 {field}={rho}: 0 < {field} < 1 が必要です")
        return rho

    @staticmethod
    def direction(xi: Sequence[float], field: str = "xi") -> Tuple[float, float]:
        """単体内部の方向 (ξ₁, ξ₂) を検証し、和が1になるよう正規化"""
        if len(xi) != 2:
            raise InvalidParameterError(f"無効な方向 {field}={tuple(xi)}: 2成分が必要です")
        x1, x2 = float(xi[0]), float(xi[1])
        if not (x1 > 0.0 and x2 > 0.0):
            raise InvalidParameterError(f"無効な方向 {field}={(x1, x2)}: 両成分が正である必要があります")
        total = x1 + x2
        return x1 / total, x2 / total

    @staticmethod
    def rate(rate: float, field: str = "rate") -> float:
        """正の率を検証"""
        rate = float(rate)
        if not rate > 0.0 or math.isinf(rate):
            raise InvalidParameterError(f"無効な率 {field}={rate}: 正の有限値が必要です")
        return rate

    @staticmethod
    def positive_int(value: int, field: str, minimum: int = 1) -> int:
        """下限付き整数を検証"""
        if isinstance(value, float) and not value.is_integer():
            raise InvalidParameterError(f"無効な値 {field}={value}: 整数が必要です")
        value = int(value)
        if value < minimum:
            raise InvalidParameterError(f"無効な値 {field}={value}: {minimum} 以上が必要です")
        return value

    @staticmethod
    def grid(values: Iterable[Union[int, float]], field: str, ascending: bool = False,
             minimum_length: int = 0) -> Tuple[float, ...]:
        """グリッドを検証（昇順指定時は狭義単調増加）"""
        values = tuple(values)
        if len(values) < minimum_length:
            raise InvalidParameterError(
                f"無効なグリッド {field}={values}: {minimum_length} 点以上が必要です"
            )
        if ascending and any(b <= a for a, b in zip(values, values[1:])):
            raise InvalidParameterError(f"無効なグリッド {field}={values}: 昇順である必要があります")
        return values


def ensure_parent_directory(path: Union[str, Path]) -> Path:
    """
    出力ファイルの親ディレクトリを確実に作成

    Args:
        path (str | Path): ファイルパス

    Returns:
        Path: 正規化されたパス
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def format_duration(seconds: Optional[float]) -> str:
    """経過秒数を表示用文字列へ"""
    if seconds is None:
        return "-"
    if seconds >= 60:
        return f"{seconds / 60:.1f}分"
    return f"{seconds:.2f}秒"
