#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
システム最適化設定
並列度、メモリ上限、行ブロックサイズなどの性能関連設定を管理
"""

import os
from typing import Dict, Any


class OptimizationConfig:
    """最適化設定クラス"""

    # パフォーマンス設定
    PERFORMANCE = {
        "max_workers": 4,        # レプリカ並列の最大ワーカー数
        "row_block": 256,        # ストリーミング掃引で一度に生成する行数
    }

    # メモリ設定
    MEMORY = {
        "full_field_limit": 8192,  # フルフィールドを保持する一辺の上限
    }

    # 待ち行列設定
    QUEUEING = {
        "burn_in_constant": 40.0,  # バーンイン長 ⌈40/率差⌉
        "identity_tolerance": 1e-9,
    }

    @classmethod
    def get_performance_config(cls) -> Dict[str, Any]:
        """パフォーマンス設定を取得"""
        return cls.PERFORMANCE.copy()

    @classmethod
    def get_memory_config(cls) -> Dict[str, Any]:
        """メモリ設定を取得"""
        return cls.MEMORY.copy()

    @classmethod
    def get_queueing_config(cls) -> Dict[str, Any]:
        """待ち行列設定を取得"""
        return cls.QUEUEING.copy()

    @classmethod
    def update_config(cls, section: str, key: str, value: Any):
        """設定を更新"""
        if hasattr(cls, section.upper()):
            getattr(cls, section.upper())[key] = value


def load_optimization_config():
    """環境変数から最適化設定を読み込み"""
    if os.getenv("MAX_WORKERS"):
        OptimizationConfig.update_config("performance", "max_workers", int(os.getenv("MAX_WORKERS")))

    if os.getenv("ROW_BLOCK"):
        OptimizationConfig.update_config("performance", "row_block", int(os.getenv("ROW_BLOCK")))

    if os.getenv("FULL_FIELD_LIMIT"):
        OptimizationConfig.update_config("memory", "full_field_limit", int(os.getenv("FULL_FIELD_LIMIT")))


# 設定を読み込み
load_optimization_config()
