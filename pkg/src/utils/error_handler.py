#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
エラーハンドリング管理システム
シミュレーション・実験で発生する例外の分類、記録、ログ出力を提供
"""

import traceback
import logging
from datetime import datetime, timezone
from typing import Dict, Any, Optional, List
from enum import Enum

logger = logging.getLogger(__name__)


class ErrorSeverity(Enum):
    """エラーの重要度"""
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    CRITICAL = "critical"


class ErrorCategory(Enum):
    """エラーのカテゴリ"""
    VALIDATION = "validation"
    CONFIGURATION = "configuration"
    NUMERICAL = "numerical"
    BUDGET = "budget"
    INTERNAL = "internal"
    IO = "io"


class LppLabError(Exception):
    """ライブラリ共通の基底例外"""
    category = ErrorCategory.INTERNAL


class InvalidParameterError(LppLabError, ValueError):
    """パラメータ不正（密度の範囲外、退化した矩形など）"""
    category = ErrorCategory.VALIDATION


class OutOfRangeError(LppLabError, IndexError):
    """座標・添字が対象領域の外"""
    category = ErrorCategory.VALIDATION


class ConfigError(LppLabError):
    """設定ファイル・コマンドライン引数の誤り"""
    category = ErrorCategory.CONFIGURATION

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field


class BudgetExceededError(LppLabError):
    """実行時間予算の超過"""
    category = ErrorCategory.BUDGET


class InternalError(LppLabError):
    """起こり得ない状態（共通終点を持つ測地線が交わらない等）"""
    category = ErrorCategory.INTERNAL


class NumericalConsistencyError(LppLabError):
    """恒等式の残差が許容誤差を超えた"""
    category = ErrorCategory.NUMERICAL


class ErrorHandler:
    """エラーハンドリング管理クラス"""

    def __init__(self, max_history: int = 1000):
        """
        初期化

        Args:
            max_history (int): 保持するエラー履歴の上限
        """
        self.error_count = 0
        self.error_history: List[Dict[str, Any]] = []
        self.max_history = max_history

        logger.debug("エラーハンドリングシステムを初期化しました")

    def handle_error(self, error: Exception, category: Optional[ErrorCategory] = None,
                     severity: ErrorSeverity = ErrorSeverity.MEDIUM,
                     context: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        """
        エラーを処理

        Args:
            error (Exception): 発生したエラー
            category (ErrorCategory): エラーカテゴリ（省略時は例外クラスから推定）
            severity (ErrorSeverity): エラーの重要度
            context (Dict[str, Any]): エラーコンテキスト（実験ID、グリッド点など）

        Returns:
            Dict[str, Any]: エラー情報
        """
        if category is None:
            category = getattr(error, "category", ErrorCategory.INTERNAL)

        error_info = self._create_error_info(error, category, severity, context)
        self._log_error(error_info)
        self._add_to_history(error_info)

        return error_info

    def _create_error_info(self, error: Exception, category: ErrorCategory,
                           severity: ErrorSeverity, context: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        """エラー情報を作成"""
        return {
            'timestamp': datetime.now(timezone.utc),
            'error_type': type(error).__name__,
            'error_message': str(error),
            'category': category.value,
            'severity': severity.value,
            'context': context or {},
            'traceback': traceback.format_exc(),
            'error_id': f"ERR_{self.error_count + 1:06d}"
        }

    def _log_error(self, error_info: Dict[str, Any]):
        """エラーをログに記録"""
        log_message = (
            f"エラー発生: {error_info['error_id']} | "
            f"カテゴリ: {error_info['category']} | "
            f"重要度: {error_info['severity']} | "
            f"メッセージ: {error_info['error_message']}"
        )

        if error_info['severity'] == ErrorSeverity.CRITICAL.value:
            logger.critical(log_message)
        elif error_info['severity'] == ErrorSeverity.HIGH.value:
            logger.error(log_message)
        elif error_info['severity'] == ErrorSeverity.MEDIUM.value:
            logger.warning(log_message)
        else:
            logger.info(log_message)

    def _add_to_history(self, error_info: Dict[str, Any]):
        """エラー履歴に追加"""
        self.error_history.append(error_info)
        self.error_count += 1

        if len(self.error_history) > self.max_history:
            self.error_history.pop(0)

    def get_error_statistics(self) -> Dict[str, Any]:
        """
        エラー統計を取得

        Returns:
            Dict[str, Any]: エラー統計情報
        """
        errors_by_category: Dict[str, int] = {}
        errors_by_severity: Dict[str, int] = {}

        for error in self.error_history:
            category = error['category']
            severity = error['severity']
            errors_by_category[category] = errors_by_category.get(category, 0) + 1
            errors_by_severity[severity] = errors_by_severity.get(severity, 0) + 1

        return {
            'total_errors': len(self.error_history),
            'errors_by_category': errors_by_category,
            'errors_by_severity': errors_by_severity,
            'recent_errors': self.error_history[-10:]
        }
