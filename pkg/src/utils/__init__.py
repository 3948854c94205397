#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
ユーティリティモジュール
エラーハンドリング、性能監視、パラメータ検証などの共通機能を提供
"""

from .error_handler import (
    ErrorHandler,
    ErrorCategory,
    ErrorSeverity,
    LppLabError,
    InvalidParameterError,
    OutOfRangeError,
    ConfigError,
    BudgetExceededError,
    InternalError,
    NumericalConsistencyError,
)

__all__ = [
    'ErrorHandler', 'ErrorCategory', 'ErrorSeverity',
    'LppLabError', 'InvalidParameterError', 'OutOfRangeError', 'ConfigError',
    'BudgetExceededError', 'InternalError', 'NumericalConsistencyError',
]
