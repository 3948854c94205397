#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
エラーハンドリング機能のテスト
例外の分類、履歴、コールバックを確認
"""

import unittest

from utils.error_handler import (
    BudgetExceededError,
    ConfigError,
    ErrorCategory,
    ErrorHandler,
    ErrorSeverity,
    InternalError,
    InvalidParameterError,
    LppLabError,
    NumericalConsistencyError,
    OutOfRangeError,
)


class TestErrorHandler(unittest.TestCase):
    """エラーハンドリング管理クラスのテスト"""

    def setUp(self):
        """テスト前の準備"""
        self.error_handler = ErrorHandler()
        self.test_error = InvalidParameterError("密度が範囲外です")

    def test_error_creation(self):
        """エラー情報作成のテスト"""
        error_info = self.error_handler.handle_error(
            self.test_error,
            ErrorCategory.VALIDATION,
            ErrorSeverity.MEDIUM,
            {'experiment': 'simulate', 'N': 100}
        )

        for key in ('timestamp', 'error_type', 'error_message', 'category', 'severity', 'context', 'error_id'):
            self.assertIn(key, error_info)
        self.assertEqual(error_info['error_type'], 'InvalidParameterError')
        self.assertEqual(error_info['error_message'], '密度が範囲外です')
        self.assertEqual(error_info['category'], 'validation')
        self.assertEqual(error_info['severity'], 'medium')
        self.assertEqual(error_info['context']['N'], 100)
        self.assertEqual(error_info['error_id'], 'ERR_000001')

    def test_category_inferred_from_exception(self):
        """カテゴリを省略すると例外クラスの分類を使う"""
        cases = [
            (InvalidParameterError("x"), 'validation'),
            (OutOfRangeError("x"), 'validation'),
            (ConfigError("x", field="seed"), 'configuration'),
            (BudgetExceededError("x"), 'budget'),
            (InternalError("x"), 'internal'),
            (NumericalConsistencyError("x"), 'numerical'),
            (RuntimeError("x"), 'internal'),
        ]
        for error, expected in cases:
            with self.subTest(error=type(error).__name__):
                self.assertEqual(self.error_handler.handle_error(error)['category'], expected)

    def test_error_severities(self):
        """エラー重要度のテスト"""
        for severity in ErrorSeverity:
            error_info = self.error_handler.handle_error(self.test_error, severity=severity)
            self.assertEqual(error_info['severity'], severity.value)

    def test_error_statistics(self):
        """エラー統計のテスト"""
        for i in range(5):
            self.error_handler.handle_error(NumericalConsistencyError(f"残差 {i}"), severity=ErrorSeverity.HIGH)

        stats = self.error_handler.get_error_statistics()
        self.assertEqual(stats['total_errors'], 5)
        self.assertEqual(stats['errors_by_category']['numerical'], 5)
        self.assertEqual(stats['errors_by_severity']['high'], 5)
        self.assertEqual(len(stats['recent_errors']), 5)

    def test_error_history_cleanup(self):
        """履歴は上限を超えると古いものから捨てる"""
        handler = ErrorHandler(max_history=50)
        for i in range(60):
            handler.handle_error(InternalError(f"エラー{i}"), severity=ErrorSeverity.LOW)
        stats = handler.get_error_statistics()
        self.assertEqual(stats['total_errors'], 50)
        self.assertEqual(stats['recent_errors'][-1]['error_message'], 'エラー59')


class TestCustomErrors(unittest.TestCase):
    """カスタムエラークラスのテスト"""

    def test_hierarchy(self):
        for cls in (InvalidParameterError, OutOfRangeError, ConfigError, BudgetExceededError,
                    InternalError, NumericalConsistencyError):
            self.assertTrue(issubclass(cls, LppLabError))
        self.assertTrue(issubclass(InvalidParameterError, ValueError))
        self.assertTrue(issubclass(OutOfRangeError, IndexError))

    def test_config_error_field(self):
        error = ConfigError("未知の設定項目です", field="rho")
        self.assertEqual(str(error), "未知の設定項目です")
        self.assertEqual(error.field, "rho")
        self.assertIsNone(ConfigError("x").field)


if __name__ == "__main__":
    unittest.main()
