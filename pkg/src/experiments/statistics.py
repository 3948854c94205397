#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
推定と検定
二項頻度の信頼区間、両対数の傾き推定、指数分布への KS 検定
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from utils.error_handler import InvalidParameterError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BinomialEstimate:
    """レプリカの成功回数から得た頻度の推定"""
    count: int
    reps: int
    p_hat: float
    stderr: float
    ci_low: float
    ci_high: float
    method: str = "wilson"
    truncated: bool = False


@dataclass(frozen=True)
class SlopeFit:
    """両対数の最小二乗当てはめ"""
    slope: float
    intercept: float
    residual: float
    grid: Tuple[float, ...]
    excluded: Tuple[float, ...] = ()
    target: Optional[float] = None

    def within(self, tolerance: float) -> bool:
        """目標の傾きとの差が tolerance 以内か"""
        if self.target is None:
            return True
        return abs(self.slope - self.target) <= tolerance


@dataclass(frozen=True)
class KSResult:
    """一標本 KS 検定の結果"""
    statistic: float
    pvalue: float
    critical: float
    passed: bool
    n: int = field(default=0)


def binomial_interval(successes: int, n: int, confidence: float = 0.95) -> Tuple[float, float, str]:
    """
    二項比率の信頼区間

    通常は Wilson 区間。成功 0 回のセルは Clopper–Pearson の上限を使う。

    Args:
        successes (int): 成功回数
        n (int): 試行回数
        confidence (float): 信頼水準

    Returns:
        tuple: (下限, 上限, 方法名)
    """
    if n <= 0:
        return math.nan, math.nan, "none"
    if not 0 <= successes <= n:
        raise InvalidParameterError(f"成功回数 {successes} が試行回数 {n} の範囲外です")
    tail = (1.0 - confidence) / 2.0
    if successes == 0:
        return 0.0, float(stats.beta.ppf(1.0 - tail, 1, n)), "clopper-pearson"

    z = float(stats.norm.ppf(1.0 - tail))
    p = successes / n
    denominator = 1.0 + z * z / n
    center = (p + z * z / (2.0 * n)) / denominator
    half = z * math.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denominator
    return max(0.0, center - half), min(1.0, center + half), "wilson"


def estimate_frequency(flags: Sequence[bool], confidence: float = 0.95, truncated: bool = False) -> BinomialEstimate:
    """真偽の列から頻度・標準誤差・信頼区間を計算（truncated は予算切れの印）"""
    flags = np.asarray(flags, dtype=bool)
    return frequency_from_counts(int(flags.sum()), int(flags.size), confidence, truncated)


def complement(estimate: BinomialEstimate, confidence: float = 0.95) -> BinomialEstimate:
    """余事象の推定（成功と失敗を入れ替える）"""
    return frequency_from_counts(estimate.reps - estimate.count, estimate.reps, confidence, estimate.truncated)


def frequency_from_counts(count: int, reps: int, confidence: float = 0.95, truncated: bool = False) -> BinomialEstimate:
    if reps == 0:
        return BinomialEstimate(0, 0, math.nan, math.nan, math.nan, math.nan, "none", truncated)
    p_hat = count / reps
    stderr = math.sqrt(p_hat * (1.0 - p_hat) / reps)
    low, high, method = binomial_interval(count, reps, confidence)
    return BinomialEstimate(count, reps, p_hat, stderr, low, high, method, truncated)


def fit_loglog_slope(x: Sequence[float], y: Sequence[float], target: Optional[float] = None) -> SlopeFit:
    """
    log y を log x に最小二乗で当てはめる

    y が 0 以下または非有限の点は除外して excluded に記録する。

    Args:
        x (Sequence[float]): 説明変数（正）
        y (Sequence[float]): 目的変数
        target (float): 比較する理論上の傾き

    Returns:
        SlopeFit: 当てはめ結果
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise InvalidParameterError("x と y の長さが一致しません")
    keep = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
    if int(keep.sum()) < 2:
        raise InvalidParameterError(f"傾きの推定には有効な点が 2 点以上必要です（有効 {int(keep.sum())} 点）")
    log_x = np.log(x[keep])
    log_y = np.log(y[keep])
    result = stats.linregress(log_x, log_y)
    residual = float(np.sum((log_y - (result.intercept + result.slope * log_x)) ** 2))
    excluded = tuple(float(v) for v in x[~keep])
    if excluded:
        logger.info(f"傾きの推定から {len(excluded)} 点を除外しました: {excluded}")
    return SlopeFit(
        slope=float(result.slope),
        intercept=float(result.intercept),
        residual=residual,
        grid=tuple(float(v) for v in x[keep]),
        excluded=excluded,
        target=target,
    )


def dominating_constant(x: Sequence[float], y: Sequence[float], exponent: float) -> float:
    """すべての行で C·x^exponent ≥ y となる最小の C"""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    keep = np.isfinite(y) & (x > 0)
    if not keep.any():
        return math.nan
    return float(np.max(y[keep] / x[keep] ** exponent))


def ks_exponential(samples: Sequence[float], rate: float, level: float = 0.01) -> KSResult:
    """
    Exp(rate) への一標本 KS 検定

    Args:
        samples (Sequence[float]): 標本
        rate (float): 率
        level (float): 有意水準

    Returns:
        KSResult: 統計量と臨界値
    """
    return ks_against(samples, "expon", (0.0, 1.0 / rate), level)


def ks_against(samples: Sequence[float], distribution: str, args: Tuple[float, ...] = (),
               level: float = 0.01) -> KSResult:
    """scipy の連続分布名に対する一標本 KS 検定"""
    samples = np.asarray(samples, dtype=np.float64).reshape(-1)
    if samples.size == 0:
        raise InvalidParameterError("KS 検定の標本が空です")
    result = stats.kstest(samples, distribution, args=args)
    critical = float(stats.kstwo.ppf(1.0 - level, samples.size))
    statistic = float(result.statistic)
    return KSResult(statistic, float(result.pvalue), critical, statistic < critical, int(samples.size))


@dataclass(frozen=True)
class TailEstimates:
    """閾値のグリッド上の頻度推定と両対数の傾き"""
    parameter: str
    grid: Tuple[float, ...]
    estimates: Tuple[BinomialEstimate, ...]
    fit: Optional[SlopeFit] = None
    note: str = ""

    @property
    def p_hats(self) -> np.ndarray:
        return np.array([e.p_hat for e in self.estimates], dtype=np.float64)


def tail_estimates(samples: Sequence[float], thresholds: Sequence[float], grid: Sequence[float],
                   parameter: str, target: Optional[float] = None, truncated: bool = False,
                   upper: bool = True) -> TailEstimates:
    """
    標本から閾値ごとの頻度を推定し、grid に対する傾きを当てはめる

    Args:
        samples (Sequence[float]): 標本
        thresholds (Sequence[float]): grid の各点に対応する閾値
        grid (Sequence[float]): 傾きの説明変数
        parameter (str): grid のパラメータ名
        target (float): 理論上の傾き
        truncated (bool): 予算切れの印
        upper (bool): True なら P(標本 > 閾値)、False なら P(標本 ≤ 閾値)

    Returns:
        TailEstimates: 推定結果
    """
    samples = np.asarray(samples, dtype=np.float64)
    estimates = []
    for threshold in thresholds:
        flags = samples > threshold if upper else samples <= threshold
        estimates.append(estimate_frequency(flags, truncated=truncated))
    p_hats = [e.p_hat for e in estimates]
    fit, note = None, ""
    try:
        fit = fit_loglog_slope(grid, p_hats, target)
    except InvalidParameterError as e:
        note = str(e)
    return TailEstimates(parameter, tuple(float(g) for g in grid), tuple(estimates), fit, note)
