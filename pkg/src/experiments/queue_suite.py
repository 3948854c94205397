#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
待ち行列の検査
Burke の定理、定常初期化の正確さ、累積遊休時間と交換恒等式、空き待ち行列の上界
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy import optimize

from config.optimization_config import OptimizationConfig
from core.lattice import RngStream
from experiments.replicas import ReplicaPool
from experiments.statistics import BinomialEstimate, estimate_frequency, ks_exponential
from queueing.queue_operators import (
    agreement_run,
    burke_fixed_point,
    cumulative_idle,
    empty_queue_bound,
    heavy_traffic_bound,
    interchange_residual,
    lindley_evolve,
    sample_nu,
    sample_stationary_window,
)
from utils.error_handler import InvalidParameterError, NumericalConsistencyError
from utils.utils import ParameterValidator

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CheckRow:
    """1 つの検査の統計量と判定"""
    name: str
    statistic: float
    critical: float
    passed: bool
    samples: int
    note: str = ""


def queue_check(rng: RngStream, lam: float, rho: float, n: int, level: float = 0.01,
                windows: int = 1000, steps: int = 10000, idle_pairs: int = 100) -> List[CheckRow]:
    """
    λ < ρ の M/M/1 について一連の検査を行う

    Args:
        rng (RngStream): 乱数ストリーム
        lam (float): 到着率 λ
        rho (float): サービス率 ρ
        n (int): 窓の長さ
        level (float): KS 検定の有意水準
        windows (int): 定常性検査の独立な窓の数
        steps (int): 定常性検査で進める Lindley の歩数（n 以下に切り詰め）
        idle_pairs (int): 累積遊休時間の恒等式を調べる (k, l) の数

    Returns:
        list: 検査ごとの行
    """
    lam = ParameterValidator.rate(lam, "lambda")
    rho = ParameterValidator.rate(rho, "rho")
    if not lam < rho:
        raise InvalidParameterError(f"0 < lambda < rho が必要です: lambda={lam}, rho={rho}")
    n = ParameterValidator.positive_int(n, "n", minimum=2)
    rows: List[CheckRow] = []

    win = sample_stationary_window(rng.child(0), lam, rho, n)
    outputs = lindley_evolve(win)
    for name, samples, rate in (("departures", outputs.d, lam), ("services", win.s, rho)):
        ks = ks_exponential(samples, rate, level)
        rows.append(CheckRow(name, ks.statistic, ks.critical, ks.passed, ks.n))
    dominance = int(np.count_nonzero(outputs.d < win.s))
    rows.append(CheckRow("departure_dominance", float(dominance), 0.0, dominance == 0, n))

    rows.extend(_stationary_waiting(rng.child(1), lam, rho, min(n, steps), windows, level))
    rows.append(_idle_identity(rng.child(2), win, idle_pairs))

    b = rng.child(3).exponential(lam / 2.0, n)
    a = rng.child(4).exponential(lam, n)
    s = rng.child(5).exponential(rho, n)
    tolerance = OptimizationConfig.get_queueing_config()["identity_tolerance"]
    residual, count = interchange_residual(b, a, s)
    rows.append(CheckRow("interchange", residual, tolerance, residual <= tolerance, count))

    rows.extend(_burke_fixed_point_rows(rng.child(6), lam, rho, n, level))
    for row in rows:
        logger.info(f"待ち行列の検査 {row.name}: 統計量={row.statistic:.4g}, 臨界値={row.critical:.4g}, 合格={row.passed}")
    return rows


def _stationary_waiting(rng: RngStream, lam: float, rho: float, steps: int, windows: int,
                        level: float) -> List[CheckRow]:
    final = np.empty(windows)
    for i in range(windows):
        final[i] = lindley_evolve(sample_stationary_window(rng.child(i), lam, rho, steps)).w[-1]
    atom = estimate_frequency(final == 0.0)
    expected = 1.0 - lam / rho
    rows = [CheckRow(
        "waiting_atom", atom.p_hat, expected, atom.ci_low <= expected <= atom.ci_high, windows,
        note=f"95% 区間 [{atom.ci_low:.4f}, {atom.ci_high:.4f}]",
    )]
    positive = final[final > 0.0]
    if positive.size:
        ks = ks_exponential(positive, rho - lam, level)
        rows.append(CheckRow("waiting_tail", ks.statistic, ks.critical, ks.passed, ks.n))
    return rows


def _idle_identity(rng: RngStream, win, pairs: int) -> CheckRow:
    generator = rng.generator
    failures = 0
    for _ in range(pairs):
        k, l = sorted(int(v) for v in generator.integers(1, win.n + 1, size=2))
        try:
            cumulative_idle(win, k, l)
        except NumericalConsistencyError as e:
            failures += 1
            logger.warning(f"累積遊休時間 k={k}, l={l}: {e}")
    return CheckRow("idle_identity", float(failures), 0.0, failures == 0, pairs)


def _burke_fixed_point_rows(rng: RngStream, lam: float, rho: float, n: int, level: float) -> List[CheckRow]:
    alpha1, alpha2 = lam, lam / 2.0
    burn_in = math.ceil(OptimizationConfig.get_queueing_config()["burn_in_constant"] / (rho - alpha1))
    if burn_in + 3 >= n:
        return [CheckRow("fixed_point", math.nan, math.nan, False, 0, note=f"長さ {n} がバーンイン {burn_in} に足りません")]
    a1, a2, d1, d2 = burke_fixed_point(rng, rho, alpha1, alpha2, n, burn_in)
    rows = []
    for name, samples, rate in (("fixed_point_d1", d1, alpha1), ("fixed_point_d2", d2, alpha2)):
        ks = ks_exponential(samples, rate, level)
        rows.append(CheckRow(name, ks.statistic, ks.critical, ks.passed, ks.n))
    correlation = float(np.corrcoef(d1[:-1], a1[1:])[0, 1])
    threshold = max(0.01, 4.0 / math.sqrt(d1.size - 1))
    rows.append(CheckRow("past_future_correlation", correlation, threshold, abs(correlation) < threshold, d1.size - 1))
    return rows


@dataclass(frozen=True)
class BoundRow:
    """ν^{β,α}(Σ_{i≤m} e_i > 0) のモンテカルロ推定と閉形式の上界"""
    r: float
    m: int
    beta: float
    alpha: float
    theta: float
    estimate: BinomialEstimate
    bound: float
    heavy_traffic: float

    @property
    def holds(self) -> bool:
        """推定値が上界 + 標準誤差 2 つ分以下か"""
        if self.estimate.reps == 0:
            return True
        return self.estimate.p_hat <= self.bound + 2.0 * self.estimate.stderr


def optimal_theta(beta: float, alpha: float, m: int) -> float:
    """empty_queue_bound を最小にする θ ∈ (0, β)"""
    result = optimize.minimize_scalar(
        lambda theta: empty_queue_bound(beta, alpha, m, theta),
        bounds=(beta * 1e-6, beta * (1.0 - 1e-6)),
        method="bounded",
    )
    return float(result.x)


def bound_check(rng: RngStream, rho: float, N: int, r: float, m: int, reps: int,
                theta: Optional[float] = None, pool: Optional[ReplicaPool] = None) -> BoundRow:
    """
    β = ρ − rN^{-1/3}, α = ρ + rN^{-1/3} で上界とモンテカルロ推定を比べる

    Args:
        rng (RngStream): 乱数ストリーム
        rho (float): 密度
        N (int): 規模
        r (float): ずれ
        m (int): 窓長
        reps (int): レプリカ数
        theta (float): 上界の θ（None なら上界を最小化する値）
        pool (ReplicaPool): レプリカ実行器

    Returns:
        BoundRow: 推定と上界
    """
    rho = ParameterValidator.density(rho)
    N = ParameterValidator.positive_int(N, "N")
    m = ParameterValidator.positive_int(m, "m")
    r = float(r)
    shift = r * N ** (-1.0 / 3.0)
    beta, alpha = rho - shift, rho + shift
    if not (0.0 < beta < alpha < 1.0):
        raise InvalidParameterError(f"r={r} では 0 < beta < alpha < 1 になりません (N={N}, rho={rho})")
    theta = optimal_theta(beta, alpha, m) if theta is None else float(theta)
    bound = empty_queue_bound(beta, alpha, m, theta)
    heavy = heavy_traffic_bound(rho, r, N, m, theta)

    def replica(stream: RngStream, index: int) -> bool:
        d, s = sample_nu(stream, beta, alpha, m)
        return agreement_run(d, s) < m

    batch = (pool or ReplicaPool()).run(replica, rng, reps, description=f"上界 r={r}, m={m}")
    row = BoundRow(r, m, beta, alpha, theta, estimate_frequency(batch.values, truncated=batch.truncated), bound, heavy)
    logger.info(f"上界: r={r}, m={m}, 推定={row.estimate.p_hat:.4f}, 上界={bound:.4f}, 成立={row.holds}")
    return row
