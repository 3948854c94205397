#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
揺らぎの指数
通過時間の分散指数、定常プロファイルのガウス性、出口点の裾、Burke 性の検査
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from core.boundary import Orientation
from core.lattice import Coord, RngStream, ORIGIN, sample_weight_field
from core.passage import last_passage, terminal_passage_value
from core.stationary import (
    Density,
    burke_edge_increments,
    characteristic_direction,
    exit_point,
    sample_stationary_boundary,
    stationary_passage,
)
from experiments.replicas import ReplicaPool
from experiments.statistics import (
    BinomialEstimate,
    KSResult,
    SlopeFit,
    TailEstimates,
    estimate_frequency,
    fit_loglog_slope,
    ks_against,
    ks_exponential,
    tail_estimates,
)
from utils.error_handler import InvalidParameterError
from utils.utils import ParameterValidator

logger = logging.getLogger(__name__)

# ρ=1/2 の定常プロファイルの 1 歩あたりの分散 Var(I)+Var(J)
PROFILE_STEP_VARIANCE = 8.0


@dataclass(frozen=True)
class PassageMoments:
    """規模 N での G_{(1,1),(N,N)} の標本平均と標本分散"""
    N: int
    mean: float
    variance: float
    reps: int
    truncated: bool = False

    @property
    def mean_over_N(self) -> float:
        return self.mean / self.N


@dataclass(frozen=True)
class VarianceExponent:
    moments: Tuple[PassageMoments, ...]
    fit: Optional[SlopeFit]
    note: str = ""


def variance_exponent(rng: RngStream, N_grid: Sequence[int], reps: int,
                      pool: Optional[ReplicaPool] = None) -> VarianceExponent:
    """
    log Var(G) を log N に当てはめる（目標傾き 2/3）。平均/N は 4 に近づく

    Args:
        rng (RngStream): 乱数ストリーム（N ごとに子ストリーム）
        N_grid (Sequence[int]): 昇順の N
        reps (int): レプリカ数（2 以上）
        pool (ReplicaPool): レプリカ実行器

    Returns:
        VarianceExponent: N ごとの標本積率と傾き（点が足りなければ fit は None）
    """
    N_grid = tuple(ParameterValidator.positive_int(N, "N") for N in N_grid)
    ParameterValidator.grid(N_grid, "N", ascending=True)
    reps = ParameterValidator.positive_int(reps, "reps", minimum=2)
    pool = pool or ReplicaPool()

    moments = []
    for i, N in enumerate(N_grid):
        batch = pool.run(lambda stream, index, N=N: terminal_passage_value(stream, N, N), rng.child(i), reps,
                         description=f"通過時間 N={N}")
        values = np.asarray(batch.values, dtype=np.float64)
        if values.size >= 2:
            mean, variance = float(values.mean()), float(values.var(ddof=1))
        else:
            mean, variance = math.nan, math.nan
        moments.append(PassageMoments(N, mean, variance, int(values.size), batch.truncated))
        logger.info(f"通過時間: N={N}, 平均/N={mean / N:.4f}, 分散={variance:.4f} ({values.size} レプリカ)")

    fit, note = None, ""
    try:
        fit = fit_loglog_slope([m.N for m in moments], [m.variance for m in moments], target=2.0 / 3.0)
    except InvalidParameterError as e:
        note = str(e)
    return VarianceExponent(tuple(moments), fit, note)


@dataclass(frozen=True)
class ProfileGaussianity:
    """
    窓内のプロファイルのガウス性

    step_ks は定常プロファイルの 1 歩の差 I−J を Laplace(尺度 2) と比較したもの。
    stationary_ks と point_ks は窓の端までの和を sqrt(8L) で割って標準正規と比較したもの。
    """
    N: int
    c: float
    window: int
    step_ks: KSResult
    step_variance: float
    stationary_ks: KSResult
    point_ks: KSResult


def profile_gaussianity(rng: RngStream, N: int, c: float, reps: int, level: float = 0.01,
                        pool: Optional[ReplicaPool] = None) -> ProfileGaussianity:
    """
    (N,N) から反対角線方向の窓 L = ⌊cN^{2/3}⌋ での ρ=1/2 定常プロファイルと点対点プロファイル

    定常場では窓の 1 歩ごとの差は i.i.d. の I−J になり、和は分散 8 のランダムウォークになる。

    Args:
        rng (RngStream): 乱数ストリーム
        N (int): 規模
        c (float): 窓の大きさ
        reps (int): レプリカ数
        level (float): KS 検定の有意水準
        pool (ReplicaPool): レプリカ実行器

    Returns:
        ProfileGaussianity: 検定結果
    """
    N = ParameterValidator.positive_int(N, "N", minimum=2)
    c = float(c)
    if not c > 0.0:
        raise InvalidParameterError(f"無効な値 c={c}: 正の値が必要です")
    window = max(1, math.floor(c * N ** (2.0 / 3.0)))
    if window >= N:
        raise InvalidParameterError(f"窓 L={window} が N={N} に対して大きすぎます")
    density = Density(0.5)
    points = [Coord(N + k, N - k) for k in range(window + 1)]

    def replica(stream: RngStream, index: int) -> Tuple[np.ndarray, float]:
        boundary = sample_stationary_boundary(stream.child(0), density, (N + window, N))
        bulk = sample_weight_field(stream.child(1), boundary.bulk_rect())
        stationary = stationary_passage(bulk, boundary)
        point = last_passage(bulk, bulk.rect.lo, Orientation.FORWARD)
        stationary_profile = np.array([stationary.value(p) for p in points])
        point_profile = np.array([point.value(p) for p in points])
        return np.diff(stationary_profile), float(point_profile[-1] - point_profile[0])

    batch = (pool or ReplicaPool()).run(replica, rng, reps, description=f"プロファイル c={c}")
    if not batch.values:
        raise InvalidParameterError("完了したレプリカがありません")
    steps = np.concatenate([v[0] for v in batch.values])
    sums = np.array([v[0].sum() for v in batch.values])
    point_sums = np.array([v[1] for v in batch.values])
    scale = math.sqrt(PROFILE_STEP_VARIANCE * window)

    result = ProfileGaussianity(
        N=N,
        c=c,
        window=window,
        step_ks=ks_against(steps, "laplace", (0.0, 2.0), level),
        step_variance=float(steps.var(ddof=1)) if steps.size > 1 else math.nan,
        stationary_ks=ks_against(sums / scale, "norm", (0.0, 1.0), level),
        point_ks=ks_against(point_sums / scale, "norm", (0.0, 1.0), level),
    )
    logger.info(
        f"プロファイル: N={N}, L={window}, KS(定常)={result.stationary_ks.statistic:.4f}, "
        f"KS(点対点)={result.point_ks.statistic:.4f}"
    )
    return result


def exit_point_tail(rng: RngStream, rho: float, N: int, r_grid: Sequence[float], reps: int,
                    pool: Optional[ReplicaPool] = None) -> TailEstimates:
    """
    特性方向 ⌊Nξ(ρ)⌋ への定常測地線の出口点の裾 P(|Z| > rN^{2/3})（目標傾き −3）

    Args:
        rng (RngStream): 乱数ストリーム
        rho (float): 密度
        N (int): 規模
        r_grid (Sequence[float]): r のグリッド
        reps (int): レプリカ数
        pool (ReplicaPool): レプリカ実行器

    Returns:
        TailEstimates: 裾の推定
    """
    density = Density(ParameterValidator.density(rho))
    N = ParameterValidator.positive_int(N, "N")
    r_grid = ParameterValidator.grid(r_grid, "r", minimum_length=1)
    xi = characteristic_direction(density)
    target = Coord(math.floor(N * xi[0]), math.floor(N * xi[1]))
    if target.x < 1 or target.y < 1:
        raise InvalidParameterError(f"N={N} が小さすぎます: 目標 {target}")

    def replica(stream: RngStream, index: int) -> int:
        boundary = sample_stationary_boundary(stream.child(0), density, target.as_tuple())
        bulk = sample_weight_field(stream.child(1), boundary.bulk_rect())
        return exit_point(stationary_passage(bulk, boundary), target).magnitude

    batch = (pool or ReplicaPool()).run(replica, rng, reps, description=f"出口点 rho={density.rho}")
    scale = N ** (2.0 / 3.0)
    return tail_estimates(
        batch.values, [r * scale for r in r_grid], r_grid, "r", target=-3.0, truncated=batch.truncated
    )


@dataclass(frozen=True)
class BurkeSummary:
    """北東の縁の増分の KS 検定の合格頻度"""
    rho: float
    N: int
    e1: BinomialEstimate
    e2: BinomialEstimate
    mean_statistic_e1: float
    mean_statistic_e2: float


def burke_check(rng: RngStream, rho: float, N: int, reps: int, level: float = 0.01,
                pool: Optional[ReplicaPool] = None) -> BurkeSummary:
    """
    N×N の定常場の最上段の e1 増分を Exp(1−ρ)、最右列の e2 増分を Exp(ρ) と KS 比較する

    Returns:
        BurkeSummary: e1 側と e2 側の合格頻度
    """
    density = Density(ParameterValidator.density(rho))
    N = ParameterValidator.positive_int(N, "N", minimum=2)

    def replica(stream: RngStream, index: int) -> Tuple[KSResult, KSResult]:
        boundary = sample_stationary_boundary(stream.child(0), density, (N, N), ORIGIN)
        bulk = sample_weight_field(stream.child(1), boundary.bulk_rect())
        inc_e1, inc_e2 = burke_edge_increments(stationary_passage(bulk, boundary))
        return ks_exponential(inc_e1, density.e1_rate, level), ks_exponential(inc_e2, density.e2_rate, level)

    batch = (pool or ReplicaPool()).run(replica, rng, reps, description=f"Burke rho={density.rho}")
    e1 = [v[0] for v in batch.values]
    e2 = [v[1] for v in batch.values]
    summary = BurkeSummary(
        rho=density.rho,
        N=N,
        e1=estimate_frequency([r.passed for r in e1], truncated=batch.truncated),
        e2=estimate_frequency([r.passed for r in e2], truncated=batch.truncated),
        mean_statistic_e1=float(np.mean([r.statistic for r in e1])) if e1 else math.nan,
        mean_statistic_e2=float(np.mean([r.statistic for r in e2])) if e2 else math.nan,
    )
    logger.info(f"Burke: rho={density.rho}, N={N}, 合格 e1={summary.e1.p_hat:.3f}, e2={summary.e2.p_hat:.3f}")
    return summary
