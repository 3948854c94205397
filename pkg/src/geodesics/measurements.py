#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
測地線の計測
安定化、合流点の裾、巨視的な合流、横方向の揺らぎ
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from config.config import config
from core.lattice import Coord, Rect, RngStream, ORIGIN
from experiments.replicas import ReplicaPool
from experiments.statistics import BinomialEstimate, TailEstimates, estimate_frequency, tail_estimates
from geodesics.forest import (
    coalescence_point,
    restricted_forests_agree,
    sample_point_to_point_forest,
    sample_stabilization_forests,
)
from utils.error_handler import InvalidParameterError
from utils.utils import ParameterValidator

logger = logging.getLogger(__name__)


def _target(xi: Tuple[float, float], N: int) -> Coord:
    target = Coord(math.floor(N * xi[0]), math.floor(N * xi[1]))
    if target.x < 1 or target.y < 1:
        raise InvalidParameterError(f"N={N} が小さすぎます: ⌊Nξ⌋={target}")
    return target


def stabilization_profile(rng: RngStream, xi: Sequence[float], N: int, M_grid: Sequence[int], reps: int,
                          anchor: Optional[float] = None,
                          pool: Optional[ReplicaPool] = None) -> List[BinomialEstimate]:
    """
    M のグリッド全体で安定化の頻度を推定（同じレプリカを共有するので M について単調）

    Args:
        rng (RngStream): 乱数ストリーム
        xi (Sequence[float]): 方向
        N (int): 規模
        M_grid (Sequence[int]): 箱の大きさ
        reps (int): レプリカ数
        anchor (float): 錨の倍率 K（None なら設定値）
        pool (ReplicaPool): レプリカ実行器

    Returns:
        list: M ごとの一致頻度
    """
    xi = ParameterValidator.direction(xi)
    N = ParameterValidator.positive_int(N, "N")
    anchor = float(config.get("simulation.anchor_multiplier", 4) if anchor is None else anchor)
    limit = float(config.get("simulation.stabilization_c", 1.0)) * N ** (2.0 / 3.0)
    boxes = []
    for M in M_grid:
        M = ParameterValidator.positive_int(M, "M", minimum=0)
        if M > limit:
            raise InvalidParameterError(f"M={M} が上限 c·N^(2/3)={limit:.1f} を超えています")
        boxes.append(Rect(ORIGIN, Coord(math.floor(M * xi[0]), math.floor(M * xi[1]))))

    def replica(stream: RngStream, index: int) -> Tuple[bool, ...]:
        stationary, point = sample_stabilization_forests(stream, xi, N, anchor)
        return tuple(restricted_forests_agree(stationary, point, box) for box in boxes)

    batch = (pool or ReplicaPool()).run(replica, rng, reps, description=f"安定化 N={N}")
    estimates = [
        estimate_frequency([flags[i] for flags in batch.values], truncated=batch.truncated)
        for i in range(len(boxes))
    ]
    for M, estimate in zip(M_grid, estimates):
        logger.info(f"安定化: N={N}, M={M}, K={anchor}, 一致 {estimate.count}/{estimate.reps}")
    return estimates


def stabilization_check(rng: RngStream, xi: Sequence[float], N: int, M: int, reps: int,
                        anchor: Optional[float] = None, pool: Optional[ReplicaPool] = None) -> BinomialEstimate:
    """R^{ξ,M} に制限した点対点の森と定常場の森が一致する頻度"""
    return stabilization_profile(rng, xi, N, [M], reps, anchor, pool)[0]


def coalescence_tail(rng: RngStream, k: int, R_grid: Sequence[float], N: int, reps: int,
                     xi: Sequence[float] = (0.5, 0.5), pool: Optional[ReplicaPool] = None) -> TailEstimates:
    """
    始点 (0,0) と (0, ⌈k^{2/3}⌉) の測地線の合流点の裾 P(|p_c| > Rk)

    Args:
        rng (RngStream): 乱数ストリーム
        k (int): 始点の間隔の尺度
        R_grid (Sequence[float]): R のグリッド
        N (int): 規模（終点は ⌊Nξ⌋）
        reps (int): レプリカ数
        xi (Sequence[float]): 方向
        pool (ReplicaPool): レプリカ実行器

    Returns:
        TailEstimates: R ごとの頻度と傾き（目標 −2/3）
    """
    k = ParameterValidator.positive_int(k, "k")
    R_grid = ParameterValidator.grid(R_grid, "R", minimum_length=1)
    if any(R <= 0 for R in R_grid):
        raise InvalidParameterError(f"無効なグリッド R={R_grid}: 正の値が必要です")
    xi = ParameterValidator.direction(xi)
    target = _target(xi, ParameterValidator.positive_int(N, "N"))
    q2 = Coord(0, math.ceil(k ** (2.0 / 3.0)))
    if q2.y > target.y:
        raise InvalidParameterError(f"始点 {q2} が終点 {target} の外です")
    if N <= (max(R_grid) * k) ** (5.0 / 3.0):
        logger.info(f"N={N} は推奨値 (max R·k)^(5/3)={(max(R_grid) * k) ** (5.0 / 3.0):.0f} 以下です")

    def replica(stream: RngStream, index: int) -> int:
        forest = sample_point_to_point_forest(stream, target)
        return coalescence_point(forest, ORIGIN, q2).l1()

    batch = (pool or ReplicaPool()).run(replica, rng, reps, description=f"合流点の裾 k={k}")
    return tail_estimates(
        batch.values, [R * k for R in R_grid], R_grid, "R", target=-2.0 / 3.0, truncated=batch.truncated
    )


def macro_coalescence(rng: RngStream, a: float, alpha_grid: Sequence[float], xi: Sequence[float], N: int,
                      reps: int, pool: Optional[ReplicaPool] = None) -> Tuple[TailEstimates, TailEstimates]:
    """
    始点 o = 0 と q² = ⌊aN^{2/3}⌋e2 の合流点が o または q² の近くにある確率

    Returns:
        tuple: (P(|o−p_c| ≤ αN) 目標傾き 2/9, P(|q²−p_c| ≤ αN) 目標傾き 2)
    """
    alpha_grid = ParameterValidator.grid(alpha_grid, "alpha", minimum_length=1)
    if any(not 0.0 < alpha <= 1.0 for alpha in alpha_grid):
        raise InvalidParameterError(f"無効なグリッド alpha={alpha_grid}: 0 < alpha <= 1 が必要です")
    xi = ParameterValidator.direction(xi)
    N = ParameterValidator.positive_int(N, "N")
    target = _target(xi, N)
    q2 = Coord(0, math.floor(float(a) * N ** (2.0 / 3.0)))
    if not 1 <= q2.y <= target.y:
        raise InvalidParameterError(f"始点 q2={q2} が箱 [0, {target}] の中にありません (a={a})")

    def replica(stream: RngStream, index: int) -> Tuple[int, int]:
        forest = sample_point_to_point_forest(stream, target)
        p_c = coalescence_point(forest, ORIGIN, q2).p_c
        return p_c.l1(), (p_c - q2).l1()

    batch = (pool or ReplicaPool()).run(replica, rng, reps, description=f"巨視的な合流 a={a}")
    near_origin = [v[0] for v in batch.values]
    near_source = [v[1] for v in batch.values]
    thresholds = [alpha * N for alpha in alpha_grid]
    return (
        tail_estimates(near_origin, thresholds, alpha_grid, "alpha", target=2.0 / 9.0,
                       truncated=batch.truncated, upper=False),
        tail_estimates(near_source, thresholds, alpha_grid, "alpha", target=2.0,
                       truncated=batch.truncated, upper=False),
    )


@dataclass(frozen=True)
class FluctuationSummary:
    """横方向の揺らぎ |π_{2l} − 2lξ|_∞ / l^{2/3} の分位点と裾"""
    l_grid: Tuple[int, ...]
    levels: Tuple[float, ...]
    quantiles: np.ndarray
    tail: TailEstimates
    truncated: bool = False

    @property
    def collapse_spread(self) -> float:
        """各分位点の l にわたる相対的な広がり (max−min)/平均 の最大値"""
        q = self.quantiles
        means = q.mean(axis=0)
        spread = np.where(means > 0, (q.max(axis=0) - q.min(axis=0)) / np.where(means > 0, means, 1.0), 0.0)
        return float(spread.max()) if spread.size else 0.0


def transversal_fluctuation(rng: RngStream, l_grid: Sequence[int], N: int, reps: int,
                            xi: Sequence[float] = (0.5, 0.5),
                            r_grid: Sequence[float] = (1.0, 1.5, 2.0, 3.0),
                            levels: Sequence[float] = (0.5, 0.9, 0.99),
                            pool: Optional[ReplicaPool] = None) -> FluctuationSummary:
    """
    0 から ⌊Nξ⌋ への測地線の、水準 2l での特性方向からのずれ

    Args:
        rng (RngStream): 乱数ストリーム
        l_grid (Sequence[int]): l のグリッド（l ≤ N/4）
        N (int): 規模
        reps (int): レプリカ数
        xi (Sequence[float]): 方向
        r_grid (Sequence[float]): 裾の閾値 r（目標傾き −3）
        levels (Sequence[float]): 分位点の水準
        pool (ReplicaPool): レプリカ実行器

    Returns:
        FluctuationSummary: 分位点と裾
    """
    N = ParameterValidator.positive_int(N, "N")
    l_grid = tuple(ParameterValidator.positive_int(l, "l") for l in l_grid)
    if not l_grid:
        raise InvalidParameterError("l のグリッドが空です")
    if any(l > N / 4 for l in l_grid):
        raise InvalidParameterError(f"無効なグリッド l={l_grid}: l <= N/4 が必要です")
    xi = ParameterValidator.direction(xi)
    target = _target(xi, N)
    steps = np.array([2 * l for l in l_grid])
    scales = np.array([l ** (2.0 / 3.0) for l in l_grid])

    def replica(stream: RngStream, index: int) -> np.ndarray:
        forest = sample_point_to_point_forest(stream, target)
        xs, ys = forest.trace(ORIGIN)
        deviation = np.maximum(np.abs(xs[steps] - steps * xi[0]), np.abs(ys[steps] - steps * xi[1]))
        return deviation / scales

    batch = (pool or ReplicaPool()).run(replica, rng, reps, description=f"横方向の揺らぎ N={N}")
    scaled = np.array(batch.values, dtype=np.float64).reshape(-1, len(l_grid))
    if scaled.shape[0]:
        quantiles = np.quantile(scaled, levels, axis=0).T
    else:
        quantiles = np.full((len(l_grid), len(levels)), np.nan)
    tail = tail_estimates(scaled.ravel(), r_grid, r_grid, "r", target=-3.0, truncated=batch.truncated)
    return FluctuationSummary(l_grid, tuple(levels), quantiles, tail, batch.truncated)
