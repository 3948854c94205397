#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
最終通過時間エンジン
バルクの動的計画法、測地線の逆追跡、増分場、逆向き LPP、誘導境界の抽出
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple

import numpy as np

from config.optimization_config import OptimizationConfig
from core import kernels
from core.boundary import BoundaryWeights, Orientation
from core.lattice import Coord, Rect, RngStream, WeightField, E1, E2
from utils.error_handler import InvalidParameterError, OutOfRangeError
from utils.utils import MemoryGuard, ParameterValidator

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PassageField:
    """
    矩形上の通過時間 G（または逆向きの Ĝ）

    backptr は 1 セル 1 ビットの圧縮配列（np.packbits, axis=1）。ビット 1 は原点へ向かう
    1 歩が x 方向であることを表す。edge_e1 / edge_e2 は原点から離れる向きに測った辺の増分で、
    定常場では増分空間の再帰で直接計算した値を保持する。
    """
    rect: Rect
    origin: Coord
    orientation: Orientation
    values: np.ndarray
    backptr: Optional[np.ndarray] = None
    edge_e1: Optional[np.ndarray] = None
    edge_e2: Optional[np.ndarray] = None
    boundary: Optional[BoundaryWeights] = None

    def __post_init__(self):
        for name in ("values", "backptr", "edge_e1", "edge_e2"):
            array = getattr(self, name)
            if array is not None:
                array.setflags(write=False)

    def value(self, c: Coord) -> float:
        return float(self.values[self.rect.index(c)])

    def step_bit(self, c: Coord) -> int:
        """原点へ向かう 1 歩が x 方向なら 1"""
        if self.backptr is None:
            raise InvalidParameterError("この通過時間場は逆ポインタを持っていません")
        row, col = self.rect.index(c)
        return int((self.backptr[row, col >> 3] >> (7 - (col & 7))) & 1)

    @property
    def has_exact_increments(self) -> bool:
        return self.edge_e1 is not None and self.edge_e2 is not None


@dataclass(frozen=True, eq=False)
class Geodesic:
    """原点から目標までの格子経路"""
    points: Tuple[Coord, ...]
    orientation: Orientation = Orientation.FORWARD

    def __post_init__(self):
        points = tuple(self.points)
        if not points:
            raise InvalidParameterError("測地線が空です")
        sign = 1 if Orientation(self.orientation) is Orientation.FORWARD else -1
        allowed = {E1 * sign, E2 * sign}
        for a, b in zip(points, points[1:]):
            if (b - a) not in allowed:
                raise InvalidParameterError(f"測地線の 1 歩が不正です: {a} -> {b}")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "orientation", Orientation(self.orientation))

    def __len__(self) -> int:
        return len(self.points)

    @property
    def source(self) -> Coord:
        return self.points[0]

    @property
    def target(self) -> Coord:
        return self.points[-1]

    def as_array(self) -> np.ndarray:
        """(点数, 2) の整数配列 [x, y]"""
        return np.array([p.as_tuple() for p in self.points], dtype=np.int64)

    def weight_sum(self, weights: WeightField) -> float:
        """経路上の重みの和"""
        xy = self.as_array()
        rows = xy[:, 1] - weights.rect.lo.y
        cols = xy[:, 0] - weights.rect.lo.x
        return float(weights.values[rows, cols].sum())


@dataclass(frozen=True, eq=False)
class IncrementField:
    """
    窓上の辺増分

    h_e1[i, j] は辺 (x, x+e1)、h_e2[i, j] は辺 (x, x+e2) の増分（x = window.lo + (j, i)）。
    前向きでは G(x+e1) − G(x)、逆向きでは Ĝ(x) − Ĝ(x+e1) で、どちらも正。
    """
    rect: Rect
    h_e1: np.ndarray
    h_e2: np.ndarray

    def e1(self, c: Coord) -> float:
        row, col = self.rect.index(c)
        return float(self.h_e1[row, col])

    def e2(self, c: Coord) -> float:
        row, col = self.rect.index(c)
        return float(self.h_e2[row, col])

    def square_residual(self) -> float:
        """単位正方形ごとの h_e1(x) + h_e2(x+e1) − h_e2(x) − h_e1(x+e2) の最大絶対値"""
        if self.rect.width < 2 or self.rect.height < 2:
            return 0.0
        residual = (self.h_e1[:-1, :] + self.h_e2[:, 1:]) - (self.h_e2[:, :-1] + self.h_e1[1:, :])
        return float(np.max(np.abs(residual)))


def _full_field_limit() -> int:
    return int(OptimizationConfig.get_memory_config()["full_field_limit"])


def last_passage(weights: WeightField, origin: Coord, orientation: Orientation = Orientation.FORWARD) -> PassageField:
    """
    矩形全体の最終通過時間を計算

    Args:
        weights (WeightField): バルク重み
        origin (Coord): 原点（前向きは南西の角、逆向きは北東の角）
        orientation (Orientation): 向き

    Returns:
        PassageField: 通過時間と逆ポインタ
    """
    orientation = Orientation(orientation)
    rect = weights.rect
    expected = rect.lo if orientation is Orientation.FORWARD else rect.hi
    if origin != expected:
        raise InvalidParameterError(
            f"原点 {origin} が {orientation.value} 向きの角 {expected} と一致しません"
        )
    MemoryGuard.check(rect.width, rect.height, _full_field_limit())

    if orientation is Orientation.FORWARD:
        values, bits = kernels.forward_sweep(weights.values)
    else:
        values, bits = kernels.forward_sweep(np.ascontiguousarray(weights.values[::-1, ::-1]))
        values = np.ascontiguousarray(values[::-1, ::-1])
        bits = bits[::-1, ::-1]

    return PassageField(
        rect=rect,
        origin=origin,
        orientation=orientation,
        values=values,
        backptr=np.packbits(bits, axis=1),
    )


def backtrack_geodesic(field: PassageField, target: Coord) -> Geodesic:
    """
    逆ポインタから測地線を復元（原点から目標への順）

    Args:
        field (PassageField): 通過時間場
        target (Coord): 目標点

    Returns:
        Geodesic: 測地線
    """
    if not field.rect.contains(target):
        raise OutOfRangeError(f"目標 {target} は通過時間場の外です")
    if field.backptr is None:
        raise InvalidParameterError("この通過時間場は逆ポインタを持っていません")
    row, col = field.rect.index(target)
    origin_row, origin_col = field.rect.index(field.origin)
    rows, cols = kernels.backtrack_path(
        field.backptr, row, col, origin_row, origin_col, field.orientation.toward_origin
    )
    points = tuple(field.rect.coord(r, c) for r, c in zip(rows[::-1], cols[::-1]))
    return Geodesic(points, field.orientation)


def _edge_arrays(field: PassageField) -> Tuple[np.ndarray, np.ndarray]:
    """原点から離れる向きの辺増分（全体）"""
    if field.has_exact_increments:
        return field.edge_e1, field.edge_e2
    values = field.values
    if field.orientation is Orientation.FORWARD:
        return values[:, 1:] - values[:, :-1], values[1:, :] - values[:-1, :]
    return values[:, :-1] - values[:, 1:], values[:-1, :] - values[1:, :]


def increments(field: PassageField, window: Rect) -> IncrementField:
    """
    窓内の辺増分を取り出す

    Args:
        field (PassageField): 通過時間場
        window (Rect): 窓（field.rect に含まれること）

    Returns:
        IncrementField: 増分場
    """
    if not field.rect.contains_rect(window):
        raise OutOfRangeError(f"窓 [{window.lo}, {window.hi}] が通過時間場の外にはみ出しています")
    edge_e1, edge_e2 = _edge_arrays(field)
    r0, c0 = field.rect.index(window.lo)
    r1, c1 = field.rect.index(window.hi)
    return IncrementField(
        rect=window,
        h_e1=np.ascontiguousarray(edge_e1[r0:r1 + 1, c0:c1]),
        h_e2=np.ascontiguousarray(edge_e2[r0:r1, c0:c1 + 1]),
    )


def induced_boundary(field: PassageField, v: Coord) -> BoundaryWeights:
    """
    点 v に誘導される境界重み

    前向きでは I_k = G(v+k·e1) − G(v+(k−1)e1)、J も同様。逆向きは鏡映。
    これらを境界とし v より先のバルク重みで組んだ定常型 LPP は G_{u,y} = G_{u,v} + G^{[u]}_{v,y} を満たす。

    Args:
        field (PassageField): 通過時間場
        v (Coord): 新しい角

    Returns:
        BoundaryWeights: 誘導境界
    """
    rect = field.rect
    if not rect.contains(v):
        raise OutOfRangeError(f"点 {v} は通過時間場の外です")
    edge_e1, edge_e2 = _edge_arrays(field)
    row, col = rect.index(v)

    if field.orientation is Orientation.FORWARD:
        if not (v.x < rect.hi.x and v.y < rect.hi.y):
            raise InvalidParameterError(f"点 {v} が北東の縁にあり、誘導境界の先にバルクがありません")
        inc_i = edge_e1[row, col:]
        inc_j = edge_e2[row:, col]
    else:
        if not (v.x > rect.lo.x and v.y > rect.lo.y):
            raise InvalidParameterError(f"点 {v} が南西の縁にあり、誘導境界の先にバルクがありません")
        inc_i = edge_e1[row, :col][::-1]
        inc_j = edge_e2[:row, col][::-1]

    return BoundaryWeights(corner=v, orientation=field.orientation, I=inc_i.copy(), J=inc_j.copy())


def terminal_passage_value(rng: RngStream, width: int, height: int, block_rows: Optional[int] = None) -> float:
    """
    新しい Exp(1) 重みの箱で北東の角の通過時間だけを計算（2 行ローリング）

    Args:
        rng (RngStream): 乱数ストリーム
        width (int): 幅
        height (int): 高さ
        block_rows (int): 一度に生成する行数

    Returns:
        float: G(南西の角 → 北東の角)
    """
    width = ParameterValidator.positive_int(width, "width")
    height = ParameterValidator.positive_int(height, "height")
    block_rows = block_rows or OptimizationConfig.get_performance_config()["row_block"]
    previous = np.full(width, -np.inf)
    for start in range(0, height, block_rows):
        rows = min(block_rows, height - start)
        kernels.rolling_forward_block(previous, rng.exponential(1.0, (rows, width)))
    return float(previous[-1])


def enumerate_paths(source: Coord, target: Coord) -> Iterator[Tuple[Coord, ...]]:
    """source から target への右上経路をすべて列挙（小さい箱専用）"""
    if not source <= target:
        raise InvalidParameterError(f"{source} から {target} への右上経路はありません")
    dx, dy = target.x - source.x, target.y - source.y
    for e1_steps in itertools.combinations(range(dx + dy), dx):
        chosen = set(e1_steps)
        point = source
        path = [point]
        for i in range(dx + dy):
            point = point + (E1 if i in chosen else E2)
            path.append(point)
        yield tuple(path)


def enumerate_path_values(weights: WeightField, source: Coord, target: Coord) -> List[Tuple[Tuple[Coord, ...], float]]:
    """全経路とその重み和（オラクル用）"""
    return [(path, float(sum(weights.at(p) for p in path))) for path in enumerate_paths(source, target)]


def crossing_violations(weights: WeightField, tolerance: float = 1e-9) -> int:
    """
    交差補題の両連鎖の違反数

    o = weights.rect.lo として、o, o+e1, o+e2 を始点とする 3 つの場で
    G_{o+e1,x+e2}−G_{o+e1,x} ≤ G_{o,x+e2}−G_{o,x} ≤ G_{o+e2,x+e2}−G_{o+e2,x} と e1 側の鏡像を検査する。
    """
    rect = weights.rect
    if rect.width < 3 or rect.height < 3:
        return 0
    o = rect.lo
    g_o = last_passage(weights, o).values
    g_1 = last_passage(weights.restrict(Rect(o + E1, rect.hi)), o + E1).values
    g_2 = last_passage(weights.restrict(Rect(o + E2, rect.hi)), o + E2).values

    # x ∈ [o+e1+e2, hi] を共通の添字 (行 i, 列 j) で揃える
    base_o = g_o[1:, 1:]
    base_1 = g_1[1:, :]
    base_2 = g_2[:, 1:]

    # e2 連鎖: x+e2 が矩形内
    d_o = base_o[1:, :] - base_o[:-1, :]
    d_1 = base_1[1:, :] - base_1[:-1, :]
    d_2 = base_2[1:, :] - base_2[:-1, :]
    violations = int(np.count_nonzero(d_1 > d_o + tolerance))
    violations += int(np.count_nonzero(d_o > d_2 + tolerance))

    # e1 連鎖: x+e1 が矩形内
    d_o = base_o[:, 1:] - base_o[:, :-1]
    d_1 = base_1[:, 1:] - base_1[:, :-1]
    d_2 = base_2[:, 1:] - base_2[:, :-1]
    violations += int(np.count_nonzero(d_2 > d_o + tolerance))
    violations += int(np.count_nonzero(d_o > d_1 + tolerance))
    return violations
