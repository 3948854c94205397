#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
測地線の森
共通の終点を持つ測地線の木、合流点、ストリーミング掃引による森の生成
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Tuple

import numpy as np

from config.optimization_config import OptimizationConfig
from core import kernels
from core.boundary import Orientation
from core.lattice import Coord, Rect, RngStream, ORIGIN
from core.passage import Geodesic, PassageField
from core.stationary import density_for_direction, sample_stationary_boundary
from utils.error_handler import InternalError, InvalidParameterError, OutOfRangeError
from utils.utils import ParameterValidator

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class GeodesicForest:
    """
    終点 target を共有する測地線の木

    bits は domain 上の圧縮ビット列で、ビット 1 は終点へ向かう最初の 1 歩が x 方向であることを表す。
    sources は問い合わせ可能な始点の矩形。
    """
    target: Coord
    sources: Rect
    domain: Rect
    bits: np.ndarray
    orientation: Orientation = Orientation.REVERSED

    def __post_init__(self):
        if not self.domain.contains_rect(self.sources) or not self.domain.contains(self.target):
            raise InvalidParameterError("始点の矩形または終点が森の領域の外にあります")
        expected = (self.domain.height, (self.domain.width + 7) // 8)
        if self.bits.shape != expected:
            raise InvalidParameterError(f"ビット列の形状 {self.bits.shape} が領域 {expected} と一致しません")
        self.bits.setflags(write=False)

    def _cells(self, q: Coord) -> Tuple[int, int, int, int]:
        if not self.sources.contains(q):
            raise OutOfRangeError(f"始点 {q} は森の始点の矩形の外です")
        row, col = self.domain.index(q)
        target_row, target_col = self.domain.index(self.target)
        return row, col, target_row, target_col

    def step_bit(self, q: Coord) -> int:
        row, col = self.domain.index(q)
        return int((self.bits[row, col >> 3] >> (7 - (col & 7))) & 1)

    def trace(self, q: Coord) -> Tuple[np.ndarray, np.ndarray]:
        """q から終点までの (x 配列, y 配列)。添字 i は q から i 歩目"""
        row, col, target_row, target_col = self._cells(q)
        rows, cols = kernels.backtrack_path(
            self.bits, row, col, target_row, target_col, self.orientation.toward_origin
        )
        return cols + self.domain.lo.x, rows + self.domain.lo.y

    def path(self, q: Coord) -> Geodesic:
        """終点から q までの測地線（backtrack_geodesic と同じ向き）"""
        xs, ys = self.trace(q)
        return Geodesic(tuple(Coord(int(x), int(y)) for x, y in zip(xs[::-1], ys[::-1])), self.orientation)

    def step_array(self, box: Rect) -> np.ndarray:
        """box 上の非圧縮ビット"""
        if not self.domain.contains_rect(box):
            raise OutOfRangeError(f"矩形 [{box.lo}, {box.hi}] が森の領域の外です")
        r0, c0 = self.domain.index(box.lo)
        r1, c1 = self.domain.index(box.hi)
        unpacked = np.unpackbits(self.bits[r0:r1 + 1], axis=1, count=self.domain.width)
        return unpacked[:, c0:c1 + 1]


@dataclass(frozen=True)
class CoalescencePoint:
    """2 本の測地線の合流点"""
    p_c: Coord

    def l1(self) -> int:
        return self.p_c.l1()


def build_forest(field: PassageField, sources: Rect) -> GeodesicForest:
    """
    通過時間場の逆ポインタから森を作る

    Args:
        field (PassageField): 逆ポインタ付きの通過時間場（終点は field.origin）
        sources (Rect): 始点の矩形

    Returns:
        GeodesicForest: 森
    """
    if field.backptr is None:
        raise InvalidParameterError("この通過時間場は逆ポインタを持っていません")
    if not field.rect.contains_rect(sources):
        raise OutOfRangeError(f"始点の矩形 [{sources.lo}, {sources.hi}] が通過時間場の外です")
    if field.orientation is Orientation.FORWARD:
        domain = Rect(field.origin, sources.hi)
    else:
        domain = Rect(sources.lo, field.origin)
    r0, c0 = field.rect.index(domain.lo)
    r1, c1 = field.rect.index(domain.hi)
    unpacked = np.unpackbits(field.backptr[r0:r1 + 1], axis=1, count=field.rect.width)[:, c0:c1 + 1]
    return GeodesicForest(
        target=field.origin,
        sources=sources,
        domain=domain,
        bits=np.packbits(unpacked, axis=1),
        orientation=field.orientation,
    )


def coalescence_point(forest: GeodesicForest, q1: Coord, q2: Coord) -> CoalescencePoint:
    """
    q1, q2 からの測地線の最初の共通点

    Args:
        forest (GeodesicForest): 森
        q1 (Coord): 始点 1
        q2 (Coord): 始点 2

    Returns:
        CoalescencePoint: 合流点
    """
    row1, col1, target_row, target_col = forest._cells(q1)
    row2, col2, _, _ = forest._cells(q2)
    row, col = kernels.coalesce(
        forest.bits, row1, col1, row2, col2, target_row, target_col, forest.orientation.toward_origin
    )
    p_c = forest.domain.coord(row, col)
    if not forest.domain.contains(p_c):
        raise InternalError(f"測地線 {q1}, {q2} が共通点を持ちません")
    return CoalescencePoint(p_c)


def restricted_forests_agree(forest_a: GeodesicForest, forest_b: GeodesicForest, box: Rect) -> bool:
    """
    box に制限した 2 つの森が一致するか

    box の北東の角からの 1 歩はどちらの森でも box の外に出るので比較しない。
    """
    differs = forest_a.step_array(box) != forest_b.step_array(box)
    differs[-1, -1] = False
    return not differs.any()


def _row_blocks(rng: RngStream, width: int, height: int, block_rows: Optional[int]) -> Iterator[Tuple[int, np.ndarray]]:
    """最上段から下へ向かって重みをブロック単位で生成（(最上段の y, ブロック)）"""
    block_rows = block_rows or OptimizationConfig.get_performance_config()["row_block"]
    y_top = height - 1
    while y_top >= 0:
        rows = min(block_rows, y_top + 1)
        yield y_top, rng.exponential(1.0, (rows, width))
        y_top -= rows


def sample_point_to_point_forest(rng: RngStream, target: Coord, block_rows: Optional[int] = None) -> GeodesicForest:
    """
    [0, target] の新しい重みで、target へ向かう点対点の森を生成

    通過時間は 1 行分だけ保持し、ビット列だけを圧縮して残す。

    Args:
        rng (RngStream): 乱数ストリーム
        target (Coord): 終点（北東の角）
        block_rows (int): 一度に生成する行数

    Returns:
        GeodesicForest: 森
    """
    domain = Rect(ORIGIN, target)
    width, height = domain.width, domain.height
    packed = np.zeros((height, (width + 7) // 8), dtype=np.uint8)
    previous = np.full(width, -np.inf)
    for y_top, block in _row_blocks(rng.child(0), width, height, block_rows):
        bits = np.empty(block.shape, dtype=np.uint8)
        kernels.reversed_bits_block(previous, block, bits)
        packed[y_top - block.shape[0] + 1:y_top + 1] = np.packbits(bits, axis=1)[::-1]
    return GeodesicForest(target=target, sources=domain, domain=domain, bits=packed)


def sample_stabilization_forests(rng: RngStream, xi: Sequence[float], N: int, anchor: float,
                                 block_rows: Optional[int] = None) -> Tuple[GeodesicForest, GeodesicForest]:
    """
    バルク重みを共有する 2 つの森

    1 つは ⌊KNξ⌋ の外側の角に定常境界を置いた逆向き定常場の森（無限測地線の代用）、
    もう 1 つは ⌊Nξ⌋ へ向かう点対点の森。

    Args:
        rng (RngStream): 乱数ストリーム
        xi (Sequence[float]): 方向
        N (int): 規模
        anchor (float): 錨の倍率 K（1 以上）
        block_rows (int): 一度に生成する行数

    Returns:
        tuple: (定常場の森, 点対点の森)
    """
    xi = ParameterValidator.direction(xi)
    N = ParameterValidator.positive_int(N, "N")
    anchor = float(anchor)
    if not anchor >= 1.0:
        raise InvalidParameterError(f"無効な錨の倍率 anchor={anchor}: 1 以上が必要です")
    n1, n2 = math.floor(N * xi[0]), math.floor(N * xi[1])
    a1, a2 = math.floor(anchor * N * xi[0]), math.floor(anchor * N * xi[1])
    corner = Coord(a1 + 1, a2 + 1)

    boundary = sample_stationary_boundary(
        rng.child(1), density_for_direction(xi), (a1 + 1, a2 + 1), corner, Orientation.REVERSED
    )
    above = boundary.I[::-1].copy()
    east = boundary.J

    width = a1 + 1
    stationary_bits = np.zeros((a2 + 2, (a1 + 2 + 7) // 8), dtype=np.uint8)
    point_bits = np.zeros((n2 + 1, (n1 + 1 + 7) // 8), dtype=np.uint8)
    previous = np.full(n1 + 1, -np.inf)

    for y_top, block in _row_blocks(rng.child(0), width, a2 + 1, block_rows):
        rows = block.shape[0]
        y_low = y_top - rows + 1
        bits = np.zeros((rows, width + 1), dtype=np.uint8)
        kernels.reversed_increment_block(above, east[a2 - y_top:a2 - y_top + rows], block, bits[:, :width])
        stationary_bits[y_low:y_top + 1] = np.packbits(bits, axis=1)[::-1]

        if y_low <= n2:
            skip = max(0, y_top - n2)
            shared = np.ascontiguousarray(block[skip:, :n1 + 1])
            shared_bits = np.empty(shared.shape, dtype=np.uint8)
            kernels.reversed_bits_block(previous, shared, shared_bits)
            point_bits[y_low:y_top - skip + 1] = np.packbits(shared_bits, axis=1)[::-1]

    stationary = GeodesicForest(
        target=corner, sources=Rect(ORIGIN, Coord(a1, a2)), domain=Rect(ORIGIN, corner), bits=stationary_bits
    )
    point = GeodesicForest(
        target=Coord(n1, n2), sources=Rect(ORIGIN, Coord(n1, n2)), domain=Rect(ORIGIN, Coord(n1, n2)), bits=point_bits
    )
    return stationary, point
