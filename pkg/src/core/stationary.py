#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
定常 LPP
密度 ρ の定常境界（前向き・逆向き）、特性方向、出口点、Burke 性の検査用の量
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from config.optimization_config import OptimizationConfig
from core import kernels
from core.boundary import BoundaryWeights, Orientation
from core.lattice import Coord, RngStream, WeightField, ORIGIN
from core.passage import PassageField
from utils.error_handler import InvalidParameterError, OutOfRangeError
from utils.utils import MemoryGuard, ParameterValidator

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Density:
    """密度 ρ ∈ (0,1)"""
    rho: float

    def __post_init__(self):
        object.__setattr__(self, "rho", ParameterValidator.density(self.rho))

    @classmethod
    def of(cls, value: Union[Density, float]) -> Density:
        return value if isinstance(value, Density) else cls(value)

    def __float__(self) -> float:
        return self.rho

    @property
    def e1_rate(self) -> float:
        """e1 境界の率 1−ρ"""
        return 1.0 - self.rho

    @property
    def e2_rate(self) -> float:
        """e2 境界の率 ρ"""
        return self.rho


def characteristic_direction(rho: Union[Density, float]) -> Tuple[float, float]:
    """
    密度 ρ の特性方向

    Args:
        rho (Density | float): 密度

    Returns:
        tuple: ((1−ρ)², ρ²) / ((1−ρ)²+ρ²)
    """
    rho = Density.of(rho).rho
    a = (1.0 - rho) ** 2
    b = rho ** 2
    return a / (a + b), b / (a + b)


def density_for_direction(xi: Sequence[float]) -> Density:
    """
    特性方向が xi となる密度 ρ = √ξ₂/(√ξ₁+√ξ₂)

    Args:
        xi (Sequence[float]): 単体内部の方向

    Returns:
        Density: 密度
    """
    xi1, xi2 = ParameterValidator.direction(xi)
    s1, s2 = math.sqrt(xi1), math.sqrt(xi2)
    return Density(s2 / (s1 + s2))


def sample_stationary_boundary(rng: RngStream, rho: Union[Density, float], lengths: Tuple[int, int],
                               corner: Coord = ORIGIN,
                               orientation: Orientation = Orientation.FORWARD) -> BoundaryWeights:
    """
    定常境界を生成（I は i.i.d. Exp(1−ρ)、J は i.i.d. Exp(ρ)、互いに独立）

    Args:
        rng (RngStream): 乱数ストリーム
        rho (Density | float): 密度
        lengths (tuple): (len(I), len(J))
        corner (Coord): 角
        orientation (Orientation): 向き

    Returns:
        BoundaryWeights: 境界重み
    """
    density = Density.of(rho)
    n1 = ParameterValidator.positive_int(lengths[0], "lengths[0]", minimum=0)
    n2 = ParameterValidator.positive_int(lengths[1], "lengths[1]", minimum=0)
    inc_i = rng.child(0).exponential(density.e1_rate, n1)
    inc_j = rng.child(1).exponential(density.e2_rate, n2)
    return BoundaryWeights(corner=corner, orientation=orientation, I=inc_i, J=inc_j)


def _bulk_array(bulk: Optional[WeightField], boundary: BoundaryWeights) -> np.ndarray:
    n1, n2 = boundary.lengths
    if n1 == 0 or n2 == 0:
        if bulk is not None and bulk.values.size:
            raise InvalidParameterError("境界の長さが 0 のときバルク重みは指定できません")
        return np.empty((n2, n1), dtype=np.float64)
    if bulk is None:
        raise InvalidParameterError("バルク重みが指定されていません")
    expected = boundary.bulk_rect()
    if bulk.rect != expected:
        raise InvalidParameterError(
            f"バルク矩形 [{bulk.rect.lo}, {bulk.rect.hi}] が境界の矩形 [{expected.lo}, {expected.hi}] と一致しません"
        )
    return bulk.values


def stationary_passage(bulk: Optional[WeightField], boundary: BoundaryWeights) -> PassageField:
    """
    定常境界付きの通過時間場

    角の値は 0、軸上は境界重みの累積和、バルクは通常の再帰。逆向きは添字の鏡映で前向きの
    カーネルに帰着させる。辺増分は増分空間の再帰で直接計算し、測地線のビットもそこから決める。

    Args:
        bulk (WeightField | None): バルク重み（境界の長さが 0 のときは None）
        boundary (BoundaryWeights): 境界重み

    Returns:
        PassageField: 通過時間場（boundary と厳密な辺増分付き）
    """
    rect = boundary.rect()
    MemoryGuard.check(rect.width, rect.height, OptimizationConfig.get_memory_config()["full_field_limit"])
    values_in = _bulk_array(bulk, boundary)

    if boundary.orientation is Orientation.FORWARD:
        values, east, north, bits = kernels.stationary_sweep(values_in, boundary.I, boundary.J)
        edge_e1 = east[:, 1:]
        edge_e2 = north[1:, :]
        origin = rect.lo
    else:
        values, east, north, bits = kernels.stationary_sweep(
            np.ascontiguousarray(values_in[::-1, ::-1]), boundary.I, boundary.J
        )
        values = values[::-1, ::-1]
        bits = bits[::-1, ::-1]
        edge_e1 = east[:, 1:][::-1, ::-1]
        edge_e2 = north[1:, :][::-1, ::-1]
        origin = rect.hi

    return PassageField(
        rect=rect,
        origin=origin,
        orientation=boundary.orientation,
        values=np.ascontiguousarray(values),
        backptr=np.packbits(bits, axis=1),
        edge_e1=np.ascontiguousarray(edge_e1),
        edge_e2=np.ascontiguousarray(edge_e2),
        boundary=boundary,
    )


@dataclass(frozen=True)
class ExitPoint:
    """符号付き出口点（正は e1 境界、負は e2 境界）"""
    z: int

    @property
    def side(self) -> str:
        return "e1" if self.z > 0 else "e2"

    @property
    def magnitude(self) -> int:
        return abs(self.z)


def exit_point(field: PassageField, target: Coord) -> ExitPoint:
    """
    目標への測地線が境界を離れる位置

    Args:
        field (PassageField): 境界付きの通過時間場
        target (Coord): バルク内の目標点

    Returns:
        ExitPoint: 出口点
    """
    if not field.rect.contains(target):
        raise OutOfRangeError(f"目標 {target} は通過時間場の外です")
    if target.x == field.origin.x or target.y == field.origin.y:
        raise InvalidParameterError(f"目標 {target} が境界上にあります（原点 {field.origin}）")
    if field.backptr is None:
        raise InvalidParameterError("この通過時間場は逆ポインタを持っていません")
    row, col = field.rect.index(target)
    origin_row, origin_col = field.rect.index(field.origin)
    z = kernels.exit_index(field.backptr, row, col, origin_row, origin_col, field.orientation.toward_origin)
    return ExitPoint(int(z))


def burke_edge_increments(field: PassageField) -> Tuple[np.ndarray, np.ndarray]:
    """
    原点と反対側の縁に沿った増分

    前向きでは最上段の e1 増分と最右列の e2 増分、逆向きでは最下段と最左列。
    定常場ではこれらは独立で、e1 側は Exp(1−ρ)、e2 側は Exp(ρ) に従う。

    Returns:
        tuple: (e1 増分, e2 増分)
    """
    if not field.has_exact_increments:
        raise InvalidParameterError("辺増分を持つ定常場が必要です")
    if field.orientation is Orientation.FORWARD:
        return field.edge_e1[-1, :].copy(), field.edge_e2[:, -1].copy()
    return field.edge_e1[0, :].copy(), field.edge_e2[:, 0].copy()


def dual_weights(field: PassageField) -> np.ndarray:
    """
    双対重み Y̌_x = I_{x+e2} ∧ J_{x+e1}（向きは原点から離れる側で読み替え）

    定常場ではバルク全体で i.i.d. Exp(1) になる。診断用。
    """
    if not field.has_exact_increments:
        raise InvalidParameterError("辺増分を持つ定常場が必要です")
    if field.orientation is Orientation.FORWARD:
        return np.minimum(field.edge_e1[:-1, :], field.edge_e2[:, :-1])
    return np.minimum(field.edge_e1[1:, :], field.edge_e2[:, 1:])
