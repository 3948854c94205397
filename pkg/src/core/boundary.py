#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
向きと境界重み
前向き（南西の角）と逆向き（北東の角）に付随する一次元の境界列
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from core.lattice import Coord, Rect, E1, E2
from utils.error_handler import InvalidParameterError


class Orientation(str, Enum):
    """通過時間の向き"""
    FORWARD = "forward"    # 原点から右上へ最大化
    REVERSED = "reversed"  # 原点から左下へ最大化

    @property
    def toward_origin(self) -> int:
        """原点へ向かう 1 歩の符号（配列添字の増分）"""
        return -1 if self is Orientation.FORWARD else 1


@dataclass(frozen=True, eq=False)
class BoundaryWeights:
    """
    角に付随する境界重み

    前向き: I[k-1] は辺 (corner+(k-1)e1, corner+k·e1)、J[k-1] は辺 (corner+(k-1)e2, corner+k·e2)。
    逆向き: I[k-1] は辺 (corner-k·e1, corner-(k-1)e1)、J も同様。
    """
    corner: Coord
    orientation: Orientation
    I: np.ndarray
    J: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "orientation", Orientation(self.orientation))
        for name in ("I", "J"):
            values = np.array(getattr(self, name), dtype=np.float64).reshape(-1)
            if values.size and (not np.all(values > 0.0) or not np.all(np.isfinite(values))):
                raise InvalidParameterError(f"境界重み {name} はすべて正である必要があります")
            values.setflags(write=False)
            object.__setattr__(self, name, values)

    @property
    def lengths(self):
        return (self.I.size, self.J.size)

    def rect(self) -> Rect:
        """境界とバルクを合わせた矩形"""
        n1, n2 = self.lengths
        if self.orientation is Orientation.FORWARD:
            return Rect(self.corner, self.corner + Coord(n1, n2))
        return Rect(self.corner - Coord(n1, n2), self.corner)

    def bulk_rect(self) -> Rect:
        """バルク部分の矩形（どちらかの長さが 0 なら None 相当で例外）"""
        n1, n2 = self.lengths
        if n1 == 0 or n2 == 0:
            raise InvalidParameterError("境界の長さが 0 のためバルクがありません")
        if self.orientation is Orientation.FORWARD:
            return Rect(self.corner + E1 + E2, self.corner + Coord(n1, n2))
        return Rect(self.corner - Coord(n1, n2), self.corner - E1 - E2)
