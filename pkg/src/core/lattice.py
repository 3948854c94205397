#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
格子の基本型
座標・矩形・分割可能な乱数ストリーム・指数分布のバルク重み
"""

from __future__ import annotations

import operator
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from utils.error_handler import InvalidParameterError, OutOfRangeError
from utils.utils import ParameterValidator

U64 = 2 ** 64


@dataclass(frozen=True)
class Coord:
    """格子点 (x = 列, y = 行)。順序は座標ごとの半順序"""
    x: int
    y: int

    def __post_init__(self):
        try:
            object.__setattr__(self, "x", operator.index(self.x))
            object.__setattr__(self, "y", operator.index(self.y))
        except TypeError:
            raise InvalidParameterError(f"格子点は整数座標である必要があります: ({self.x!r}, {self.y!r})") from None

    def __add__(self, other: Coord) -> Coord:
        return Coord(self.x + other.x, self.y + other.y)

    def __sub__(self, other: Coord) -> Coord:
        return Coord(self.x - other.x, self.y - other.y)

    def __mul__(self, k: int) -> Coord:
        return Coord(self.x * k, self.y * k)

    __rmul__ = __mul__

    def __le__(self, other: Coord) -> bool:
        return self.x <= other.x and self.y <= other.y

    def __lt__(self, other: Coord) -> bool:
        return self <= other and self != other

    def __ge__(self, other: Coord) -> bool:
        return other <= self

    def __gt__(self, other: Coord) -> bool:
        return other < self

    def precedes(self, other: Coord) -> bool:
        """右下方向の順序 ≼ (x ≤ x' かつ y ≥ y')"""
        return self.x <= other.x and self.y >= other.y

    def l1(self) -> int:
        """ℓ¹ ノルム"""
        return abs(self.x) + abs(self.y)

    def as_tuple(self) -> Tuple[int, int]:
        return (self.x, self.y)


E1 = Coord(1, 0)
E2 = Coord(0, 1)
ORIGIN = Coord(0, 0)


@dataclass(frozen=True)
class Rect:
    """閉矩形 [lo, hi]"""
    lo: Coord
    hi: Coord

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise InvalidParameterError(f"退化した矩形です: lo={self.lo}, hi={self.hi}")

    @classmethod
    def from_size(cls, width: int, height: int, lo: Coord = ORIGIN) -> Rect:
        if width < 1 or height < 1:
            raise InvalidParameterError(f"退化した矩形です: 幅={width}, 高さ={height}")
        return cls(lo, Coord(lo.x + width - 1, lo.y + height - 1))

    @property
    def width(self) -> int:
        return self.hi.x - self.lo.x + 1

    @property
    def height(self) -> int:
        return self.hi.y - self.lo.y + 1

    @property
    def shape(self) -> Tuple[int, int]:
        """配列形状 (高さ, 幅)"""
        return (self.height, self.width)

    @property
    def size(self) -> int:
        return self.width * self.height

    def contains(self, c: Coord) -> bool:
        return self.lo <= c <= self.hi

    def contains_rect(self, other: Rect) -> bool:
        return self.contains(other.lo) and self.contains(other.hi)

    def index(self, c: Coord) -> Tuple[int, int]:
        """格子点を配列添字 (行, 列) に変換"""
        if not self.contains(c):
            raise OutOfRangeError(f"格子点 {c} は矩形 [{self.lo}, {self.hi}] の外です")
        return (c.y - self.lo.y, c.x - self.lo.x)

    def coord(self, row: int, col: int) -> Coord:
        return Coord(self.lo.x + int(col), self.lo.y + int(row))


class RngStream:
    """
    (seed, stream_id) で決まるカウンタ型乱数ストリーム

    Philox を SeedSequence の spawn_key で分割する。同じ (seed, stream_id, path) は
    どの環境でも同じ乱数列を返し、異なる stream_id は独立なストリームになる。
    """

    __slots__ = ("seed", "stream_id", "path", "_generator")

    def __init__(self, seed: int, stream_id: int = 0, path: Tuple[int, ...] = ()):
        seed = operator.index(seed)
        stream_id = operator.index(stream_id)
        if not (0 <= seed < U64):
            raise InvalidParameterError(f"seed は 64bit 非負整数である必要があります: {seed}")
        if not (0 <= stream_id < U64):
            raise InvalidParameterError(f"stream_id は 64bit 非負整数である必要があります: {stream_id}")
        self.seed = seed
        self.stream_id = stream_id
        self.path = tuple(operator.index(p) for p in path)
        self._generator: Optional[np.random.Generator] = None

    @property
    def generator(self) -> np.random.Generator:
        if self._generator is None:
            sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id, *self.path))
            self._generator = np.random.Generator(np.random.Philox(sequence))
        return self._generator

    def child(self, key: int) -> RngStream:
        """独立な子ストリーム"""
        return RngStream(self.seed, self.stream_id, self.path + (key,))

    def uniform_open(self, size=None) -> Union[float, np.ndarray]:
        """開区間 (0,1) の一様乱数"""
        generator = self.generator
        u = generator.random(size)
        if size is None:
            while u == 0.0:
                u = generator.random()
            return u
        zeros = u == 0.0
        while zeros.any():
            u[zeros] = generator.random(int(zeros.sum()))
            zeros = u == 0.0
        return u

    def exponential(self, rate: float, size=None) -> Union[float, np.ndarray]:
        """率 rate の指数乱数 −ln(U)/rate"""
        return exp_from_uniform(self.uniform_open(size), rate)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id}, path={self.path})"


def exp_from_uniform(u, rate: float):
    """一様乱数 U から −ln(U)/rate を計算"""
    return -np.log(u) / rate


def exp_sample(rng: RngStream, rate: float) -> float:
    """
    指数乱数を 1 つ生成

    Args:
        rng (RngStream): 乱数ストリーム
        rate (float): 率 (> 0)

    Returns:
        float: 正の実数（平均 1/rate）
    """
    rate = ParameterValidator.rate(rate)
    return float(rng.exponential(rate))


def exp_samples(rng: RngStream, rate: float, size) -> np.ndarray:
    """指数乱数をまとめて生成"""
    rate = ParameterValidator.rate(rate)
    return np.asarray(rng.exponential(rate, size), dtype=np.float64)


@dataclass(frozen=True, eq=False)
class WeightField:
    """矩形上の正のバルク重み（行優先、形状は (高さ, 幅)）"""
    rect: Rect
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, order="C")
        if values.shape != self.rect.shape:
            raise InvalidParameterError(
                f"重み配列の形状 {values.shape} が矩形 {self.rect.shape} と一致しません"
            )
        if not np.all(values > 0.0) or not np.all(np.isfinite(values)):
            raise InvalidParameterError("重みはすべて正の有限値である必要があります")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_array(cls, values, lo: Coord = ORIGIN) -> WeightField:
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2:
            raise InvalidParameterError("重み配列は 2 次元である必要があります")
        height, width = values.shape
        return cls(Rect.from_size(width, height, lo), values)

    def at(self, c: Coord) -> float:
        return float(self.values[self.rect.index(c)])

    def restrict(self, window: Rect) -> WeightField:
        """部分矩形に制限"""
        if not self.rect.contains_rect(window):
            raise OutOfRangeError(f"窓 [{window.lo}, {window.hi}] が重み場の外にはみ出しています")
        r0, c0 = self.rect.index(window.lo)
        r1, c1 = self.rect.index(window.hi)
        return WeightField(window, self.values[r0:r1 + 1, c0:c1 + 1])

    def with_value(self, c: Coord, value: float) -> WeightField:
        """1 点だけ値を差し替えた新しい重み場"""
        values = self.values.copy()
        values[self.rect.index(c)] = value
        return WeightField(self.rect, values)


def sample_weight_field(rng: RngStream, rect: Rect) -> WeightField:
    """
    i.i.d. Exp(1) のバルク重みを生成

    Args:
        rng (RngStream): 乱数ストリーム
        rect (Rect): 対象の矩形

    Returns:
        WeightField: 重み場
    """
    return WeightField(rect, rng.exponential(1.0, rect.shape))
