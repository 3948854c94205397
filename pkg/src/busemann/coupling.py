#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
二密度の結合
共通のバルク重みを持つ逆向き定常場の組と、小さな箱での一致事象
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from config.config import config
from core.boundary import BoundaryWeights, Orientation
from core.lattice import Coord, Rect, RngStream, WeightField, ORIGIN, sample_weight_field
from core.passage import PassageField, induced_boundary, increments, last_passage
from core.stationary import Density, density_for_direction, exit_point, stationary_passage, characteristic_direction
from experiments.replicas import ReplicaPool
from experiments.statistics import BinomialEstimate, estimate_frequency
from queueing.queue_operators import sample_nu
from utils.error_handler import InvalidParameterError
from utils.utils import ParameterValidator

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class CoupledPair:
    """
    ρ̲ = ρ − rN^{-1/3} と ρ̄ = ρ + rN^{-1/3} の逆向き定常場

    バルクは [0, (n1, n2)]、角は ô = (n1+1, n2+1)、n = ⌊Nξ⌋。
    境界は待ち行列の結合で作り、e1 辺では I^{ρ̄} ≥ I^{ρ̲}、e2 辺では J^{ρ̲} ≥ J^{ρ̄}。
    """
    xi: Tuple[float, float]
    N: int
    r: float
    rho_lo: Density
    rho_hi: Density
    bulk: WeightField
    field_lo: PassageField
    field_hi: PassageField

    @property
    def corner(self) -> Coord:
        return self.field_lo.origin

    def box_corner(self, M: int) -> Coord:
        """R^{ξ,M} = [0, m] の北東の角 m = ⌊Mξ⌋"""
        M = ParameterValidator.positive_int(M, "M", minimum=0)
        if M > self.N:
            raise InvalidParameterError(f"M={M} が N={self.N} を超えています")
        return Coord(math.floor(M * self.xi[0]), math.floor(M * self.xi[1]))

    def dominance_violations(self) -> int:
        """境界の支配関係に反する辺の数"""
        lo, hi = self.field_lo.boundary, self.field_hi.boundary
        return int(np.count_nonzero(hi.I < lo.I) + np.count_nonzero(lo.J < hi.J))


@dataclass(frozen=True)
class AgreementReport:
    """小さな箱での一致事象"""
    event_A: bool
    event_C: bool
    first_disagreement: Optional[Tuple[str, int]] = None

    @property
    def stabilized(self) -> bool:
        return self.event_A and self.event_C


def drift_for_density(rho: float, r: float, N: int) -> Tuple[Density, Density]:
    """(ρ̲, ρ̄) を計算（どちらかが (0,1) を外れれば InvalidParameterError）"""
    shift = r * N ** (-1.0 / 3.0)
    lo, hi = rho - shift, rho + shift
    if not (0.0 < lo and hi < 1.0):
        raise InvalidParameterError(
            f"N={N} に対して r={r} が大きすぎます: rho_lo={lo:.4g}, rho_hi={hi:.4g}"
        )
    return Density(lo), Density(hi)


def default_drift(xi: Sequence[float], M: int, N: int, rho: float) -> float:
    """
    既定の r = (ξ₁M)^{-1/8}N^{1/12}

    1 を下限とし、0 < ρ̲ < ρ̄ < 1 となるよう上限を設ける。
    """
    r = (xi[0] * max(M, 1)) ** (-1.0 / 8.0) * N ** (1.0 / 12.0)
    r = max(r, 1.0)
    cap = 0.99 * min(rho, 1.0 - rho) * N ** (1.0 / 3.0)
    return min(r, cap)


def build_coupled_pair(rng: RngStream, xi: Sequence[float], N: int, r: float) -> CoupledPair:
    """
    結合された二密度の逆向き定常場を構築

    e1 辺は ν^{1−ρ̄, 1−ρ̲} から (I^{ρ̄}, I^{ρ̲}) = (d, s)、e2 辺は ν^{ρ̲, ρ̄} から
    (J^{ρ̲}, J^{ρ̄}) = (d, s)。待ち行列の時間は東向き・北向きに進む。

    Args:
        rng (RngStream): 乱数ストリーム
        xi (Sequence[float]): 方向
        N (int): 規模
        r (float): ずれの大きさ（0 なら 2 つの場は一致）

    Returns:
        CoupledPair: 結合された場の組
    """
    xi = ParameterValidator.direction(xi)
    N = ParameterValidator.positive_int(N, "N")
    r = float(r)
    if r < 0.0 or math.isnan(r):
        raise InvalidParameterError(f"無効な値 r={r}: 0 以上が必要です")
    rho = density_for_direction(xi).rho
    n1, n2 = math.floor(N * xi[0]), math.floor(N * xi[1])
    if n1 < 1 or n2 < 1:
        raise InvalidParameterError(f"N={N} が小さすぎます: ⌊Nξ⌋=({n1}, {n2})")
    corner = Coord(n1 + 1, n2 + 1)
    bulk = sample_weight_field(rng.child(0), Rect(ORIGIN, Coord(n1, n2)))

    if r == 0.0:
        rho_lo = rho_hi = Density(rho)
        inc_i = rng.child(1).exponential(rho_lo.e1_rate, n1 + 1)
        inc_j = rng.child(2).exponential(rho_lo.e2_rate, n2 + 1)
        i_lo = i_hi = inc_i
        j_lo = j_hi = inc_j
    else:
        rho_lo, rho_hi = drift_for_density(rho, r, N)
        i_hi, i_lo = sample_nu(rng.child(1), rho_hi.e1_rate, rho_lo.e1_rate, n1 + 1)
        j_lo, j_hi = sample_nu(rng.child(2), rho_lo.e2_rate, rho_hi.e2_rate, n2 + 1)

    def reversed_field(inc_i: np.ndarray, inc_j: np.ndarray) -> PassageField:
        # 境界の添字 k-1 は角から k 番目の辺、待ち行列では n-k 番目の客
        boundary = BoundaryWeights(corner, Orientation.REVERSED, inc_i[::-1], inc_j[::-1])
        return stationary_passage(bulk, boundary)

    return CoupledPair(
        xi=xi,
        N=N,
        r=r,
        rho_lo=rho_lo,
        rho_hi=rho_hi,
        bulk=bulk,
        field_lo=reversed_field(i_lo, j_lo),
        field_hi=reversed_field(i_hi, j_hi),
    )


def event_A(pair: CoupledPair, M: int) -> bool:
    """
    ρ̄ の測地線が e1 側、ρ̲ の測地線が e2 側から出る事象

    測地線の順序により、箱の南東の角 (m1, 0) での Z^{ρ̄} > 0 と北西の角 (0, m2) での Z^{ρ̲} < 0 に帰着する。
    """
    m = pair.box_corner(M)
    return exit_point(pair.field_hi, Coord(m.x, 0)).z > 0 and exit_point(pair.field_lo, Coord(0, m.y)).z < 0


def _compare_induced(pair: CoupledPair, M: int) -> Tuple[bool, Optional[Tuple[str, int]]]:
    if M == 0:
        return True, None
    v = pair.box_corner(M) + Coord(1, 1)
    lo = induced_boundary(pair.field_lo, v)
    hi = induced_boundary(pair.field_hi, v)
    for side, a, b in (("e1", lo.I, hi.I), ("e2", lo.J, hi.J)):
        differs = np.flatnonzero(a != b)
        if differs.size:
            return False, (side, int(differs[0]) + 1)
    return True, None


def event_C(pair: CoupledPair, M: int) -> bool:
    """箱の外側の角 m + (1,1) での誘導境界が 2 つの場で完全に一致する事象"""
    return _compare_induced(pair, M)[0]


def agreement_report(pair: CoupledPair, M: int) -> AgreementReport:
    """A と C をまとめて評価"""
    agrees, first = _compare_induced(pair, M)
    return AgreementReport(event_A=event_A(pair, M), event_C=agrees, first_disagreement=first)


def local_agreement(rng: RngStream, N: int, c: float, reps: int, rho: float = 0.5,
                    r: Optional[float] = None, pool: Optional[ReplicaPool] = None) -> BinomialEstimate:
    """
    局所定常性の結合が失敗する頻度

    各レプリカで ρ の結合対を作り、M = ⌊cN^{2/3}⌋（最低 1）で A ∧ C を調べる。
    失敗頻度は、この結合が実現する全変動距離の上界になる。

    Args:
        rng (RngStream): 乱数ストリーム
        N (int): 規模（200 以上）
        c (float): 窓の大きさ（c0 以下）
        reps (int): レプリカ数
        rho (float): 密度
        r (float): ずれの大きさ（None なら既定値）
        pool (ReplicaPool): レプリカ実行器

    Returns:
        BinomialEstimate: 失敗回数と頻度
    """
    N = ParameterValidator.positive_int(N, "N", minimum=200)
    c = float(c)
    c0 = float(config.get("simulation.c0", 0.5))
    if not 0.0 < c <= c0:
        raise InvalidParameterError(f"無効な値 c={c}: 0 < c <= {c0} が必要です")
    rho = ParameterValidator.density(rho)
    xi = characteristic_direction(rho)
    M = max(1, math.floor(c * N ** (2.0 / 3.0)))
    drift = default_drift(xi, M, N, rho) if r is None else float(r)

    def replica(stream: RngStream, index: int) -> bool:
        pair = build_coupled_pair(stream, xi, N, drift)
        return not agreement_report(pair, M).stabilized

    batch = (pool or ReplicaPool()).run(replica, rng, reps, description=f"局所定常性 c={c}")
    estimate = estimate_frequency(batch.values, truncated=batch.truncated)
    logger.info(f"局所定常性: N={N}, c={c}, M={M}, r={drift:.4g}, 失敗 {estimate.count}/{estimate.reps}")
    return estimate


def sandwich_violations(pair: CoupledPair, M: int, tolerance: float = 1e-9) -> int:
    """
    箱の辺で、点対点の逆向き増分が ρ̄ と ρ̲ の増分に挟まれない数

    e1 辺では B^{ρ̲} ≤ Ĝ ≤ B^{ρ̄}、e2 辺では B^{ρ̄} ≤ Ĝ ≤ B^{ρ̲}。点対点の原点はバルクの北東の角。
    """
    m = pair.box_corner(M)
    box = Rect(ORIGIN, m)
    point = increments(last_passage(pair.bulk, pair.bulk.rect.hi, Orientation.REVERSED), box)
    lo = increments(pair.field_lo, box)
    hi = increments(pair.field_hi, box)
    violations = int(np.count_nonzero(point.h_e1 < lo.h_e1 - tolerance))
    violations += int(np.count_nonzero(point.h_e1 > hi.h_e1 + tolerance))
    violations += int(np.count_nonzero(point.h_e2 < hi.h_e2 - tolerance))
    violations += int(np.count_nonzero(point.h_e2 > lo.h_e2 + tolerance))
    return violations


def _step_bits(field: PassageField, box: Rect) -> np.ndarray:
    r0, c0 = field.rect.index(box.lo)
    r1, c1 = field.rect.index(box.hi)
    bits = np.unpackbits(field.backptr, axis=1, count=field.rect.width)
    return bits[r0:r1 + 1, c0:c1 + 1]


def tree_disagreements(pair: CoupledPair, M: int) -> int:
    """R^{ξ,M} のセルで 2 つの場の測地線の 1 歩が異なる数（箱の北東の角は除く）"""
    box = Rect(ORIGIN, pair.box_corner(M))
    differs = _step_bits(pair.field_lo, box) != _step_bits(pair.field_hi, box)
    differs[-1, -1] = False
    return int(np.count_nonzero(differs))


def boundary_split_correlation(pair: CoupledPair, split: Optional[Coord] = None) -> Tuple[float, float]:
    """
    分割点の西側の e1 増分と南側の e2 増分の標本相関（ρ̄, ρ̲ の順）

    定常場ではこの 2 つの列は独立になる。
    """
    if split is None:
        split = Coord(pair.corner.x // 2 + 1, pair.corner.y // 2 + 1)
    correlations = []
    for field in (pair.field_hi, pair.field_lo):
        boundary = induced_boundary(field, split)
        k = min(boundary.I.size, boundary.J.size)
        if k < 3:
            raise InvalidParameterError(f"分割点 {split} の境界が短すぎます")
        correlations.append(float(np.corrcoef(boundary.I[:k], boundary.J[:k])[0, 1]))
    return correlations[0], correlations[1]
