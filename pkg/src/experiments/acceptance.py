#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
受け入れ検査
実験ごとのプリセット設定と判定器、および決定論的な性質の一括検査
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional

import numpy as np

from busemann.coupling import build_coupled_pair
from core.lattice import Coord, Rect, RngStream, ORIGIN, sample_weight_field
from core.passage import (
    backtrack_geodesic,
    crossing_violations,
    enumerate_path_values,
    increments,
    induced_boundary,
    last_passage,
)
from core.boundary import BoundaryWeights
from core.stationary import exit_point, sample_stationary_boundary, stationary_passage
from experiments.runner import EstimateRow, ExperimentConfig, ExperimentResult
from experiments.replicas import ReplicaPool
from utils.error_handler import InvalidParameterError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CheckOutcome:
    criterion: str
    passed: bool
    detail: str


# 受け入れ実行のプリセット（seed は呼び出し側で上書きできる）
PRESETS: Dict[str, ExperimentConfig] = {
    "burke-0.3": ExperimentConfig("exponents", seed=3, reps=100, N=(512,), rho=0.3, suite=("burke",)),
    "burke-0.5": ExperimentConfig("exponents", seed=3, reps=100, N=(512,), rho=0.5, suite=("burke",)),
    "burke-0.7": ExperimentConfig("exponents", seed=3, reps=100, N=(512,), rho=0.7, suite=("burke",)),
    "queue": ExperimentConfig("queue-check", seed=1, N=(10000,), lam=0.4, rho=0.6),
    "bound": ExperimentConfig("bound-check", seed=4, reps=20000, N=(1000,), r=(1.0, 2.0), M=(10, 50, 100), rho=0.5),
    "local-stationarity": ExperimentConfig(
        "local-stationarity", seed=7, reps=400, N=(2000,), c=(0.05, 0.1, 0.2, 0.4), rho=0.5
    ),
    "stabilization": ExperimentConfig("stabilization", seed=8, reps=400, N=(2000,), M=(4, 8, 16, 32)),
    "coalescence": ExperimentConfig("coalescence", seed=9, reps=2000, N=(4000,), k=(8,), R=(2.0, 4.0, 8.0, 16.0)),
    "macro-coalescence": ExperimentConfig(
        "coalescence", seed=10, reps=1000, N=(3000,), a=(1.0,), alpha=(0.02, 0.05, 0.1, 0.2, 0.3)
    ),
    "variance": ExperimentConfig("exponents", seed=11, reps=2000, N=(250, 500, 1000, 2000), suite=("variance",)),
    "transversal": ExperimentConfig("exponents", seed=12, reps=1000, N=(3000,), l=(50, 100, 200),
                                    suite=("transversal",)),
}


def preset(name: str, **overrides) -> ExperimentConfig:
    """プリセットを取り出し、必要なら項目を上書きする"""
    if name not in PRESETS:
        raise InvalidParameterError(f"未知のプリセットです: {name}（{', '.join(sorted(PRESETS))}）")
    return replace(PRESETS[name], **overrides)


def _rows(result: ExperimentResult, row_type: str = "estimate", **match) -> List[EstimateRow]:
    return [
        row for row in result.rows
        if row.row_type == row_type and all(row.parameters.get(k) == v for k, v in match.items())
    ]


def _monotone_within_ci(rows: List[EstimateRow], increasing: bool = True) -> bool:
    """隣り合う推定値が信頼区間の重なりの範囲で単調か"""
    for before, after in zip(rows, rows[1:]):
        if increasing and after.extra["ci_high"] < before.extra["ci_low"]:
            return False
        if not increasing and after.extra["ci_low"] > before.extra["ci_high"]:
            return False
    return True


def check_burke(result: ExperimentResult, minimum_pass: float = 0.95) -> CheckOutcome:
    rows = _rows(result, suite="burke")
    rates = {row.parameters["edge"]: row.estimate for row in rows}
    passed = bool(rows) and all(rate >= minimum_pass for rate in rates.values())
    return CheckOutcome("burke", passed, f"合格率 {rates}")


def check_queue(result: ExperimentResult) -> CheckOutcome:
    failed = [row.parameters["check"] for row in result.rows if row.row_type == "estimate" and not row.extra.get("passed")]
    return CheckOutcome("queue", not failed and not result.errors, f"不合格 {failed}")


def check_bound(result: ExperimentResult) -> CheckOutcome:
    rows = _rows(result)
    failed = [(row.parameters["r"], row.parameters["m"]) for row in rows if not row.extra["holds"]]
    return CheckOutcome("bound", bool(rows) and not failed, f"上界を超えた点 {failed}")


def check_local_stationarity(result: ExperimentResult, max_constant: float = 5.0,
                             first_bound: float = 0.25) -> CheckOutcome:
    rows = _rows(result)
    fits = _rows(result, "fit")
    if not rows or not fits:
        return CheckOutcome("local-stationarity", False, "推定行または当てはめ行がありません")
    constant = fits[0].extra["constant"]
    first = rows[0].estimate
    passed = _monotone_within_ci(rows) and constant <= max_constant and first < first_bound
    return CheckOutcome("local-stationarity", passed,
                        f"C={constant:.3f}, 最小 c の失敗頻度={first:.3f}, 傾き={fits[0].estimate:.3f}")


def check_stabilization(result: ExperimentResult, slack: float = 0.15) -> CheckOutcome:
    rows = _rows(result)
    fits = _rows(result, "fit")
    if not rows or not fits:
        return CheckOutcome("stabilization", False, "推定行または当てはめ行がありません")
    slope = fits[0].estimate
    passed = _monotone_within_ci(rows) and slope <= 3.0 / 8.0 + slack
    return CheckOutcome("stabilization", passed, f"傾き={slope:.3f}")


def check_coalescence(result: ExperimentResult, tolerance: float = 0.2) -> CheckOutcome:
    fits = _rows(result, "fit")
    if not fits:
        return CheckOutcome("coalescence", False, "当てはめ行がありません")
    slope = fits[0].estimate
    return CheckOutcome("coalescence", abs(slope + 2.0 / 3.0) <= tolerance, f"傾き={slope:.3f}")


def check_macro_coalescence(result: ExperimentResult, minimum_source_slope: float = 1.5) -> CheckOutcome:
    near_origin = _rows(result, event="near_origin")
    source_fits = _rows(result, "fit", event="near_source")
    if not near_origin or not source_fits:
        return CheckOutcome("macro-coalescence", False, "推定行または当てはめ行がありません")
    slope = source_fits[0].estimate
    passed = _monotone_within_ci(near_origin) and slope >= minimum_source_slope
    return CheckOutcome("macro-coalescence", passed, f"q² 近傍の傾き={slope:.3f}")


def check_variance(result: ExperimentResult, mean_N: int = 1000, mean_tolerance: float = 0.05,
                   slope_tolerance: float = 0.1) -> CheckOutcome:
    rows = {row.parameters["N"]: row for row in _rows(result, suite="variance")}
    fits = _rows(result, "fit")
    if mean_N not in rows or not fits:
        return CheckOutcome("variance", False, "N の行または当てはめ行がありません")
    ratio = rows[mean_N].extra["mean_over_N"]
    slope = fits[0].estimate
    passed = abs(ratio - 4.0) <= mean_tolerance and abs(slope - 2.0 / 3.0) <= slope_tolerance
    return CheckOutcome("variance", passed, f"平均/N={ratio:.4f}, 傾き={slope:.3f}")


def check_transversal(result: ExperimentResult, max_spread: float = 0.2) -> CheckOutcome:
    summaries = _rows(result, "summary")
    if not summaries:
        return CheckOutcome("transversal", False, "要約行がありません")
    spread = max(row.estimate for row in summaries)
    return CheckOutcome("transversal", spread <= max_spread, f"分位点の広がり={spread:.3f}")


CHECKERS: Dict[str, Callable[[ExperimentResult], CheckOutcome]] = {
    "burke-0.3": check_burke,
    "burke-0.5": check_burke,
    "burke-0.7": check_burke,
    "queue": check_queue,
    "bound": check_bound,
    "local-stationarity": check_local_stationarity,
    "stabilization": check_stabilization,
    "coalescence": check_coalescence,
    "macro-coalescence": check_macro_coalescence,
    "variance": check_variance,
    "transversal": check_transversal,
}


def oracle_mismatches(rng: RngStream, instances: int = 1000, max_side: int = 6, tolerance: float = 1e-9) -> int:
    """
    動的計画法の値と測地線を全経路の列挙と比較し、不一致の数を返す

    Args:
        rng (RngStream): 乱数ストリーム
        instances (int): 乱択する場の数
        max_side (int): 一辺の最大長
        tolerance (float): 値の許容誤差

    Returns:
        int: 不一致の数
    """
    sides = rng.child(0).generator.integers(1, max_side + 1, size=(instances, 2))
    mismatches = 0
    for i, (width, height) in enumerate(sides):
        weights = sample_weight_field(rng.child(1).child(i), Rect.from_size(int(width), int(height)))
        field = last_passage(weights, weights.rect.lo)
        best_path, best = max(enumerate_path_values(weights, weights.rect.lo, weights.rect.hi), key=lambda t: t[1])
        geodesic = backtrack_geodesic(field, weights.rect.hi)
        if abs(field.value(weights.rect.hi) - best) > tolerance or geodesic.points != best_path:
            mismatches += 1
    return mismatches


def crossing_total(rng: RngStream, instances: int = 10000, max_side: int = 8) -> int:
    """乱択した場での交差補題の違反の総数"""
    sides = rng.child(0).generator.integers(3, max_side + 1, size=(instances, 2))
    return sum(
        crossing_violations(sample_weight_field(rng.child(1).child(i), Rect.from_size(int(w), int(h))))
        for i, (w, h) in enumerate(sides)
    )


def monotonicity_violations(rng: RngStream, width: int, height: int, tolerance: float = 1e-9) -> int:
    """
    共通のバルク重みで、I が大きく J が小さい境界の場は e1 増分が大きく e2 増分が小さい

    Returns:
        int: 順序が崩れた辺の数
    """
    lower = sample_stationary_boundary(rng.child(0), 0.5, (width, height))
    bump_i = rng.child(1).exponential(1.0, width)
    bump_j = rng.child(2).uniform_open(height)
    upper = BoundaryWeights(ORIGIN, lower.orientation, lower.I + bump_i, lower.J * bump_j)
    bulk = sample_weight_field(rng.child(3), lower.bulk_rect())
    window = lower.rect()
    inc_lower = increments(stationary_passage(bulk, lower), window)
    inc_upper = increments(stationary_passage(bulk, upper), window)
    violations = int(np.count_nonzero(inc_upper.h_e1 < inc_lower.h_e1 - tolerance))
    violations += int(np.count_nonzero(inc_upper.h_e2 > inc_lower.h_e2 + tolerance))
    return violations


def shift_violations(rng: RngStream, width: int, height: int, rho: float = 0.5) -> int:
    """
    出口点の平行移動の検査

    定常場の e1 軸上の点 v = u + k·e1 で誘導した過程を組み、v より先の各目標 p について
    「元の出口点 Z = k + m (m > 0)」と「誘導過程の出口点 Z' = m」が同値であることを確かめる。

    Args:
        rng (RngStream): 乱数ストリーム
        width (int): 幅
        height (int): 高さ
        rho (float): 境界の密度

    Returns:
        int: 同値が崩れた目標の数
    """
    if width < 2 or height < 2:
        raise InvalidParameterError("矩形は 2×2 以上が必要です")
    boundary = sample_stationary_boundary(rng.child(0), rho, (width, height))
    bulk = sample_weight_field(rng.child(1), boundary.bulk_rect())
    field = stationary_passage(bulk, boundary)
    k = int(rng.child(2).generator.integers(0, width))
    v = boundary.corner + Coord(k, 0)
    induced = induced_boundary(field, v)
    shifted = stationary_passage(bulk.restrict(induced.bulk_rect()), induced)

    violations = 0
    for x in range(v.x + 1, v.x + width - k + 1):
        for y in range(v.y + 1, v.y + height + 1):
            target = Coord(x, y)
            z = exit_point(field, target).z
            z_shifted = exit_point(shifted, target).z
            if (z > k) != (z_shifted > 0) or (z > k and z_shifted != z - k):
                violations += 1
    return violations


def determinism_suite(rng: RngStream, instances: int = 10000, max_side: int = 8) -> Dict[str, int]:
    """交差補題・単調性・出口点の平行移動の一括検査（違反数）"""
    sides = rng.child(0).generator.integers(2, max_side + 1, size=(instances, 2))
    counts = {"crossing": crossing_total(rng.child(1), instances, max_side), "monotonicity": 0, "shift": 0}
    for i, (w, h) in enumerate(sides):
        counts["monotonicity"] += monotonicity_violations(rng.child(2).child(i), int(w), int(h))
        counts["shift"] += shift_violations(rng.child(3).child(i), int(w), int(h))
    logger.info(f"決定論的な性質の検査: {counts}")
    return counts


def dominance_total(rng: RngStream, N: int = 1000, reps: int = 200, xi=(0.5, 0.5), r: Optional[float] = None,
                    pool: Optional[ReplicaPool] = None) -> int:
    """結合対の境界の順序の違反の総数"""
    drift = 1.0 if r is None else float(r)
    batch = (pool or ReplicaPool()).run(
        lambda stream, index: build_coupled_pair(stream, xi, N, drift).dominance_violations(),
        rng, reps, description=f"結合対の順序 N={N}",
    )
    return int(sum(batch.values))
