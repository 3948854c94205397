#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
実験の実行
実験設定からグリッドを走査し、推定行・当てはめ行・エラー行の表を作る
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, fields
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from busemann.coupling import local_agreement
from core.lattice import Coord, RngStream, U64, sample_weight_field
from core.passage import terminal_passage_value
from core.stationary import density_for_direction, exit_point, sample_stationary_boundary, stationary_passage
from experiments.exponents import burke_check, exit_point_tail, profile_gaussianity, variance_exponent
from experiments.queue_suite import bound_check, queue_check
from experiments.replicas import Budget, ReplicaPool
from experiments.statistics import (
    BinomialEstimate,
    SlopeFit,
    TailEstimates,
    complement,
    dominating_constant,
    fit_loglog_slope,
)
from geodesics.measurements import coalescence_tail, macro_coalescence, stabilization_profile, transversal_fluctuation
from utils.error_handler import BudgetExceededError, ErrorHandler, ErrorSeverity, InvalidParameterError, LppLabError
from utils.utils import ParameterValidator, performance_monitor

logger = logging.getLogger(__name__)

FAMILIES = (
    "simulate",
    "local-stationarity",
    "stabilization",
    "coalescence",
    "exponents",
    "queue-check",
    "bound-check",
)

# 実験ごとに独立な乱数ストリーム
STREAM_IDS = {family: index + 1 for index, family in enumerate(FAMILIES)}

EXPONENT_SUITES = ("variance", "transversal", "exit", "profile", "burke")

# 理論上の指数（定数は当てはめる）
LOCAL_STATIONARITY_EXPONENT = 3.0 / 8.0
STABILIZATION_EXPONENT = 3.0 / 8.0


@dataclass
class ExperimentConfig:
    """
    実験設定

    グリッドはすべてタプル。空のグリッドは空の表になる。
    M は安定化では箱の大きさ、bound-check では窓長 m として使う。
    """
    experiment: str
    seed: int = 0
    reps: int = 100
    N: Tuple[int, ...] = ()
    c: Tuple[float, ...] = ()
    M: Tuple[int, ...] = ()
    r: Tuple[float, ...] = ()
    k: Tuple[int, ...] = ()
    R: Tuple[float, ...] = ()
    alpha: Tuple[float, ...] = ()
    a: Tuple[float, ...] = ()
    l: Tuple[int, ...] = ()
    rho: float = 0.5
    lam: float = 0.25
    xi: Tuple[float, float] = (0.5, 0.5)
    anchor: float = 4.0
    suite: Tuple[str, ...] = ("variance", "transversal")
    ks_level: float = 0.01
    jobs: Optional[int] = None
    out: Optional[str] = None
    format: str = "csv"
    budget_seconds: float = 0.0
    show_progress: bool = False

    def __post_init__(self):
        if self.experiment not in FAMILIES:
            raise InvalidParameterError(f"未知の実験です: {self.experiment}（{', '.join(FAMILIES)}）")
        self.seed = ParameterValidator.positive_int(self.seed, "seed", minimum=0)
        if self.seed >= U64:
            raise InvalidParameterError(f"無効な値 seed={self.seed}: 64bit 非負整数（2^64 未満）が必要です")
        if self.jobs is not None:
            self.jobs = ParameterValidator.positive_int(self.jobs, "jobs")
        self.reps = ParameterValidator.positive_int(self.reps, "reps", minimum=0)
        if self.format not in ("csv", "json"):
            raise InvalidParameterError(f"未知の出力形式です: format={self.format}")
        unknown = [s for s in self.suite if s not in EXPONENT_SUITES]
        if unknown:
            raise InvalidParameterError(f"未知の suite です: {unknown}（{', '.join(EXPONENT_SUITES)}）")

    def canonical(self) -> str:
        """結果に埋め込む 1 行の正規形（出力先と並列度は含めない）"""
        parts = []
        for f in sorted(fields(self), key=lambda f: f.name):
            if f.name in ("out", "jobs", "show_progress"):
                continue
            parts.append(f"{f.name}={_canonical_value(getattr(self, f.name))}")
        return ";".join(parts)


def _canonical_value(value: Any) -> str:
    if isinstance(value, (tuple, list)):
        return ",".join(_canonical_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass
class EstimateRow:
    """結果表の 1 行。wall_time はログ用でファイルには書かない"""
    parameters: Dict[str, Any]
    estimate: float = math.nan
    stderr: float = math.nan
    reps: int = 0
    count: Optional[int] = None
    extra: Dict[str, Any] = field(default_factory=dict)
    row_type: str = "estimate"
    note: str = ""
    truncated: bool = False
    wall_time: float = 0.0

    @classmethod
    def from_binomial(cls, parameters: Dict[str, Any], estimate: BinomialEstimate, **extra) -> EstimateRow:
        return cls(
            parameters=parameters,
            estimate=estimate.p_hat,
            stderr=estimate.stderr,
            reps=estimate.reps,
            count=estimate.count,
            extra={"ci_low": estimate.ci_low, "ci_high": estimate.ci_high, "ci_method": estimate.method, **extra},
            truncated=estimate.truncated,
        )

    @classmethod
    def from_fit(cls, label: str, fit: SlopeFit, parameters: Optional[Dict[str, Any]] = None,
                 **extra) -> EstimateRow:
        return cls(
            parameters=dict(parameters or {}),
            estimate=fit.slope,
            reps=len(fit.grid),
            extra={
                "fit": label,
                "intercept": fit.intercept,
                "residual": fit.residual,
                "target": math.nan if fit.target is None else fit.target,
                "excluded": ",".join(f"{v:g}" for v in fit.excluded),
                **extra,
            },
            row_type="fit",
        )

    @classmethod
    def error(cls, parameters: Dict[str, Any], message: str) -> EstimateRow:
        return cls(parameters=dict(parameters), row_type="error", note=message)

    def to_record(self, count_label: Optional[str], estimate_label: str) -> Dict[str, Any]:
        record: Dict[str, Any] = {"row_type": self.row_type}
        record.update(self.parameters)
        if count_label:
            record[count_label] = self.count
        record["reps"] = self.reps
        record[estimate_label] = self.estimate
        record["stderr"] = self.stderr
        record.update(self.extra)
        record["truncated"] = self.truncated
        record["note"] = self.note
        return record


@dataclass
class ExperimentResult:
    experiment: str
    resolved_config: str
    rows: List[EstimateRow]
    count_label: Optional[str] = "count"
    estimate_label: str = "p_hat"
    wall_time: float = 0.0

    @property
    def truncated(self) -> bool:
        return any(row.truncated for row in self.rows)

    @property
    def errors(self) -> List[EstimateRow]:
        return [row for row in self.rows if row.row_type == "error"]

    @property
    def fits(self) -> List[EstimateRow]:
        return [row for row in self.rows if row.row_type == "fit"]

    def to_frame(self) -> pd.DataFrame:
        """行を表にする（列は初出順）"""
        records = [row.to_record(self.count_label, self.estimate_label) for row in self.rows]
        columns: List[str] = []
        for record in records:
            for key in record:
                if key not in columns:
                    columns.append(key)
        return pd.DataFrame.from_records(records, columns=columns)


def parse_grid(text: str, kind: Callable[[str], Any] = float, name: str = "grid") -> Tuple[Any, ...]:
    """
    グリッドの文字列を解析

    カンマ区切りのリスト、または start:stop:count の等比数列（整数グリッドは丸めて重複を除く）。

    Args:
        text (str): 文字列
        kind (Callable): 要素の型（int または float）
        name (str): エラーメッセージ用のフィールド名

    Returns:
        tuple: グリッド
    """
    text = str(text).strip()
    if not text:
        return ()
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ValueError(text)
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
            if start <= 0 or stop <= 0 or count < 1:
                raise ValueError(text)
            values = np.geomspace(start, stop, count) if count > 1 else np.array([start])
            if kind is int:
                rounded = []
                for v in values:
                    v = int(round(v))
                    if v not in rounded:
                        rounded.append(v)
                return tuple(rounded)
            return tuple(float(v) for v in values)
        return tuple(kind(part.strip()) for part in text.split(",") if part.strip())
    except ValueError:
        raise InvalidParameterError(f"無効なグリッド {name}={text!r}") from None


class ExperimentRunner:
    """
    実験ファミリごとの実行器

    グリッド点ごとの失敗は ErrorHandler に記録してエラー行にし、実行は続ける。
    """

    def __init__(self, cfg: ExperimentConfig, error_handler: Optional[ErrorHandler] = None):
        self.cfg = cfg
        self.error_handler = error_handler or ErrorHandler()
        self.budget = Budget(cfg.budget_seconds)
        self.pool = ReplicaPool(jobs=cfg.jobs, budget=self.budget, show_progress=cfg.show_progress)
        self.root = RngStream(cfg.seed, STREAM_IDS[cfg.experiment])
        self.rows: List[EstimateRow] = []

    def _guarded(self, parameters: Dict[str, Any], func: Callable[[], List[EstimateRow]]) -> List[EstimateRow]:
        """func を実行し、失敗したらエラー行を返す"""
        started = time.perf_counter()
        try:
            rows = func()
        except LppLabError as e:
            info = self.error_handler.handle_error(
                e, severity=ErrorSeverity.MEDIUM, context={"experiment": self.cfg.experiment, **parameters}
            )
            rows = [EstimateRow.error(parameters, f"{info['error_type']}: {info['error_message']}")]
        elapsed = time.perf_counter() - started
        for row in rows:
            row.wall_time = elapsed
        self.rows.extend(rows)
        return rows

    def _fit(self, label: str, x: Sequence[float], y: Sequence[float], target: float,
             parameters: Dict[str, Any], exponent: Optional[float] = None):
        """傾きの当てはめ行（点がなければ何もしない、足りなければエラー行）"""
        if len(x) == 0:
            return

        def build() -> List[EstimateRow]:
            fit = fit_loglog_slope(x, y, target)
            extra = {}
            if exponent is not None:
                extra["constant"] = dominating_constant(x, y, exponent)
            logger.info(f"{label}: 傾き={fit.slope:.4f}（理論値 {target:.4f}）, 点数={len(fit.grid)}")
            return [EstimateRow.from_fit(label, fit, parameters, **extra)]

        self._guarded({**parameters, "fit": label}, build)

    def _tail_rows(self, parameters: Dict[str, Any], tail: TailEstimates, label: str) -> List[EstimateRow]:
        rows = [
            EstimateRow.from_binomial({**parameters, tail.parameter: g}, e)
            for g, e in zip(tail.grid, tail.estimates)
        ]
        if tail.fit is not None:
            rows.append(EstimateRow.from_fit(label, tail.fit, parameters))
        elif tail.note:
            rows.append(EstimateRow.error({**parameters, "fit": label}, tail.note))
        return rows

    # --- 実験ファミリ -------------------------------------------------

    def simulate(self):
        xi = ParameterValidator.direction(self.cfg.xi)
        for i, N in enumerate(self.cfg.N):
            rng = self.root.child(i)

            def build(N=N, rng=rng) -> List[EstimateRow]:
                N = ParameterValidator.positive_int(N, "N")
                target = Coord(math.floor(N * xi[0]), math.floor(N * xi[1]))
                if target.x < 1 or target.y < 1:
                    raise InvalidParameterError(f"N={N} が小さすぎます: 目標 {target}")
                density = density_for_direction(xi)

                def replica(stream: RngStream, index: int) -> Tuple[float, int]:
                    value = terminal_passage_value(stream.child(0), target.x + 1, target.y + 1)
                    boundary = sample_stationary_boundary(stream.child(1), density, target.as_tuple())
                    bulk = sample_weight_field(stream.child(2), boundary.bulk_rect())
                    return value, exit_point(stationary_passage(bulk, boundary), target).z

                batch = self.pool.run(replica, rng, self.cfg.reps, description=f"simulate N={N}")
                values = np.array([v[0] for v in batch.values], dtype=np.float64)
                exits = np.array([v[1] for v in batch.values], dtype=np.float64)
                n = values.size
                return [EstimateRow(
                    parameters={"N": N},
                    estimate=float(values.mean()) if n else math.nan,
                    stderr=float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else math.nan,
                    reps=n,
                    extra={
                        "mean_over_N": float(values.mean()) / N if n else math.nan,
                        "variance": float(values.var(ddof=1)) if n > 1 else math.nan,
                        "exit_mean": float(exits.mean()) if n else math.nan,
                        "exit_abs_mean": float(np.abs(exits).mean()) if n else math.nan,
                        "rho": density.rho,
                    },
                    truncated=batch.truncated,
                )]

            self._guarded({"N": N}, build)
        return None, "mean"

    def local_stationarity(self):
        drift = self.cfg.r[0] if self.cfg.r else None
        for i, N in enumerate(self.cfg.N):
            estimates = []
            for j, c in enumerate(self.cfg.c):
                def build(N=N, c=c, rng=self.root.child(i).child(j)) -> List[EstimateRow]:
                    estimate = local_agreement(rng, N, c, self.cfg.reps, rho=self.cfg.rho, r=drift, pool=self.pool)
                    estimates.append((c, estimate.p_hat))
                    return [EstimateRow.from_binomial({"N": N, "c": c}, estimate)]

                self._guarded({"N": N, "c": c}, build)
            self._fit(
                "failure~c", [e[0] for e in estimates], [e[1] for e in estimates],
                LOCAL_STATIONARITY_EXPONENT, {"N": N}, exponent=LOCAL_STATIONARITY_EXPONENT,
            )
        return "failures", "p_hat"

    def stabilization(self):
        for i, N in enumerate(self.cfg.N):
            collected: List[Tuple[int, float]] = []

            def build(N=N, rng=self.root.child(i)) -> List[EstimateRow]:
                estimates = stabilization_profile(
                    rng, self.cfg.xi, N, self.cfg.M, self.cfg.reps, anchor=self.cfg.anchor, pool=self.pool
                )
                rows = []
                for M, agreement in zip(self.cfg.M, estimates):
                    disagreement = complement(agreement)
                    collected.append((M, disagreement.p_hat))
                    rows.append(EstimateRow.from_binomial({"N": N, "M": M, "K": self.cfg.anchor}, disagreement))
                return rows

            if not self.cfg.M:
                continue
            self._guarded({"N": N}, build)
            self._fit(
                "disagreement~M", [c[0] for c in collected], [c[1] for c in collected],
                STABILIZATION_EXPONENT, {"N": N, "K": self.cfg.anchor},
            )
        return "disagreements", "p_hat"

    def coalescence(self):
        for i, N in enumerate(self.cfg.N):
            if self.cfg.a:
                for j, a in enumerate(self.cfg.a):
                    def build(N=N, a=a, rng=self.root.child(i).child(j)) -> List[EstimateRow]:
                        near_origin, near_source = macro_coalescence(
                            rng, a, self.cfg.alpha, self.cfg.xi, N, self.cfg.reps, pool=self.pool
                        )
                        return (self._tail_rows({"N": N, "a": a, "event": "near_origin"}, near_origin, "near_origin~alpha")
                                + self._tail_rows({"N": N, "a": a, "event": "near_source"}, near_source, "near_source~alpha"))

                    if self.cfg.alpha:
                        self._guarded({"N": N, "a": a}, build)
            else:
                for j, k in enumerate(self.cfg.k):
                    def build(N=N, k=k, rng=self.root.child(i).child(j)) -> List[EstimateRow]:
                        tail = coalescence_tail(rng, k, self.cfg.R, N, self.cfg.reps, xi=self.cfg.xi, pool=self.pool)
                        return self._tail_rows({"N": N, "k": k}, tail, "tail~R")

                    if self.cfg.R:
                        self._guarded({"N": N, "k": k}, build)
        return "events", "p_hat"

    def exponents(self):
        suites = set(self.cfg.suite)
        if "variance" in suites and self.cfg.N:
            def build_variance() -> List[EstimateRow]:
                result = variance_exponent(self.root.child(0), self.cfg.N, self.cfg.reps, pool=self.pool)
                rows = [
                    EstimateRow(
                        parameters={"suite": "variance", "N": m.N},
                        estimate=m.variance,
                        reps=m.reps,
                        extra={"mean": m.mean, "mean_over_N": m.mean_over_N},
                        truncated=m.truncated,
                    )
                    for m in result.moments
                ]
                if result.fit is not None:
                    rows.append(EstimateRow.from_fit("variance~N", result.fit, {"suite": "variance"}))
                else:
                    rows.append(EstimateRow.error({"suite": "variance", "fit": "variance~N"}, result.note))
                return rows

            self._guarded({"suite": "variance"}, build_variance)

        for i, N in enumerate(self.cfg.N):
            if "transversal" in suites and self.cfg.l:
                self._guarded({"suite": "transversal", "N": N}, lambda N=N, rng=self.root.child(1).child(i):
                              self._transversal_rows(rng, N))
            if "exit" in suites and self.cfg.r:
                def build_exit(N=N, rng=self.root.child(2).child(i)) -> List[EstimateRow]:
                    tail = exit_point_tail(rng, self.cfg.rho, N, self.cfg.r, self.cfg.reps, pool=self.pool)
                    return self._tail_rows({"suite": "exit", "N": N}, tail, "exit~r")

                self._guarded({"suite": "exit", "N": N}, build_exit)
            if "profile" in suites:
                for j, c in enumerate(self.cfg.c):
                    self._guarded({"suite": "profile", "N": N, "c": c},
                                  lambda N=N, c=c, rng=self.root.child(3).child(i).child(j): self._profile_rows(rng, N, c))
            if "burke" in suites:
                self._guarded({"suite": "burke", "N": N},
                              lambda N=N, rng=self.root.child(4).child(i): self._burke_rows(rng, N))
        return "count", "estimate"

    def _transversal_rows(self, rng: RngStream, N: int) -> List[EstimateRow]:
        r_grid = self.cfg.r or (1.0, 1.5, 2.0, 3.0)
        summary = transversal_fluctuation(rng, self.cfg.l, N, self.cfg.reps, xi=self.cfg.xi, r_grid=r_grid,
                                          pool=self.pool)
        rows = []
        for l, quantiles in zip(summary.l_grid, summary.quantiles):
            for level, value in zip(summary.levels, quantiles):
                rows.append(EstimateRow(
                    parameters={"suite": "transversal", "N": N, "l": l, "level": level},
                    estimate=float(value),
                    reps=summary.tail.estimates[0].reps if summary.tail.estimates else 0,
                    truncated=summary.truncated,
                ))
        rows.append(EstimateRow(
            parameters={"suite": "transversal", "N": N},
            estimate=summary.collapse_spread,
            extra={"fit": "quantile_collapse"},
            row_type="summary",
            truncated=summary.truncated,
        ))
        return rows + self._tail_rows({"suite": "transversal", "N": N}, summary.tail, "transversal~r")

    def _profile_rows(self, rng: RngStream, N: int, c: float) -> List[EstimateRow]:
        result = profile_gaussianity(rng, N, c, self.cfg.reps, level=self.cfg.ks_level, pool=self.pool)
        rows = []
        for test, ks in (("step", result.step_ks), ("stationary", result.stationary_ks), ("point", result.point_ks)):
            rows.append(EstimateRow(
                parameters={"suite": "profile", "N": N, "c": c, "L": result.window, "test": test},
                estimate=ks.statistic,
                reps=ks.n,
                extra={"critical": ks.critical, "pvalue": ks.pvalue, "passed": ks.passed,
                       "step_variance": result.step_variance},
            ))
        return rows

    def _burke_rows(self, rng: RngStream, N: int) -> List[EstimateRow]:
        summary = burke_check(rng, self.cfg.rho, N, self.cfg.reps, level=self.cfg.ks_level, pool=self.pool)
        return [
            EstimateRow.from_binomial({"suite": "burke", "N": N, "rho": summary.rho, "edge": "e1"}, summary.e1,
                                      mean_statistic=summary.mean_statistic_e1),
            EstimateRow.from_binomial({"suite": "burke", "N": N, "rho": summary.rho, "edge": "e2"}, summary.e2,
                                      mean_statistic=summary.mean_statistic_e2),
        ]

    def queue_check(self):
        for i, n in enumerate(self.cfg.N):
            def build(n=n, rng=self.root.child(i)) -> List[EstimateRow]:
                checks = queue_check(rng, self.cfg.lam, self.cfg.rho, n, level=self.cfg.ks_level)
                return [
                    EstimateRow(
                        parameters={"n": n, "lambda": self.cfg.lam, "rho": self.cfg.rho, "check": check.name},
                        estimate=check.statistic,
                        reps=check.samples,
                        extra={"critical": check.critical, "passed": check.passed},
                        note=check.note,
                    )
                    for check in checks
                ]

            self._guarded({"n": n}, build)
        return None, "statistic"

    def bound_check(self):
        for i, N in enumerate(self.cfg.N):
            for j, r in enumerate(self.cfg.r):
                for h, m in enumerate(self.cfg.M):
                    def build(N=N, r=r, m=m, rng=self.root.child(i).child(j).child(h)) -> List[EstimateRow]:
                        row = bound_check(rng, self.cfg.rho, N, r, m, self.cfg.reps, pool=self.pool)
                        return [EstimateRow.from_binomial(
                            {"N": N, "r": r, "m": m}, row.estimate,
                            beta=row.beta, alpha=row.alpha, theta=row.theta, bound=row.bound,
                            heavy_traffic=row.heavy_traffic, holds=row.holds,
                        )]

                    self._guarded({"N": N, "r": r, "m": m}, build)
        return "nonempty", "p_hat"

    @performance_monitor
    def run(self) -> ExperimentResult:
        """設定されたファミリを実行して結果を返す"""
        resolved = self.cfg.canonical()
        logger.info(f"実験 {self.cfg.experiment} を開始: {resolved}")
        started = time.perf_counter()
        handler = getattr(self, self.cfg.experiment.replace("-", "_"))
        count_label, estimate_label = handler()
        result = ExperimentResult(
            experiment=self.cfg.experiment,
            resolved_config=resolved,
            rows=self.rows,
            count_label=count_label,
            estimate_label=estimate_label,
            wall_time=time.perf_counter() - started,
        )
        if self.budget.expired or result.truncated:
            self.error_handler.handle_error(
                BudgetExceededError(f"実験 {self.cfg.experiment} は予算切れで打ち切られました（部分結果）"),
                severity=ErrorSeverity.MEDIUM,
                context={"experiment": self.cfg.experiment, "budget_seconds": self.cfg.budget_seconds},
            )
        logger.info(
            f"実験 {self.cfg.experiment} を終了: {len(result.rows)} 行, エラー {len(result.errors)} 行"
        )
        return result
