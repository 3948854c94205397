#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
レプリカの並列実行
各レプリカは独立な乱数ストリームを持ち、結果はレプリカ番号順に並べ直す
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass
from typing import Callable, Generic, List, Optional, TypeVar

from config.optimization_config import OptimizationConfig
from core.lattice import RngStream
from utils.utils import ProgressBar, ParameterValidator

logger = logging.getLogger(__name__)

T = TypeVar("T")


class Budget:
    """実行時間予算（秒）。0 または None は無制限"""

    def __init__(self, seconds: Optional[float] = None):
        self.seconds = float(seconds) if seconds else None
        self.started = time.monotonic()

    def remaining(self) -> Optional[float]:
        if self.seconds is None:
            return None
        return self.seconds - (time.monotonic() - self.started)

    @property
    def expired(self) -> bool:
        remaining = self.remaining()
        return remaining is not None and remaining <= 0.0


@dataclass
class ReplicaBatch(Generic[T]):
    """レプリカ結果（先頭から途切れず完了したもののみ）"""
    values: List[T]
    requested: int
    truncated: bool
    elapsed: float

    @property
    def completed(self) -> int:
        return len(self.values)


class ReplicaPool:
    """
    スレッドプールによるレプリカ実行

    numba カーネルは GIL を解放するため、スレッドで複数の場を同時に構築できる。
    予算切れのときは未着手のレプリカを取り消し、完了済みの最長の先頭部分を返す。
    """

    def __init__(self, jobs: Optional[int] = None, budget: Optional[Budget] = None,
                 show_progress: bool = False):
        """
        初期化

        Args:
            jobs (int): 並列度（既定は OptimizationConfig の max_workers）
            budget (Budget): 実行時間予算
            show_progress (bool): 進捗バーを表示するか
        """
        if jobs is None:
            jobs = OptimizationConfig.get_performance_config()["max_workers"]
        self.jobs = ParameterValidator.positive_int(jobs, "jobs")
        self.budget = budget or Budget()
        self.show_progress = show_progress

    def run(self, func: Callable[[RngStream, int], T], rng: RngStream, reps: int,
            description: str = "レプリカ") -> ReplicaBatch[T]:
        """
        func(rng.child(i), i) を i = 0..reps-1 について実行

        Args:
            func (Callable): レプリカ関数
            rng (RngStream): 親ストリーム
            reps (int): レプリカ数
            description (str): 進捗表示とログの見出し

        Returns:
            ReplicaBatch: 番号順の結果
        """
        reps = ParameterValidator.positive_int(reps, "reps", minimum=0)
        started = time.monotonic()
        progress = ProgressBar(reps, description) if self.show_progress and reps else None

        if self.jobs == 1 or reps <= 1:
            values, truncated = self._run_serial(func, rng, reps, progress)
        else:
            values, truncated = self._run_parallel(func, rng, reps, progress)

        if progress:
            progress.finish()
        elapsed = time.monotonic() - started
        if truncated:
            logger.warning(f"{description}: 予算切れのため {len(values)}/{reps} レプリカで打ち切りました")
        else:
            logger.debug(f"{description}: {reps} レプリカ完了 ({elapsed:.2f}s)")
        return ReplicaBatch(values=values, requested=reps, truncated=truncated, elapsed=elapsed)

    def _run_serial(self, func, rng, reps, progress):
        values = []
        for i in range(reps):
            if self.budget.expired:
                return values, True
            values.append(func(rng.child(i), i))
            if progress:
                progress.update()
        return values, False

    def _run_parallel(self, func, rng, reps, progress):
        results = {}
        truncated = False
        executor = ThreadPoolExecutor(max_workers=self.jobs)
        try:
            future_to_index = {executor.submit(func, rng.child(i), i): i for i in range(reps)}
            pending = set(future_to_index)
            while pending:
                done, pending = wait(pending, timeout=self.budget.remaining(), return_when=FIRST_COMPLETED)
                for future in done:
                    results[future_to_index[future]] = future.result()
                    if progress:
                        progress.update()
                if pending and self.budget.expired:
                    truncated = True
                    for future in pending:
                        future.cancel()
                    break
        finally:
            executor.shutdown(wait=True, cancel_futures=True)

        values = []
        for i in range(reps):
            if i not in results:
                truncated = True
                break
            values.append(results[i])
        return values, truncated
