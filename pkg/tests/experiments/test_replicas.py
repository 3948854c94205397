#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
レプリカ実行のテスト
"""

import time
import unittest

from core.lattice import RngStream
from experiments.replicas import Budget, ReplicaPool
from utils.error_handler import InvalidParameterError


def _draw(stream, index):
    return index, float(stream.exponential(1.0))


class TestReplicaPool(unittest.TestCase):
    """並列度と予算"""

    def test_results_in_index_order(self):
        batch = ReplicaPool(jobs=4).run(_draw, RngStream(700), 32)
        self.assertEqual([v[0] for v in batch.values], list(range(32)))
        self.assertEqual(batch.completed, 32)
        self.assertFalse(batch.truncated)

    def test_serial_equals_parallel(self):
        """並列度を変えても同じ値"""
        serial = ReplicaPool(jobs=1).run(_draw, RngStream(701), 20)
        parallel = ReplicaPool(jobs=3).run(_draw, RngStream(701), 20)
        self.assertEqual(serial.values, parallel.values)

    def test_replica_streams_are_children(self):
        """レプリカ i は親ストリームの子 i を受け取る"""
        batch = ReplicaPool(jobs=1).run(_draw, RngStream(702), 3)
        self.assertEqual(batch.values[2][1], float(RngStream(702).child(2).exponential(1.0)))

    def test_expired_budget_truncates(self):
        pool = ReplicaPool(jobs=1, budget=Budget(1e-9))
        time.sleep(0.001)
        batch = pool.run(_draw, RngStream(703), 10)
        self.assertTrue(batch.truncated)
        self.assertEqual(batch.completed, 0)
        self.assertEqual(batch.requested, 10)

    def test_parallel_budget_keeps_prefix(self):
        """並列実行の打ち切りでも先頭から途切れない部分だけを返す"""
        def slow(stream, index):
            time.sleep(0.05)
            return index

        batch = ReplicaPool(jobs=2, budget=Budget(0.12)).run(slow, RngStream(704), 40)
        self.assertTrue(batch.truncated)
        self.assertEqual(batch.values, list(range(batch.completed)))
        self.assertLess(batch.completed, 40)

    def test_zero_replicas(self):
        batch = ReplicaPool(jobs=2).run(_draw, RngStream(705), 0)
        self.assertEqual(batch.values, [])
        self.assertFalse(batch.truncated)

    def test_invalid_jobs(self):
        with self.assertRaises(InvalidParameterError):
            ReplicaPool(jobs=0)


class TestBudget(unittest.TestCase):
    """予算"""

    def test_unlimited(self):
        for seconds in (None, 0):
            budget = Budget(seconds)
            self.assertIsNone(budget.remaining())
            self.assertFalse(budget.expired)

    def test_remaining_decreases(self):
        budget = Budget(100.0)
        self.assertLessEqual(budget.remaining(), 100.0)
        self.assertFalse(budget.expired)


if __name__ == '__main__':
    unittest.main()
