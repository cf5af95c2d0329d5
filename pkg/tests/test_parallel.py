import math
import os
import threading
import unittest
from unittest import mock

from phasecert.parallel import ParallelMapper, default_workers


class ParallelMapperTests(unittest.TestCase):
    def test_order_is_preserved(self):
        self.assertEqual([x * x for x in range(20)], ParallelMapper(4).map(lambda x: x * x, range(20)))

    def test_single_worker_runs_inline(self):
        threads = ParallelMapper(1).map(lambda _: threading.current_thread(), [1, 2, 3])
        self.assertTrue(all(t is threading.current_thread() for t in threads))

    def test_exceptions_propagate(self):
        def boom(x):
            if x == 3:
                raise ValueError("three")
            return x

        with self.assertRaises(ValueError):
            ParallelMapper(2).map(boom, range(6))

    def test_callable_alias(self):
        self.assertEqual([2, 3], ParallelMapper(2)(lambda x: x + 1, [1, 2]))

    def test_process_pool_keeps_order(self):
        mapper = ParallelMapper(2, processes=True)
        self.assertTrue(mapper.processes)
        self.assertEqual([math.factorial(k) for k in range(12)], mapper.map(math.factorial, range(12)))

    def test_process_pool_propagates_errors(self):
        with self.assertRaises(ValueError):
            ParallelMapper(2, processes=True).map(math.factorial, [3, -1, 4])

    def test_threads_are_the_default(self):
        self.assertFalse(ParallelMapper(2).processes)

    def test_workers_from_environment(self):
        with mock.patch.dict(os.environ, {"PHASECERT_WORKERS": "3"}):
            self.assertEqual(3, default_workers())
            self.assertEqual(3, ParallelMapper().max_workers)
        with mock.patch.dict(os.environ, {"PHASECERT_WORKERS": "lots"}):
            self.assertEqual(min(8, os.cpu_count() or 1), default_workers())
        with mock.patch.dict(os.environ, {"PHASECERT_WORKERS": "0"}):
            self.assertGreaterEqual(default_workers(), 1)


if __name__ == "__main__":
    unittest.main()
