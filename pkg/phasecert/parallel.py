"""
Ordered map for independent work items (grid points, sectors, ensemble instances).

Threads suit the numeric scans: the quadrature spends its time inside numpy
kernels that release the GIL. The exact ``Fraction`` arithmetic of the
certification and the property ensembles holds the GIL, so threads run it
one item at a time; pass ``processes=True`` there and map a module-level
function over picklable items.
"""

import os
from concurrent.futures import Executor, ProcessPoolExecutor, ThreadPoolExecutor
from typing import Any, Callable, List, Optional, Sequence, TypeVar

from rich.console import Console

T = TypeVar("T")

console = Console()


def default_workers() -> int:
    """Width from PHASECERT_WORKERS, else min(8, cpu count)."""
    env = os.environ.get("PHASECERT_WORKERS")
    if env:
        try:
            value = int(env)
            if value >= 1:
                return value
        except ValueError:
            pass
        console.print(f"[yellow]⚠ ignoring PHASECERT_WORKERS={env!r}; expected a positive integer[/yellow]")
    return min(8, os.cpu_count() or 1)


class ParallelMapper:
    """Ordered, exception-propagating map over a thread or process pool."""

    def __init__(self, max_workers: Optional[int] = None, processes: bool = False):
        """
        Initialize the mapper.

        Args:
            max_workers: Maximum number of concurrent workers; 1 runs inline
            processes: Use a process pool; ``fn`` and the items must pickle
        """
        self.max_workers = max_workers or default_workers()
        self.processes = processes

    def _executor(self) -> Executor:
        if self.processes:
            return ProcessPoolExecutor(max_workers=self.max_workers)
        return ThreadPoolExecutor(max_workers=self.max_workers)

    def map(self, fn: Callable[[T], Any], items: Sequence[T]) -> List[Any]:
        """
        Apply ``fn`` to every item.

        Args:
            fn: Function of one work item
            items: Work items

        Returns:
            Results in the order of ``items``; the first exception is re-raised
        """
        items = list(items)
        if self.max_workers <= 1 or len(items) <= 1:
            return [fn(item) for item in items]
        chunksize = max(1, len(items) // (4 * self.max_workers)) if self.processes else 1
        with self._executor() as executor:
            return list(executor.map(fn, items, chunksize=chunksize))

    def __call__(self, fn: Callable[[T], Any], items: Sequence[T]) -> List[Any]:
        return self.map(fn, items)
