"""Energy-set partitioning and the worker pool that executes set tasks.

Sets own contiguous group ranges. Every set task writes only its own rows,
so the assembled result does not depend on the set count or on which thread
ran which task.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .errors import ConfigurationError


@dataclass(frozen=True)
class EnergySetLayout:
    """Contiguous partition of groups ``[start, stop)`` into ``n_sets`` ranges."""

    start: int
    stop: int
    ranges: tuple[tuple[int, int], ...]

    @property
    def n_sets(self) -> int:
        return len(self.ranges)

    @property
    def count(self) -> int:
        return self.stop - self.start

    def slices(self) -> list[slice]:
        return [slice(a, b) for a, b in self.ranges]

    def owner(self, g: int) -> int:
        for s, (a, b) in enumerate(self.ranges):
            if a <= g < b:
                return s
        raise IndexError(f"group {g} outside layout [{self.start}, {self.stop})")


def make_layout(start: int, stop: int, n_sets: int = 1) -> EnergySetLayout:
    """Distribute groups evenly; earlier sets take the remainder.

    ``n_sets`` larger than the group count is clamped to one group per set.
    """
    if n_sets < 1:
        raise ConfigurationError(f"energy set count must be >= 1, got {n_sets}")
    count = stop - start
    if count < 1:
        raise ConfigurationError(f"empty group range [{start}, {stop})")
    n = min(n_sets, count)
    base, extra = divmod(count, n)
    ranges, g = [], start
    for s in range(n):
        size = base + (1 if s < extra else 0)
        ranges.append((g, g + size))
        g += size
    return EnergySetLayout(start, stop, tuple(ranges))


class WorkerPool:
    """Ordered ``map`` over a thread pool; serial when ``threads == 1``."""

    def __init__(self, threads: int = 1):
        if threads < 1:
            raise ConfigurationError(f"thread count must be >= 1, got {threads}")
        self.threads = threads
        self._executor = None
        self._lock = threading.Lock()

    def map(self, fn, items):
        items = list(items)
        if self.threads == 1 or len(items) <= 1:
            return [fn(x) for x in items]
        with self._lock:
            if self._executor is None:
                self._executor = ThreadPoolExecutor(max_workers=self.threads)
        # list() joins every task: the synchronization point between sets
        return list(self._executor.map(fn, items))

    def close(self):
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


SERIAL = WorkerPool(1)
