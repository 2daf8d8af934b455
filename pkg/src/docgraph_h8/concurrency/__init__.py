"""Concurrency module.

Bounded, order-preserving fan-out of per-document work over a thread pool.
"""

__all__ = [
    "StandardTaskManager",
    "default_worker_count",
    "map_blocking",
]

from .task_manager import StandardTaskManager, default_worker_count, map_blocking
