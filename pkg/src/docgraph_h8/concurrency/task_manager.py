"""Task manager implementation for per-document work.

This module provides a TaskManager implementation that follows the interface
defined in the concurrency interfaces: blocking callables (file parsing, graph
construction) run on a thread pool, bounded by a semaphore, and their outcomes
come back in the order the items were submitted.
"""

import asyncio
import signal
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Generic, TypeVar

import psutil
import structlog

from ..interfaces.concurrency import TaskManager, TaskOutcome

T = TypeVar("T")
R = TypeVar("R")


def default_worker_count() -> int:
    """Return the number of physical cores (at least one)."""
    return max(1, psutil.cpu_count(logical=False) or 1)


class StandardTaskManager(TaskManager[T, R], Generic[T, R]):
    """Thread-pool backed implementation of the TaskManager interface.

    With ``max_workers=1`` items are processed strictly one after another,
    which is the mode the reproducibility guarantees are pinned to.

    Example:
        ```python
        async with StandardTaskManager(max_workers=4) as manager:
            outcomes = await manager.map_items(build_one, documents)
        ```
    """

    def __init__(
        self,
        max_workers: int | None = None,
        thread_pool: ThreadPoolExecutor | None = None,
        logger: structlog.typing.FilteringBoundLogger | None = None,
    ):
        """Initialize the standard task manager.

        Args:
            max_workers: Maximum number of concurrent items (defaults to physical cores)
            thread_pool: Optional existing thread pool executor
            logger: Logger instance for recording events
        """
        self._max_workers = max_workers or default_worker_count()
        self._thread_pool = thread_pool or ThreadPoolExecutor(max_workers=self._max_workers)
        self._logger = logger or structlog.get_logger()
        self._tasks: set[asyncio.Task[Any]] = set()
        self._semaphore = asyncio.Semaphore(self._max_workers)
        self._shutting_down = False

    @property
    def max_workers(self) -> int:
        """Configured concurrency bound."""
        return self._max_workers

    async def __aenter__(self) -> "StandardTaskManager[T, R]":
        """Enter async context, installing signal handlers."""
        self._setup_signal_handlers()
        return self

    async def __aexit__(self, exc_type: Any, exc_val: Any, exc_tb: Any) -> None:
        """Exit async context, cleaning up resources."""
        self._shutting_down = True
        self.cancel_all_tasks()
        self._remove_signal_handlers()
        self.shutdown()

    def _setup_signal_handlers(self) -> None:
        """Set up signal handlers for graceful shutdown."""
        try:
            loop = asyncio.get_running_loop()
            for sig in (signal.SIGTERM, signal.SIGINT):
                loop.add_signal_handler(sig, self._on_signal, sig)
        except (NotImplementedError, RuntimeError):
            # Signal handlers not supported on this platform or outside the main thread
            self._logger.debug("Signal handlers not installed")

    def _remove_signal_handlers(self) -> None:
        try:
            loop = asyncio.get_running_loop()
            for sig in (signal.SIGTERM, signal.SIGINT):
                loop.remove_signal_handler(sig)
        except (NotImplementedError, RuntimeError):
            pass

    def _on_signal(self, sig: signal.Signals) -> None:
        self._logger.info("Received shutdown signal", signal=sig.name)
        self._shutting_down = True
        self.cancel_all_tasks()

    async def run_in_thread(self, func: Callable[..., R], *args: Any, **kwargs: Any) -> R:
        """Run a blocking callable on the thread pool.

        Args:
            func: The function to run in a thread
            *args: Positional arguments to pass to the function
            **kwargs: Keyword arguments to pass to the function

        Returns:
            The result of the function

        Raises:
            RuntimeError: If the manager is shutting down
            Exception: Any exception raised by ``func``
        """
        if self._shutting_down:
            raise RuntimeError("TaskManager is shutting down")
        loop = asyncio.get_running_loop()
        result: R = await loop.run_in_executor(self._thread_pool, lambda: func(*args, **kwargs))
        return result

    async def map_items(
        self,
        func: Callable[[T], R],
        items: Sequence[T],
        context: dict[str, Any] | None = None,
    ) -> list[TaskOutcome[R]]:
        """Apply ``func`` to every item with at most ``max_workers`` in flight.

        Failures are captured per item instead of cancelling the batch, so a
        single unreadable document does not abort a corpus run.

        Args:
            func: Callable applied to each item
            items: Items to process
            context: Optional context information for logging

        Returns:
            One outcome per item, in input order
        """
        if not items:
            return []

        context = context or {}
        self._logger.debug("Mapping items", count=len(items), workers=self._max_workers, **context)

        async def run_one(item: T) -> TaskOutcome[R]:
            async with self._semaphore:
                try:
                    value = await self.run_in_thread(func, item)
                    return {"success": True, "result": value, "error": None}
                except Exception as e:
                    self._logger.warning("Item failed", exception=str(e), **context)
                    return {"success": False, "result": None, "error": e}

        tasks = [asyncio.create_task(run_one(item)) for item in items]
        self._tasks.update(tasks)
        try:
            return list(await asyncio.gather(*tasks))
        finally:
            self._tasks.difference_update(tasks)

    def cancel_all_tasks(self) -> None:
        """Cancel all tracked tasks."""
        if not self._tasks:
            return

        self._logger.info("Cancelling all tasks", task_count=len(self._tasks))
        for task in self._tasks:
            if not task.done():
                task.cancel()
        self._tasks.clear()

    def get_active_task_count(self) -> int:
        """Get the number of currently tracked tasks."""
        return len(self._tasks)

    def shutdown(self) -> None:
        """Shut the thread pool down, waiting for running callables."""
        self._thread_pool.shutdown(wait=True)


def map_blocking(
    func: Callable[[T], R],
    items: Sequence[T],
    workers: int | None = None,
    logger: structlog.typing.FilteringBoundLogger | None = None,
    context: dict[str, Any] | None = None,
) -> list[TaskOutcome[R]]:
    """Synchronous entry point around :meth:`StandardTaskManager.map_items`.

    Args:
        func: Callable applied to each item
        items: Items to process
        workers: Concurrency bound
        logger: Logger instance for recording events
        context: Optional context information for logging

    Returns:
        One outcome per item, in input order
    """

    async def runner() -> list[TaskOutcome[R]]:
        async with StandardTaskManager[T, R](max_workers=workers, logger=logger) as manager:
            return await manager.map_items(func, items, context=context)

    return asyncio.run(runner())
