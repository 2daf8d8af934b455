"""Concurrency interfaces.

This module defines the abstraction used to fan per-document work out over a
bounded pool of workers while keeping results in input order.
"""

from abc import ABC, abstractmethod
from collections.abc import Callable, Sequence
from typing import Any, Generic, TypedDict, TypeVar

T = TypeVar("T")
R = TypeVar("R")


class TaskOutcome(TypedDict, Generic[R]):
    """Outcome of one unit of work."""

    success: bool
    result: R | None
    error: BaseException | None


class TaskManager(Generic[T, R], ABC):
    """Interface for task management implementations."""

    @abstractmethod
    async def run_in_thread(self, func: Callable[..., R], *args: Any, **kwargs: Any) -> R:
        """Run a blocking callable on a worker thread.

        Args:
            func: The function to run
            *args: Positional arguments to pass to the function
            **kwargs: Keyword arguments to pass to the function

        Returns:
            The result of the function
        """
        pass

    @abstractmethod
    async def map_items(
        self,
        func: Callable[[T], R],
        items: Sequence[T],
        context: dict[str, Any] | None = None,
    ) -> list[TaskOutcome[R]]:
        """Apply a blocking callable to every item with bounded concurrency.

        Args:
            func: Callable applied to each item
            items: Items to process
            context: Optional context information for logging

        Returns:
            One outcome per item, in input order
        """
        pass

    @abstractmethod
    def shutdown(self) -> None:
        """Release worker threads."""
        pass
