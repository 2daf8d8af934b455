"""Dataset loader interface."""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import TYPE_CHECKING

from ..custom_types.common import DatasetName, LinkTask
from ..custom_types.records import SkippedDocument

if TYPE_CHECKING:
    from ..ingestion.records import DatasetSplits


class DatasetLoader(ABC):
    """Interface for annotated-corpus loaders."""

    name: DatasetName
    task: LinkTask

    @abstractmethod
    def load(self) -> DatasetSplits:
        """Read the corpus from disk.

        Returns:
            Disjoint train, validation and test splits
        """
        pass

    @property
    @abstractmethod
    def skipped(self) -> list[SkippedDocument]:
        """Documents dropped during the last ``load`` call."""
        pass
