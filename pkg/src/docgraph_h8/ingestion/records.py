"""Annotated document records produced by the loaders."""

from dataclasses import dataclass, field

from ..custom_types.common import DatasetName, LinkTask, SplitName
from ..custom_types.records import SkippedDocument
from ..graph.geometry import BBox, ImageSize

__all__ = [
    "EntityRecord",
    "DocumentRecord",
    "DatasetSplit",
    "DatasetSplits",
    "SkippedDocument",
]


@dataclass(frozen=True, slots=True)
class EntityRecord:
    """One annotated text region.

    ``links`` holds (from_id, to_id) pairs in annotation ids, not node indices.
    ``text`` is metadata only and never reaches a model.
    """

    id: int
    box: BBox
    label: str
    links: tuple[tuple[int, int], ...] = ()
    text: str | None = None
    table_id: int | None = None


@dataclass(frozen=True, slots=True)
class DocumentRecord:
    """One annotated page."""

    doc_id: str
    image_path: str
    image_size: ImageSize
    entities: tuple[EntityRecord, ...]
    tables: tuple[BBox, ...] = ()


@dataclass(frozen=True)
class DatasetSplit:
    """A named partition of a corpus."""

    name: SplitName
    documents: tuple[DocumentRecord, ...]

    @property
    def doc_ids(self) -> list[str]:
        return [doc.doc_id for doc in self.documents]

    def __len__(self) -> int:
        return len(self.documents)


@dataclass(frozen=True)
class DatasetSplits:
    """Disjoint train/validation/test partitions of a corpus."""

    dataset: DatasetName
    task: LinkTask
    train: DatasetSplit
    validation: DatasetSplit
    test: DatasetSplit
    skipped: tuple[SkippedDocument, ...] = field(default=())

    def get(self, name: SplitName | str) -> DatasetSplit:
        return {
            SplitName.TRAIN: self.train,
            SplitName.VALIDATION: self.validation,
            SplitName.TEST: self.test,
        }[SplitName(name)]

    def all_documents(self) -> list[DocumentRecord]:
        return [*self.train.documents, *self.validation.documents, *self.test.documents]
