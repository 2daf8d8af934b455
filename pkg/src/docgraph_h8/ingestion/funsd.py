"""FUNSD loader.

Expects the published layout::

    <root>/training_data/annotations/*.json
    <root>/training_data/images/*.png
    <root>/testing_data/annotations/*.json
    <root>/testing_data/images/*.png

with every annotation holding a ``form`` list of entities
(``id``, ``box``, ``label``, ``linking``, ``text``).
"""

from pathlib import Path

import structlog

from ..custom_types.common import DatasetName, FunsdLabel, LinkTask, SplitName
from ..custom_types.errors import AnnotationError, ConfigurationError
from .base import AnnotatedCorpusLoader, parse_box, read_annotation, seeded_partition
from .records import DatasetSplit, DatasetSplits, DocumentRecord, EntityRecord

FUNSD_LABELS = frozenset(label.value for label in FunsdLabel)


class FunsdLoader(AnnotatedCorpusLoader):
    """Loader for the FUNSD form corpus."""

    name = DatasetName.FUNSD
    task = LinkTask.KEY_VALUE

    def __init__(
        self,
        root: Path | str,
        val_fraction: float = 0.1,
        seed: int = 42,
        workers: int = 1,
        limit_docs: int | None = None,
        logger: structlog.typing.FilteringBoundLogger | None = None,
    ):
        """Initialize the loader.

        Args:
            root: FUNSD root directory
            val_fraction: Share of the official training documents moved to validation
            seed: Seed of the validation partition
            workers: Number of documents parsed concurrently
            limit_docs: Keep at most this many documents per split
            logger: Logger instance for recording events
        """
        if not 0.0 <= val_fraction < 1.0:
            raise ConfigurationError(f"val_fraction must be in [0, 1), got {val_fraction}", stage="data")
        super().__init__(root, seed=seed, workers=workers, limit_docs=limit_docs, logger=logger)
        self._val_fraction = val_fraction

    def parse_document(self, annotation_path: Path) -> DocumentRecord:
        data = read_annotation(annotation_path)
        form = data.get("form")
        if not isinstance(form, list):
            raise AnnotationError("missing 'form' list", str(annotation_path))

        image_dir = annotation_path.parent.parent / "images"
        image_path, image_size = self.resolve_image(image_dir, annotation_path.stem)

        entities: list[EntityRecord] = []
        seen: set[int] = set()
        for entry in form:
            try:
                entity_id = int(entry["id"])
                label = str(entry["label"]).lower()
                raw_links = entry.get("linking", [])
                links = tuple((int(a), int(b)) for a, b in raw_links)
            except (KeyError, TypeError, ValueError) as e:
                raise AnnotationError(f"malformed entity: {e}", str(annotation_path)) from e
            if label not in FUNSD_LABELS:
                raise AnnotationError(f"entity {entity_id}: unknown label {label!r}", str(annotation_path))
            if entity_id in seen:
                raise AnnotationError(f"duplicate entity id {entity_id}", str(annotation_path))
            seen.add(entity_id)
            box = parse_box(entry.get("box"), image_size, annotation_path, entity_id, self._logger)
            text = entry.get("text")
            entities.append(
                EntityRecord(
                    id=entity_id,
                    box=box,
                    label=label,
                    links=links,
                    text=text if isinstance(text, str) else None,
                )
            )

        for entity in entities:
            for a, b in entity.links:
                if a not in seen or b not in seen:
                    raise AnnotationError(
                        f"entity {entity.id}: link ({a}, {b}) references a missing entity",
                        str(annotation_path),
                    )

        return DocumentRecord(
            doc_id=annotation_path.stem,
            image_path=str(image_path),
            image_size=image_size,
            entities=tuple(entities),
        )

    def load(self) -> DatasetSplits:
        self._skipped = []
        official_train = self.parse_directory(self._root / "training_data" / "annotations")
        test = self.parse_directory(self._root / "testing_data" / "annotations")

        by_id = {doc.doc_id: doc for doc in official_train}
        train_ids, val_ids = seeded_partition(list(by_id), self._val_fraction, self._seed)
        splits = DatasetSplits(
            dataset=self.name,
            task=self.task,
            train=DatasetSplit(SplitName.TRAIN, self.limit([by_id[d] for d in train_ids])),
            validation=DatasetSplit(SplitName.VALIDATION, self.limit([by_id[d] for d in val_ids])),
            test=DatasetSplit(SplitName.TEST, self.limit(test)),
            skipped=tuple(self._skipped),
        )
        self._logger.info(
            "Loaded FUNSD",
            train=len(splits.train),
            validation=len(splits.validation),
            test=len(splits.test),
            skipped=len(self._skipped),
        )
        return splits


def load_funsd(
    root_path: Path | str,
    val_fraction: float = 0.1,
    seed: int = 42,
    workers: int = 1,
    limit_docs: int | None = None,
) -> DatasetSplits:
    """Load FUNSD into train, validation and test splits.

    Args:
        root_path: FUNSD root directory
        val_fraction: Share of the official training documents moved to validation
        seed: Seed of the validation partition
        workers: Number of documents parsed concurrently
        limit_docs: Keep at most this many documents per split

    Returns:
        The three disjoint splits plus the skipped-documents report
    """
    loader = FunsdLoader(
        root_path, val_fraction=val_fraction, seed=seed, workers=workers, limit_docs=limit_docs
    )
    return loader.load()
