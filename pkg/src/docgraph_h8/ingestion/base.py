"""Shared machinery for annotated page corpora."""

import json
from abc import abstractmethod
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import numpy as np
import structlog
from PIL import Image, UnidentifiedImageError

from ..concurrency.task_manager import map_blocking
from ..custom_types.errors import AnnotationError, DocumentImageError
from ..custom_types.records import SkippedDocument
from ..graph.geometry import BBox, ImageSize
from ..interfaces.datasets import DatasetLoader
from .records import DocumentRecord

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".tif", ".tiff")


class MissingImage(Exception):
    """Internal signal: an annotation has no readable page image."""


def find_image(image_dir: Path, stem: str) -> Path | None:
    for suffix in IMAGE_SUFFIXES:
        candidate = image_dir / f"{stem}{suffix}"
        if candidate.exists():
            return candidate
    return None


def read_image_size(path: Path) -> ImageSize:
    """Return (width, height) without decoding the pixel data.

    Raises:
        DocumentImageError: If the file is not a readable image
    """
    try:
        with Image.open(path) as image:
            width, height = image.size
    except (OSError, UnidentifiedImageError) as e:
        raise DocumentImageError(f"{path}: {e}") from e
    return float(width), float(height)


def read_annotation(path: Path) -> dict[str, Any]:
    """Parse an annotation JSON file.

    Raises:
        AnnotationError: If the file is not valid JSON or not an object
    """
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise AnnotationError(f"invalid JSON: {e}", str(path)) from e
    if not isinstance(data, dict):
        raise AnnotationError("top-level value is not an object", str(path))
    return data


def parse_box(
    raw: Any,
    image_size: ImageSize,
    path: Path,
    entity_id: Any,
    logger: structlog.typing.FilteringBoundLogger,
) -> BBox:
    """Parse a 4-number box and clamp it to the image.

    Boxes are clamped rather than dropped so that link ids stay aligned.
    """
    if not isinstance(raw, list | tuple) or len(raw) != 4:
        raise AnnotationError(f"entity {entity_id}: box must have 4 numbers", str(path))
    try:
        box = BBox.from_list([float(v) for v in raw])
    except (TypeError, ValueError) as e:
        raise AnnotationError(f"entity {entity_id}: {e}", str(path)) from e
    clamped = box.clamp_to(image_size)
    if clamped != box:
        logger.warning(
            "Clamped entity box to image",
            path=str(path),
            entity_id=entity_id,
            box=box.as_list(),
            clamped=clamped.as_list(),
        )
    return clamped


def seeded_partition(
    doc_ids: Sequence[str], fraction: float, seed: int
) -> tuple[list[str], list[str]]:
    """Split ids into (rest, carved) with ``round(fraction * len)`` carved ids.

    Both parts keep the sorted order of ``doc_ids``.
    """
    ordered = sorted(doc_ids)
    count = int(round(fraction * len(ordered)))
    permutation = np.random.default_rng(seed).permutation(len(ordered))
    carved = {ordered[i] for i in permutation[:count]}
    return [d for d in ordered if d not in carved], [d for d in ordered if d in carved]


class AnnotatedCorpusLoader(DatasetLoader):
    """Base loader: parses annotation files in parallel and records skips."""

    annotation_suffixes: tuple[str, ...] = (".json",)

    def __init__(
        self,
        root: Path | str,
        seed: int = 42,
        workers: int = 1,
        limit_docs: int | None = None,
        logger: structlog.typing.FilteringBoundLogger | None = None,
    ):
        """Initialize the loader.

        Args:
            root: Dataset root directory
            seed: Seed of the random partitions
            workers: Number of documents parsed concurrently
            limit_docs: Keep at most this many documents per split
            logger: Logger instance for recording events
        """
        self._root = Path(root)
        self._seed = seed
        self._workers = workers
        self._limit_docs = limit_docs
        self._logger = logger or structlog.get_logger()
        self._skipped: list[SkippedDocument] = []

    @property
    def skipped(self) -> list[SkippedDocument]:
        return list(self._skipped)

    @abstractmethod
    def parse_document(self, annotation_path: Path) -> DocumentRecord:
        """Parse one annotation file.

        Raises:
            MissingImage: If the page image is absent or unreadable
            AnnotationError: If the annotation is malformed
        """
        pass

    def parse_directory(self, annotation_dir: Path) -> list[DocumentRecord]:
        """Parse every annotation in a directory, skipping pages without images.

        Raises:
            AnnotationError: On the first malformed annotation
        """
        if not annotation_dir.is_dir():
            raise AnnotationError("annotation directory not found", str(annotation_dir))
        paths = sorted(p for p in annotation_dir.iterdir() if p.suffix.lower() in self.annotation_suffixes)
        outcomes = map_blocking(
            self.parse_document,
            paths,
            workers=self._workers,
            logger=self._logger,
            context={"directory": str(annotation_dir)},
        )
        documents: list[DocumentRecord] = []
        for path, outcome in zip(paths, outcomes, strict=True):
            error = outcome["error"]
            if isinstance(error, MissingImage):
                self._logger.warning("Skipping document", path=str(path), reason=str(error))
                self._skipped.append({"path": str(path), "reason": str(error)})
                continue
            if error is not None:
                raise error
            assert outcome["result"] is not None
            documents.append(outcome["result"])
        return documents

    def limit(self, documents: Sequence[DocumentRecord]) -> tuple[DocumentRecord, ...]:
        if self._limit_docs is None:
            return tuple(documents)
        return tuple(documents[: self._limit_docs])

    def resolve_image(self, image_dir: Path, stem: str) -> tuple[Path, ImageSize]:
        image_path = find_image(image_dir, stem)
        if image_path is None:
            raise MissingImage(f"no image for {stem} in {image_dir}")
        try:
            return image_path, read_image_size(image_path)
        except DocumentImageError as e:
            raise MissingImage(str(e)) from e
