"""RVL-CDIP Invoices loader.

No official loader exists for this corpus. Two annotation layouts are read::

    <root>/annotations/<doc_id>.json
    <root>/annotations/<doc_id>.xml
    <root>/images/<doc_id>.png

A JSON annotation holds ``entities`` (``id``, ``box``, ``label``, optional
``table``) and ``tables`` (``id``, ``box``). An XML annotation is region
markup with one ``object`` per region: its ``name`` is a class label or
``table`` and its extent is a ``bndbox`` or a ``polygon`` of ``pt`` points.
XML entities and tables are numbered in document order. An entity without an
explicit ``table`` id belongs to the first table whose box contains its centre.
"""

from collections import Counter
from pathlib import Path
from typing import Any

import structlog
from lxml import etree

from ..custom_types.common import DatasetName, InvoiceLabel, LinkTask, SplitName
from ..custom_types.errors import AnnotationError, ConfigurationError
from ..graph.geometry import BBox
from .base import AnnotatedCorpusLoader, parse_box, read_annotation, seeded_partition
from .records import DatasetSplit, DatasetSplits, DocumentRecord, EntityRecord

INVOICE_LABELS = frozenset(label.value for label in InvoiceLabel)
TABLE_REGION = "table"


def normalize_invoice_label(raw: str) -> str:
    """Map spellings such as ``"Invoice Info"`` onto the enum value."""
    return "_".join(raw.strip().lower().replace("-", " ").split())


def _contains(table: BBox, point: tuple[float, float]) -> bool:
    x, y = point
    return table.xmin <= x <= table.xmax and table.ymin <= y <= table.ymax


def _region_extent(region: etree._Element, path: Path) -> list[float]:
    """[xmin, ymin, xmax, ymax] of a ``bndbox`` or of a polygon's points."""
    try:
        bndbox = region.find("bndbox")
        if bndbox is not None:
            return [float(bndbox.findtext(tag, "")) for tag in ("xmin", "ymin", "xmax", "ymax")]
        points = region.findall("polygon/pt")
        if points:
            xs = [float(point.findtext("x", "")) for point in points]
            ys = [float(point.findtext("y", "")) for point in points]
            return [min(xs), min(ys), max(xs), max(ys)]
    except ValueError as e:
        raise AnnotationError(f"region {region.findtext('name')!r}: bad coordinate: {e}", str(path)) from e
    raise AnnotationError(f"region {region.findtext('name')!r} has neither bndbox nor polygon", str(path))


def read_region_xml(path: Path) -> dict[str, Any]:
    """Parse XML region markup into the JSON annotation layout.

    Raises:
        AnnotationError: If the file is not well-formed or a region lacks a name or extent
    """
    parser = etree.XMLParser(resolve_entities=False, no_network=True)
    try:
        root = etree.parse(str(path), parser).getroot()
    except (OSError, etree.XMLSyntaxError) as e:
        raise AnnotationError(f"invalid XML: {e}", str(path)) from e

    entities: list[dict[str, Any]] = []
    tables: list[dict[str, Any]] = []
    for region in root.iter("object"):
        name = (region.findtext("name") or "").strip()
        if not name:
            raise AnnotationError("region without a name", str(path))
        box = _region_extent(region, path)
        if normalize_invoice_label(name) == TABLE_REGION:
            tables.append({"id": len(tables), "box": box})
        else:
            entities.append({"id": len(entities), "box": box, "label": name})
    return {"entities": entities, "tables": tables}


class RvlcdipInvoicesLoader(AnnotatedCorpusLoader):
    """Loader for the RVL-CDIP Invoices region and table annotations."""

    name = DatasetName.RVLCDIP
    task = LinkTask.TABLE
    annotation_suffixes = (".json", ".xml")

    def __init__(
        self,
        root: Path | str,
        fractions: tuple[float, float, float] = (0.7, 0.1, 0.2),
        seed: int = 42,
        workers: int = 1,
        limit_docs: int | None = None,
        logger: structlog.typing.FilteringBoundLogger | None = None,
    ):
        """Initialize the loader.

        Args:
            root: Corpus root directory
            fractions: Train, validation and test shares of the seeded partition
            seed: Seed of the partition
            workers: Number of documents parsed concurrently
            limit_docs: Keep at most this many documents per split
            logger: Logger instance for recording events
        """
        if len(fractions) != 3 or any(f < 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
            raise ConfigurationError(
                f"split fractions must be three non-negative shares summing to 1, got {fractions}", stage="data"
            )
        super().__init__(root, seed=seed, workers=workers, limit_docs=limit_docs, logger=logger)
        self._fractions = fractions

    def _parse_tables(self, raw: Any, path: Path, image_size: tuple[float, float]) -> dict[int, BBox]:
        if raw is None:
            return {}
        if not isinstance(raw, list):
            raise AnnotationError("'tables' must be a list", str(path))
        tables: dict[int, BBox] = {}
        for entry in raw:
            try:
                table_id = int(entry["id"])
            except (KeyError, TypeError, ValueError) as e:
                raise AnnotationError(f"malformed table: {e}", str(path)) from e
            tables[table_id] = parse_box(entry.get("box"), image_size, path, f"table {table_id}", self._logger)
        return tables

    def parse_document(self, annotation_path: Path) -> DocumentRecord:
        if annotation_path.suffix.lower() == ".xml":
            data = read_region_xml(annotation_path)
        else:
            data = read_annotation(annotation_path)
        raw_entities = data.get("entities")
        if not isinstance(raw_entities, list):
            raise AnnotationError("missing 'entities' list", str(annotation_path))

        image_path, image_size = self.resolve_image(self._root / "images", annotation_path.stem)
        tables = self._parse_tables(data.get("tables"), annotation_path, image_size)

        entities: list[EntityRecord] = []
        seen: set[int] = set()
        for entry in raw_entities:
            try:
                entity_id = int(entry["id"])
                label = normalize_invoice_label(str(entry["label"]))
                explicit_table = entry.get("table")
                table_id = None if explicit_table is None else int(explicit_table)
            except (KeyError, TypeError, ValueError) as e:
                raise AnnotationError(f"malformed entity: {e}", str(annotation_path)) from e
            if label not in INVOICE_LABELS:
                raise AnnotationError(f"entity {entity_id}: unknown label {label!r}", str(annotation_path))
            if entity_id in seen:
                raise AnnotationError(f"duplicate entity id {entity_id}", str(annotation_path))
            if table_id is not None and table_id not in tables:
                raise AnnotationError(
                    f"entity {entity_id}: references missing table {table_id}", str(annotation_path)
                )
            seen.add(entity_id)
            box = parse_box(entry.get("box"), image_size, annotation_path, entity_id, self._logger)
            if table_id is None:
                table_id = next(
                    (tid for tid, table in sorted(tables.items()) if _contains(table, box.center)),
                    None,
                )
            entities.append(EntityRecord(id=entity_id, box=box, label=label, table_id=table_id))

        return DocumentRecord(
            doc_id=annotation_path.stem,
            image_path=str(image_path),
            image_size=image_size,
            entities=tuple(entities),
            tables=tuple(table for _, table in sorted(tables.items())),
        )

    def load(self) -> DatasetSplits:
        self._skipped = []
        documents = self.parse_directory(self._root / "annotations")
        by_id = {doc.doc_id: doc for doc in documents}
        if len(by_id) != len(documents):
            counts = Counter(doc.doc_id for doc in documents)
            duplicated = sorted(doc_id for doc_id, count in counts.items() if count > 1)
            raise AnnotationError(f"documents annotated twice: {duplicated}", str(self._root / "annotations"))

        train_share, val_share, test_share = self._fractions
        rest, test_ids = seeded_partition(list(by_id), test_share, self._seed)
        held = val_share / (train_share + val_share) if train_share + val_share > 0 else 0.0
        train_ids, val_ids = seeded_partition(rest, held, self._seed + 1)

        splits = DatasetSplits(
            dataset=self.name,
            task=self.task,
            train=DatasetSplit(SplitName.TRAIN, self.limit([by_id[d] for d in train_ids])),
            validation=DatasetSplit(SplitName.VALIDATION, self.limit([by_id[d] for d in val_ids])),
            test=DatasetSplit(SplitName.TEST, self.limit([by_id[d] for d in test_ids])),
            skipped=tuple(self._skipped),
        )
        self._logger.info(
            "Loaded RVL-CDIP invoices",
            train=len(splits.train),
            validation=len(splits.validation),
            test=len(splits.test),
            skipped=len(self._skipped),
        )
        return splits


def load_rvlcdip_invoices(
    root_path: Path | str,
    fractions: tuple[float, float, float] = (0.7, 0.1, 0.2),
    seed: int = 42,
    workers: int = 1,
    limit_docs: int | None = None,
) -> DatasetSplits:
    """Load RVL-CDIP Invoices into seeded train, validation and test splits."""
    loader = RvlcdipInvoicesLoader(
        root_path, fractions=fractions, seed=seed, workers=workers, limit_docs=limit_docs
    )
    return loader.load()
