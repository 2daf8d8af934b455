"""Dataset ingestion package.

Loaders for the annotated corpora and the labelling step that turns an
annotated page into a labelled document graph.
"""

__all__ = [
    "EntityRecord",
    "DocumentRecord",
    "DatasetSplit",
    "DatasetSplits",
    "SkippedDocument",
    "FunsdLoader",
    "RvlcdipInvoicesLoader",
    "load_funsd",
    "load_rvlcdip_invoices",
    "make_loader",
    "attach_labels",
    "build_labeled_graph",
    "corpus_coverage",
    "ground_truth_pairs",
]

from pathlib import Path

import structlog

from ..custom_types.common import DatasetName
from ..interfaces.datasets import DatasetLoader
from .funsd import FunsdLoader, load_funsd
from .labels import attach_labels, build_labeled_graph, corpus_coverage, ground_truth_pairs
from .records import DatasetSplit, DatasetSplits, DocumentRecord, EntityRecord, SkippedDocument
from .rvlcdip import RvlcdipInvoicesLoader, load_rvlcdip_invoices


def make_loader(
    dataset: DatasetName | str,
    root: Path | str,
    val_fraction: float = 0.1,
    seed: int = 42,
    workers: int = 1,
    limit_docs: int | None = None,
    logger: structlog.typing.FilteringBoundLogger | None = None,
    fractions: tuple[float, float, float] = (0.7, 0.1, 0.2),
) -> DatasetLoader:
    """Return the loader of a dataset."""
    if DatasetName(dataset) == DatasetName.FUNSD:
        return FunsdLoader(
            root, val_fraction=val_fraction, seed=seed, workers=workers, limit_docs=limit_docs, logger=logger
        )
    return RvlcdipInvoicesLoader(
        root, fractions=fractions, seed=seed, workers=workers, limit_docs=limit_docs, logger=logger
    )
