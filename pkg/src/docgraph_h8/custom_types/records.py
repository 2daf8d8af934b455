"""Wire-format record types.

TypedDicts describing the JSON documents the pipeline reads and writes:
serialized graphs, annotation entries and per-edge prediction dumps.
"""

from typing import TypedDict


class NodeRecord(TypedDict):
    """Serialized graph node."""

    id: int
    box: list[float]
    geom9: list[float]
    label: str | None
    text: str | None


class EdgeRecord(TypedDict):
    """Serialized graph edge."""

    src: int
    dst: int
    geom15: list[float]
    link_label: str | None


class CoverageRecord(TypedDict):
    """Serialized link-coverage diagnostic."""

    covered_pairs: int
    total_pairs: int
    ratio: float | None


class GraphRecord(TypedDict, total=False):
    """Serialized document graph, one per file."""

    format_version: int
    doc_id: str
    image_path: str | None
    image_size: list[float]
    k: int
    polar_bins: int
    nodes: list[NodeRecord]
    edges: list[EdgeRecord]
    tables: list[list[float]]
    link_coverage: CoverageRecord | None


class EdgePredictionRecord(TypedDict):
    """One edge inside a prediction dump."""

    src: int
    dst: int
    probability: float
    predicted: int
    target: int | None


class DocumentPredictionRecord(TypedDict):
    """Predictions of one document inside a prediction dump."""

    doc_id: str
    node_predicted: list[int]
    node_target: list[int | None]
    edges: list[EdgePredictionRecord]
    tables: list[list[float]]
    boxes: list[list[float]]
    link_coverage: CoverageRecord | None


class SkippedDocument(TypedDict):
    """Entry of the skipped-documents report."""

    path: str
    reason: str
