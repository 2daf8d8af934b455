"""JSON serialization of document graphs.

One document per file. Floats are written with their shortest round-trip
representation, so loading a saved graph reproduces every vector exactly, and
key order is fixed so reruns produce byte-identical files.
"""

import json
from pathlib import Path

from ..custom_types.errors import AnnotationError
from ..custom_types.records import EdgeRecord, GraphRecord, NodeRecord
from .document_graph import DocumentGraph, GraphEdge, GraphNode, LinkCoverage
from .geometry import BBox, EdgeGeomVector, NodeGeomVector

FORMAT_VERSION = 1


def graph_to_dict(graph: DocumentGraph) -> GraphRecord:
    nodes: list[NodeRecord] = [
        {
            "id": node.node_id,
            "box": node.box.as_list(),
            "geom9": node.geom.as_list(),
            "label": node.entity_label,
            "text": node.text,
        }
        for node in graph.nodes
    ]
    edges: list[EdgeRecord] = [
        {
            "src": edge.src,
            "dst": edge.dst,
            "geom15": edge.geom.as_list(),
            "link_label": edge.link_label,
        }
        for edge in graph.edges
    ]
    coverage = graph.link_coverage
    return {
        "format_version": FORMAT_VERSION,
        "doc_id": graph.doc_id,
        "image_path": graph.image_path,
        "image_size": list(graph.image_size),
        "k": graph.k,
        "polar_bins": graph.polar_bins,
        "nodes": nodes,
        "edges": edges,
        "tables": [table.as_list() for table in graph.tables],
        "link_coverage": (
            None
            if coverage is None
            else {
                "covered_pairs": coverage.covered_pairs,
                "total_pairs": coverage.total_pairs,
                "ratio": coverage.ratio,
            }
        ),
    }


def graph_from_dict(record: GraphRecord) -> DocumentGraph:
    """Rebuild a graph from its record without recomputing any geometry.

    Raises:
        AnnotationError: If the record is of an unknown version or misses fields
    """
    version = record.get("format_version")
    if version != FORMAT_VERSION:
        raise AnnotationError(f"unsupported graph format version {version}")
    try:
        polar_bins = int(record["polar_bins"])
        nodes = tuple(
            GraphNode(
                node_id=int(item["id"]),
                box=BBox.from_list(item["box"]),
                geom=NodeGeomVector.from_list(item["geom9"]),
                entity_label=item["label"],
                text=item.get("text"),
            )
            for item in record["nodes"]
        )
        edges = tuple(
            GraphEdge(
                src=int(item["src"]),
                dst=int(item["dst"]),
                geom=EdgeGeomVector.from_list(item["geom15"], polar_bins),
                link_label=item["link_label"],
            )
            for item in record["edges"]
        )
        coverage_record = record.get("link_coverage")
        coverage = (
            None
            if coverage_record is None
            else LinkCoverage(
                int(coverage_record["covered_pairs"]), int(coverage_record["total_pairs"])
            )
        )
        width, height = record["image_size"]
        return DocumentGraph(
            image_size=(float(width), float(height)),
            nodes=nodes,
            edges=edges,
            k=int(record["k"]),
            polar_bins=polar_bins,
            doc_id=str(record.get("doc_id", "")),
            image_path=record.get("image_path"),
            tables=tuple(BBox.from_list(t) for t in record.get("tables", [])),
            link_coverage=coverage,
        )
    except (KeyError, TypeError, ValueError) as e:
        raise AnnotationError(f"malformed graph record: {e}") from e


def save_graph(graph: DocumentGraph, path: Path) -> Path:
    """Write a graph to ``path`` as JSON.

    Returns:
        The written path
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(graph_to_dict(graph), indent=1) + "\n", encoding="utf-8")
    return path


def load_graph(path: Path) -> DocumentGraph:
    """Read a graph written by :func:`save_graph`.

    Raises:
        AnnotationError: If the file is not a valid graph document
    """
    try:
        record = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise AnnotationError(f"cannot read graph: {e}", str(path)) from e
    try:
        return graph_from_dict(record)
    except AnnotationError as e:
        raise AnnotationError(str(e), str(path)) from e


def load_graph_dir(directory: Path) -> list[DocumentGraph]:
    """Load every ``*.json`` graph in a directory, sorted by file name."""
    return [load_graph(path) for path in sorted(directory.glob("*.json"))]
