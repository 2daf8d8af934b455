"""Attributed document graph.

A ``DocumentGraph`` is an immutable value: text-region nodes with their
geometry vectors and optional entity labels, plus directed kNN edges with
their geometry vectors and optional link labels.
"""

import dataclasses
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
import structlog

from ..custom_types.errors import GraphValidationError
from .geometry import (
    DEFAULT_POLAR_BINS,
    NODE_FEATURE_DIM,
    BBox,
    EdgeGeomVector,
    ImageSize,
    NodeGeomVector,
    edge_feature_dim,
    edge_geometry,
    normalize_box,
    normalized_centers,
)
from .knn import knn_edges

logger = structlog.get_logger(__name__)

DEFAULT_K = 10


@dataclass(frozen=True, slots=True)
class GraphNode:
    """One text region."""

    node_id: int
    box: BBox
    geom: NodeGeomVector
    entity_label: str | None = None
    text: str | None = None


@dataclass(frozen=True, slots=True)
class GraphEdge:
    """One directed edge."""

    src: int
    dst: int
    geom: EdgeGeomVector
    link_label: str | None = None


@dataclass(frozen=True, slots=True)
class LinkCoverage:
    """Fraction of ground-truth linked pairs that survive as graph edges."""

    covered_pairs: int
    total_pairs: int

    @property
    def ratio(self) -> float | None:
        """Coverage ratio, or None when the document has no linked pairs."""
        if self.total_pairs == 0:
            return None
        return self.covered_pairs / self.total_pairs

    def __add__(self, other: "LinkCoverage") -> "LinkCoverage":
        return LinkCoverage(
            self.covered_pairs + other.covered_pairs, self.total_pairs + other.total_pairs
        )


@dataclass(frozen=True)
class DocumentGraph:
    """Attributed graph of one document page."""

    image_size: ImageSize
    nodes: tuple[GraphNode, ...]
    edges: tuple[GraphEdge, ...]
    k: int
    polar_bins: int = DEFAULT_POLAR_BINS
    doc_id: str = ""
    image_path: str | None = None
    tables: tuple[BBox, ...] = ()
    link_coverage: LinkCoverage | None = None
    _cache: dict[str, np.ndarray] = field(
        default_factory=dict, init=False, repr=False, compare=False
    )

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def boxes(self) -> list[BBox]:
        return [node.box for node in self.nodes]

    def node_matrix(self) -> np.ndarray:
        """Node geometry vectors, shape (N, 9)."""
        if "nodes" not in self._cache:
            rows = [node.geom.as_list() for node in self.nodes]
            self._cache["nodes"] = np.asarray(rows, dtype=np.float64).reshape(-1, NODE_FEATURE_DIM)
        return self._cache["nodes"]

    def edge_index(self) -> np.ndarray:
        """Edge endpoints, shape (2, E)."""
        if "index" not in self._cache:
            pairs = [(edge.src, edge.dst) for edge in self.edges]
            self._cache["index"] = np.asarray(pairs, dtype=np.int64).reshape(-1, 2).T.copy()
        return self._cache["index"]

    def edge_matrix(self) -> np.ndarray:
        """Edge geometry vectors, shape (E, 2 + polar_bins + 7)."""
        if "edges" not in self._cache:
            rows = [edge.geom.as_list() for edge in self.edges]
            width = edge_feature_dim(self.polar_bins)
            self._cache["edges"] = np.asarray(rows, dtype=np.float64).reshape(-1, width)
        return self._cache["edges"]

    def out_degrees(self) -> list[int]:
        degrees = [0] * self.num_nodes
        for edge in self.edges:
            degrees[edge.src] += 1
        return degrees

    def with_labels(
        self,
        entity_labels: Sequence[str | None],
        link_labels: Sequence[str | None],
        link_coverage: LinkCoverage | None,
    ) -> "DocumentGraph":
        """Return a copy carrying the given node and edge labels."""
        if len(entity_labels) != self.num_nodes or len(link_labels) != self.num_edges:
            raise GraphValidationError("label count does not match graph size")
        nodes = tuple(
            dataclasses.replace(node, entity_label=label)
            for node, label in zip(self.nodes, entity_labels, strict=True)
        )
        edges = tuple(
            dataclasses.replace(edge, link_label=label)
            for edge, label in zip(self.edges, link_labels, strict=True)
        )
        return dataclasses.replace(self, nodes=nodes, edges=edges, link_coverage=link_coverage)


def build_graph(
    boxes: Sequence[BBox],
    image_size: ImageSize,
    k: int = DEFAULT_K,
    polar_bins: int = DEFAULT_POLAR_BINS,
    doc_id: str = "",
    image_path: str | None = None,
    texts: Sequence[str | None] | None = None,
    tables: Sequence[BBox] = (),
) -> DocumentGraph:
    """Build the attributed kNN graph of a page.

    Args:
        boxes: Text-region boxes in pixel coordinates; node order follows this order
        image_size: (width, height) of the page in pixels
        k: Neighbour count
        polar_bins: Number of angular sectors in edge vectors
        doc_id: Document identifier carried as metadata
        image_path: Page image carried as metadata
        texts: Optional per-box transcriptions, metadata only
        tables: Ground-truth table regions, metadata only

    Returns:
        The document graph

    Raises:
        GraphValidationError: If a box violates the invariants (names the node index)
    """
    geoms = [normalize_box(box, image_size, node_index=i) for i, box in enumerate(boxes)]
    texts = list(texts) if texts is not None else [None] * len(boxes)
    nodes = tuple(
        GraphNode(node_id=i, box=box, geom=geom, text=text)
        for i, (box, geom, text) in enumerate(zip(boxes, geoms, texts, strict=True))
    )

    pairs = knn_edges(normalized_centers(list(boxes), image_size), k)
    edges = tuple(
        GraphEdge(src, dst, edge_geometry(boxes[src], boxes[dst], image_size, polar_bins))
        for src, dst in pairs
    )
    logger.debug("Built document graph", doc_id=doc_id, nodes=len(nodes), edges=len(edges), k=k)
    return DocumentGraph(
        image_size=(float(image_size[0]), float(image_size[1])),
        nodes=nodes,
        edges=edges,
        k=k,
        polar_bins=polar_bins,
        doc_id=doc_id,
        image_path=image_path,
        tables=tuple(tables),
    )
