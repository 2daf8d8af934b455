"""Graph construction package.

Turns text-region boxes into attributed kNN graphs with the node and edge
geometry vectors consumed by both model stages.
"""

__all__ = [
    "BBox",
    "NodeGeomVector",
    "EdgeGeomVector",
    "DocumentGraph",
    "GraphNode",
    "GraphEdge",
    "LinkCoverage",
    "build_graph",
    "normalize_box",
    "regional_encoding",
    "relative_position",
    "edge_geometry",
    "knn_edges",
    "box_iou",
    "save_graph",
    "load_graph",
    "load_graph_dir",
    "graph_to_dict",
    "graph_from_dict",
]

from .document_graph import DocumentGraph, GraphEdge, GraphNode, LinkCoverage, build_graph
from .geometry import (
    BBox,
    EdgeGeomVector,
    NodeGeomVector,
    box_iou,
    edge_geometry,
    normalize_box,
    regional_encoding,
    relative_position,
)
from .knn import knn_edges
from .serialization import graph_from_dict, graph_to_dict, load_graph, load_graph_dir, save_graph
