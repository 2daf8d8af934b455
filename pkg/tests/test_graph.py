"""Tests for kNN construction, document graphs and their serialization."""

import json

import numpy as np
import pytest

from docgraph_h8.custom_types.errors import AnnotationError, ConfigurationError
from docgraph_h8.graph import (
    BBox,
    build_graph,
    edge_geometry,
    graph_from_dict,
    graph_to_dict,
    knn_edges,
    load_graph,
    normalize_box,
    save_graph,
)


def _oracle_edges(points: np.ndarray, k: int) -> list[tuple[int, int]]:
    edges = []
    for src in range(len(points)):
        ranked = sorted(
            (j for j in range(len(points)) if j != src),
            key=lambda j: (int(((points[j] - points[src]) ** 2).sum()), j),
        )
        edges.extend((src, dst) for dst in ranked[:k])
    return edges


def _layout(seed: int, count: int) -> list[BBox]:
    rng = np.random.default_rng(seed)
    boxes = []
    for _ in range(count):
        x0, y0 = rng.uniform(0, 380, size=2)
        w, h = rng.uniform(4, 20, size=2)
        boxes.append(BBox(float(x0), float(y0), float(x0 + w), float(y0 + h)))
    return boxes


class TestKnnEdges:
    """Directed kNN edges."""

    def test_collinear_tie_breaks_to_lower_id(self):
        """The middle node's equidistant neighbours resolve to the lower id."""
        centers = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
        assert knn_edges(centers, k=1) == [(0, 1), (1, 0), (2, 1)]

    def test_fewer_than_two_nodes(self):
        """A single node yields no edges."""
        assert knn_edges(np.array([[0.5, 0.5]]), k=10) == []
        assert knn_edges(np.zeros((0, 2)), k=10) == []

    def test_out_degree_is_min_k_n_minus_one(self):
        """Every node gets exactly min(k, N - 1) out-edges."""
        centers = np.random.default_rng(0).uniform(size=(6, 2))
        edges = knn_edges(centers, k=10)
        assert len(edges) == 6 * 5
        assert all(sum(1 for s, _ in edges if s == node) == 5 for node in range(6))

    def test_invalid_k(self):
        """k must be positive."""
        with pytest.raises(ConfigurationError):
            knn_edges(np.zeros((3, 2)), k=0)

    def test_matches_brute_force(self):
        """Random layouts agree with a sort-based oracle, ties included."""
        rng = np.random.default_rng(42)
        for trial in range(50):
            count = int(rng.integers(2, 40))
            # integer grid: exact squared distances and plenty of ties
            points = rng.integers(0, 6, size=(count, 2)).astype(np.float64)
            k = int(rng.integers(1, 12))
            assert knn_edges(points, k) == _oracle_edges(points, min(k, count - 1)), trial


class TestBuildGraph:
    """Attributed document graphs."""

    def test_shapes(self):
        """Node, edge and index matrices have the documented widths."""
        graph = build_graph(_layout(1, 12), (400, 400), k=4, doc_id="page")
        assert graph.node_matrix().shape == (12, 9)
        assert graph.edge_matrix().shape == (48, 15)
        assert graph.edge_index().shape == (2, 48)
        assert graph.out_degrees() == [4] * 12

    def test_single_node_has_no_edges(self):
        """N < 2 builds an edgeless graph instead of failing."""
        graph = build_graph([BBox(10, 10, 50, 30)], (100, 100))
        assert graph.num_nodes == 1
        assert graph.num_edges == 0
        assert graph.edge_matrix().shape == (0, 15)

    def test_vectors_match_per_pair_recomputation(self):
        """Every stored vector equals its direct recomputation."""
        boxes = _layout(7, 20)
        graph = build_graph(boxes, (400, 400), k=5)
        for node, box in zip(graph.nodes, boxes, strict=True):
            assert node.geom == normalize_box(box, (400, 400))
        for edge in graph.edges:
            assert edge.geom == edge_geometry(boxes[edge.src], boxes[edge.dst], (400, 400))

    def test_invalid_box_names_node(self):
        """A degenerate box reports its node index."""
        from docgraph_h8.custom_types.errors import GraphValidationError

        with pytest.raises(GraphValidationError) as excinfo:
            build_graph([BBox(0, 0, 10, 10), BBox(5, 5, 5, 9)], (100, 100))
        assert excinfo.value.node_index == 1

    def test_deterministic(self):
        """Identical inputs give identical graphs."""
        boxes = _layout(3, 15)
        assert build_graph(boxes, (400, 400), k=3) == build_graph(boxes, (400, 400), k=3)

    @pytest.mark.parametrize("factor", [0.5, 3.0])
    def test_uniform_scaling_leaves_features_unchanged(self, factor):
        """Scaling the page and every box together changes no node or edge vector."""
        boxes = _layout(4, 18)
        scaled = [BBox(b.xmin * factor, b.ymin * factor, b.xmax * factor, b.ymax * factor) for b in boxes]
        original = build_graph(boxes, (400, 400), k=5)
        resized = build_graph(scaled, (400 * factor, 400 * factor), k=5)
        assert [(e.src, e.dst) for e in resized.edges] == [(e.src, e.dst) for e in original.edges]
        np.testing.assert_allclose(resized.node_matrix(), original.node_matrix(), rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(resized.edge_matrix(), original.edge_matrix(), rtol=1e-12, atol=1e-12)


class TestSerialization:
    """JSON graph files."""

    def test_round_trip_is_exact(self, tmp_path):
        """Loading a saved graph reproduces every vector bit for bit."""
        graph = build_graph(_layout(5, 10), (400, 300), k=3, doc_id="doc", tables=[BBox(0, 0, 50, 50)])
        loaded = load_graph(save_graph(graph, tmp_path / "doc.json"))
        assert loaded == graph
        np.testing.assert_array_equal(loaded.edge_matrix(), graph.edge_matrix())

    def test_rerun_is_byte_identical(self, tmp_path):
        """Saving the same graph twice writes identical bytes."""
        boxes = _layout(9, 8)
        first = save_graph(build_graph(boxes, (400, 400), k=3), tmp_path / "a.json")
        second = save_graph(build_graph(boxes, (400, 400), k=3), tmp_path / "b.json")
        assert first.read_bytes() == second.read_bytes()

    def test_unknown_version(self):
        """Records of another format version are rejected."""
        record = graph_to_dict(build_graph(_layout(2, 3), (400, 400), k=2))
        record["format_version"] = 99
        with pytest.raises(AnnotationError):
            graph_from_dict(record)

    def test_unreadable_file_names_path(self, tmp_path):
        """Broken JSON is reported with its path."""
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(AnnotationError) as excinfo:
            load_graph(path)
        assert str(path) in str(excinfo.value)

    def test_written_keys_are_ordered(self, tmp_path):
        """Files start with the format version."""
        path = save_graph(build_graph(_layout(4, 3), (400, 400), k=2), tmp_path / "g.json")
        assert next(iter(json.loads(path.read_text()))) == "format_version"
