"""Tests for classification, ranking and table-detection metrics."""

import numpy as np
import pytest

from docgraph_h8.custom_types.errors import MetricInputError
from docgraph_h8.evaluation import (
    TableDetectionCounts,
    auc_pr,
    classification_f1,
    detect_tables,
    match_tables,
    table_detection,
)
from docgraph_h8.graph import BBox, build_graph


def _average_precision_oracle(scores: np.ndarray, labels: np.ndarray) -> float:
    """Precision summed over recall increments, one step per distinct threshold."""
    positives = labels.sum()
    area = 0.0
    previous_recall = 0.0
    for threshold in sorted(set(scores.tolist()), reverse=True):
        predicted = scores >= threshold
        true_positives = (predicted & (labels == 1)).sum()
        precision = true_positives / predicted.sum()
        recall = true_positives / positives
        area += precision * (recall - previous_recall)
        previous_recall = recall
    return float(area)


class TestClassificationF1:
    """Per-class and micro F1."""

    def test_three_of_four_correct(self):
        """Micro F1 over single-label predictions equals accuracy."""
        scores = classification_f1([0, 1, 2, 3], [0, 1, 2, 2], ["question", "answer", "header", "other"])
        assert scores.micro_f1 == pytest.approx(0.75)
        assert scores.f1["question"] == 1.0
        assert scores.f1["header"] == pytest.approx(2 / 3)
        assert scores.support == {"question": 1, "answer": 1, "header": 2, "other": 0}

    def test_zero_support_class_scores_zero(self):
        scores = classification_f1([0, 0], [0, 0], ["none", "key_value"])
        assert scores.f1["key_value"] == 0.0
        assert scores.zero_support == ("key_value",)

    def test_empty_input(self):
        with pytest.raises(MetricInputError):
            classification_f1([], [], ["a", "b"])

    def test_length_mismatch(self):
        with pytest.raises(MetricInputError):
            classification_f1([0, 1], [0], ["a", "b"])

    def test_label_out_of_range(self):
        with pytest.raises(MetricInputError):
            classification_f1([0, 3], [0, 1], ["a", "b"])


class TestAucPr:
    """Average precision of the positive link class."""

    def test_perfect_ranking(self):
        assert auc_pr([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == pytest.approx(1.0)

    def test_constant_scores_give_prevalence(self):
        """Tied scores share one threshold, so the area is the positive rate."""
        assert auc_pr([0.5] * 8, [1, 0, 0, 1, 0, 0, 0, 0]) == pytest.approx(0.25)

    def test_single_class_is_undefined(self):
        assert auc_pr([0.1, 0.7], [0, 0]) is None
        assert auc_pr([0.1, 0.7], [1, 1]) is None

    def test_matches_oracle_with_ties(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            size = int(rng.integers(5, 60))
            labels = rng.integers(0, 2, size=size)
            labels[0], labels[1] = 0, 1
            # two decimals force plenty of ties
            scores = np.round(rng.uniform(size=size), 2)
            assert auc_pr(scores, labels) == pytest.approx(_average_precision_oracle(scores, labels))

    def test_empty_input(self):
        with pytest.raises(MetricInputError):
            auc_pr([], [])

    def test_strictly_increasing_transform_keeps_the_area(self):
        """Only the ranking of scores matters."""
        rng = np.random.default_rng(12)
        for _ in range(20):
            size = int(rng.integers(5, 40))
            labels = rng.integers(0, 2, size=size)
            labels[0], labels[1] = 0, 1
            scores = np.round(rng.uniform(size=size), 2)
            expected = auc_pr(scores, labels)
            assert auc_pr(3.0 * scores + 1.0, labels) == pytest.approx(expected)
            assert auc_pr(np.exp(scores), labels) == pytest.approx(expected)


class TestTableDetection:
    """Connected components matched to table regions."""

    def test_components_become_union_boxes(self):
        boxes = [BBox(0, 0, 10, 10), BBox(20, 0, 30, 10), BBox(50, 50, 60, 60), BBox(0, 40, 10, 50)]
        detections = detect_tables(boxes, [(0, 1), (1, 0), (2, 3), (3, 2)], [1, 1, 0, 0])
        assert detections == [BBox(0, 0, 30, 10)]

    def test_merged_tables_count_once(self):
        """Two tables predicted as one component give one wrong detection."""
        boxes = [BBox(0, 0, 10, 10), BBox(0, 20, 10, 30), BBox(0, 60, 10, 70), BBox(0, 80, 10, 90)]
        edges = [(0, 1), (1, 2), (2, 3)]
        detections = detect_tables(boxes, edges, [1, 1, 1])
        counts = match_tables(detections, [BBox(0, 0, 10, 30), BBox(0, 60, 10, 90)])
        assert counts == TableDetectionCounts(detections=1, ground_truth=2, correct=0)
        assert counts.precision == 0.0
        assert counts.recall == 0.0

    def test_iou_of_exactly_half_is_rejected(self):
        """The IoU bound is strict."""
        truth = [BBox(0, 0, 10, 10)]
        assert match_tables([BBox(0, 0, 10, 5)], truth).correct == 0
        assert match_tables([BBox(0, 0, 10, 5.1)], truth).correct == 1

    def test_one_to_one_matching(self):
        truth = [BBox(0, 0, 10, 10)]
        counts = match_tables([BBox(0, 0, 10, 10), BBox(0, 0, 10, 9)], truth)
        assert counts == TableDetectionCounts(detections=2, ground_truth=1, correct=1)
        assert counts.precision == 0.5
        assert counts.recall == 1.0
        assert counts.f1 == pytest.approx(2 / 3)

    def test_no_detections(self):
        counts = match_tables([], [BBox(0, 0, 10, 10)])
        assert counts.precision is None
        assert counts.recall == 0.0
        assert counts.f1 == 0.0

    def test_counts_add_up(self):
        total = TableDetectionCounts(2, 1, 1) + TableDetectionCounts(1, 2, 1)
        assert total == TableDetectionCounts(3, 3, 2)

    def test_graph_level(self):
        boxes = [BBox(10, 10, 40, 20), BBox(50, 10, 80, 20), BBox(10, 80, 40, 90)]
        graph = build_graph(boxes, (100, 100), k=2, tables=[BBox(10, 10, 80, 20)])
        labels = [int({e.src, e.dst} == {0, 1}) for e in graph.edges]
        assert table_detection(graph, labels) == TableDetectionCounts(1, 1, 1)
        with pytest.raises(MetricInputError):
            table_detection(graph, labels[:-1])

    def test_reordering_nodes_and_edges_changes_nothing(self):
        """Counts depend on the boxes and positive pairs, not on their order."""
        boxes = [
            BBox(10, 10, 40, 20), BBox(50, 10, 80, 20), BBox(10, 30, 40, 40),
            BBox(10, 80, 40, 90), BBox(50, 80, 80, 90), BBox(200, 200, 230, 210),
        ]
        truth = [BBox(10, 10, 80, 40), BBox(10, 80, 80, 90)]
        pairs = [(0, 1), (1, 2), (3, 4), (2, 0), (5, 0)]
        labels = [1, 1, 1, 1, 0]
        expected = match_tables(detect_tables(boxes, pairs, labels), truth)
        assert expected == TableDetectionCounts(2, 2, 2)

        rng = np.random.default_rng(13)
        for _ in range(10):
            perm = rng.permutation(len(boxes))
            new_position = np.argsort(perm)
            order = rng.permutation(len(pairs))
            shuffled_boxes = [boxes[old] for old in perm]
            shuffled_pairs = [(int(new_position[pairs[i][0]]), int(new_position[pairs[i][1]])) for i in order]
            shuffled_labels = [labels[i] for i in order]
            detections = detect_tables(shuffled_boxes, shuffled_pairs, shuffled_labels)
            assert sorted(detections, key=lambda b: b.as_list()) == sorted(
                detect_tables(boxes, pairs, labels), key=lambda b: b.as_list()
            )
            assert match_tables(detections, truth[::-1]) == expected

    def test_graph_level_ignores_box_order(self):
        boxes = [BBox(10, 10, 40, 20), BBox(50, 10, 80, 20), BBox(10, 80, 40, 90)]
        truth = [BBox(10, 10, 80, 20)]
        counts = []
        for order in ([0, 1, 2], [2, 0, 1], [1, 2, 0]):
            graph = build_graph([boxes[i] for i in order], (100, 100), k=2, tables=truth)
            labels = [int({order[e.src], order[e.dst]} == {0, 1}) for e in graph.edges]
            counts.append(table_detection(graph, labels))
        assert counts == [TableDetectionCounts(1, 1, 1)] * 3
