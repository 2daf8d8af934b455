"""Metric functions.

All functions are pure. Classification scores come from scikit-learn,
AUC-PR is average precision (precision summed over recall increments, ties
sharing one threshold), and table detection matches connected components of
the predicted table subgraph to ground-truth regions by IoU.
"""

from collections.abc import Sequence
from dataclasses import dataclass, field

import networkx as nx
import numpy as np
from sklearn.metrics import average_precision_score, precision_recall_fscore_support

from ..custom_types.errors import MetricInputError
from ..graph.document_graph import DocumentGraph
from ..graph.geometry import BBox, box_iou

TABLE_IOU_THRESHOLD = 0.5


@dataclass(frozen=True)
class ClassificationScores:
    """Per-class and micro-averaged classification scores."""

    classes: tuple[str, ...]
    precision: dict[str, float]
    recall: dict[str, float]
    f1: dict[str, float]
    support: dict[str, int]
    micro_f1: float
    zero_support: tuple[str, ...] = ()


def classification_f1(
    predictions: Sequence[int] | np.ndarray,
    labels: Sequence[int] | np.ndarray,
    classes: Sequence[str],
) -> ClassificationScores:
    """Per-class precision/recall/F1 and micro F1.

    Classes without any true sample score 0 and are listed in ``zero_support``.

    Args:
        predictions: Predicted class indices
        labels: True class indices
        classes: Class names, index-aligned with the integer labels

    Raises:
        MetricInputError: On empty input, length mismatch or out-of-range labels
    """
    predicted = np.asarray(predictions, dtype=np.int64).reshape(-1)
    truth = np.asarray(labels, dtype=np.int64).reshape(-1)
    if truth.size == 0:
        raise MetricInputError("classification_f1 needs at least one sample")
    if predicted.shape != truth.shape:
        raise MetricInputError(
            f"{predicted.size} predictions but {truth.size} labels"
        )
    count = len(classes)
    for name, values in (("label", truth), ("prediction", predicted)):
        if values.min() < 0 or values.max() >= count:
            raise MetricInputError(f"{name} outside the {count} classes")

    indices = list(range(count))
    precision, recall, f1, support = precision_recall_fscore_support(
        truth, predicted, labels=indices, average=None, zero_division=0
    )
    _, _, micro, _ = precision_recall_fscore_support(
        truth, predicted, labels=indices, average="micro", zero_division=0
    )
    names = tuple(classes)
    return ClassificationScores(
        classes=names,
        precision={n: float(v) for n, v in zip(names, precision, strict=True)},
        recall={n: float(v) for n, v in zip(names, recall, strict=True)},
        f1={n: float(v) for n, v in zip(names, f1, strict=True)},
        support={n: int(v) for n, v in zip(names, support, strict=True)},
        micro_f1=float(micro),
        zero_support=tuple(n for n, s in zip(names, support, strict=True) if s == 0),
    )


def auc_pr(scores: Sequence[float] | np.ndarray, labels: Sequence[int] | np.ndarray) -> float | None:
    """Area under the precision-recall curve of the positive class.

    Returns:
        The area, or None when ``labels`` hold a single class

    Raises:
        MetricInputError: On empty input or length mismatch
    """
    values = np.asarray(scores, dtype=np.float64).reshape(-1)
    truth = np.asarray(labels, dtype=np.int64).reshape(-1)
    if truth.size == 0:
        raise MetricInputError("auc_pr needs at least one sample")
    if values.shape != truth.shape:
        raise MetricInputError(f"{values.size} scores but {truth.size} labels")
    if np.unique(truth).size < 2:
        return None
    return float(average_precision_score(truth, values))


@dataclass(frozen=True)
class TableDetectionCounts:
    """Matching counts, summable over documents."""

    detections: int = 0
    ground_truth: int = 0
    correct: int = 0

    def __add__(self, other: "TableDetectionCounts") -> "TableDetectionCounts":
        return TableDetectionCounts(
            self.detections + other.detections,
            self.ground_truth + other.ground_truth,
            self.correct + other.correct,
        )

    @property
    def precision(self) -> float | None:
        """None when nothing was detected."""
        if self.detections == 0:
            return None
        return self.correct / self.detections

    @property
    def recall(self) -> float | None:
        """None when there is no ground-truth table."""
        if self.ground_truth == 0:
            return None
        return self.correct / self.ground_truth

    @property
    def f1(self) -> float:
        precision, recall = self.precision or 0.0, self.recall or 0.0
        if precision + recall == 0:
            return 0.0
        return 2 * precision * recall / (precision + recall)


def detect_tables(
    boxes: Sequence[BBox],
    edges: Sequence[tuple[int, int]],
    edge_labels: Sequence[int] | np.ndarray,
    min_size: int = 2,
) -> list[BBox]:
    """Union boxes of the connected components of the positive-edge subgraph.

    Edges are treated as undirected. Components smaller than ``min_size``
    nodes are not detections.
    """
    graph = nx.Graph()
    graph.add_nodes_from(range(len(boxes)))
    graph.add_edges_from(edge for edge, label in zip(edges, edge_labels, strict=True) if int(label) == 1)
    detections: list[BBox] = []
    for component in sorted(nx.connected_components(graph), key=min):
        if len(component) < min_size:
            continue
        members = sorted(component)
        union = boxes[members[0]]
        for index in members[1:]:
            union = union.union(boxes[index])
        detections.append(union)
    return detections


def match_tables(
    detections: Sequence[BBox],
    ground_truth: Sequence[BBox],
    iou_threshold: float = TABLE_IOU_THRESHOLD,
) -> TableDetectionCounts:
    """Greedy one-to-one matching by descending IoU.

    A detection is correct iff its matched IoU is strictly above the threshold.
    """
    candidates = [
        (box_iou(detection, truth), d, g)
        for d, detection in enumerate(detections)
        for g, truth in enumerate(ground_truth)
    ]
    candidates.sort(key=lambda item: (-item[0], item[1], item[2]))
    used_detections: set[int] = set()
    used_truth: set[int] = set()
    correct = 0
    for iou, d, g in candidates:
        if iou <= iou_threshold:
            break
        if d in used_detections or g in used_truth:
            continue
        used_detections.add(d)
        used_truth.add(g)
        correct += 1
    return TableDetectionCounts(len(detections), len(ground_truth), correct)


def table_detection(
    graph: DocumentGraph,
    edge_labels: Sequence[int] | np.ndarray,
    gt_tables: Sequence[BBox] | None = None,
    iou_threshold: float = TABLE_IOU_THRESHOLD,
    min_size: int = 2,
) -> TableDetectionCounts:
    """Table detection counts of one document.

    Args:
        graph: Document graph
        edge_labels: 1 for edges predicted as same-table, per graph edge
        gt_tables: Ground-truth table regions (defaults to the graph's own)
        iou_threshold: Strict IoU bound for a correct detection
        min_size: Smallest component counted as a detection

    Raises:
        MetricInputError: If the label count differs from the edge count
    """
    if len(edge_labels) != graph.num_edges:
        raise MetricInputError(f"{len(edge_labels)} edge labels for {graph.num_edges} edges")
    edges = [(edge.src, edge.dst) for edge in graph.edges]
    detections = detect_tables(graph.boxes, edges, edge_labels, min_size)
    truth = graph.tables if gt_tables is None else gt_tables
    return match_tables(detections, truth, iou_threshold)


@dataclass
class EvalReport:
    """Evaluation of one split.

    Link scores count directed edges. ``table_*`` fields are set for the
    table task only.
    """

    documents: int
    node_micro_f1: float
    node_f1: dict[str, float]
    node_support: dict[str, int]
    node_zero_support: list[str]
    link_f1_none: float
    link_f1_positive: float
    link_support: dict[str, int]
    auc_pr: float | None
    link_coverage: float | None = None
    table_precision: float | None = None
    table_recall: float | None = None
    table_f1: float | None = None
    per_document: list[dict[str, float | int | str | None]] = field(default_factory=list)

    def to_dict(self) -> dict[str, object]:
        return {
            "documents": self.documents,
            "node_micro_f1": self.node_micro_f1,
            "node_f1": dict(self.node_f1),
            "node_support": dict(self.node_support),
            "node_zero_support": list(self.node_zero_support),
            "link_f1_none": self.link_f1_none,
            "link_f1_positive": self.link_f1_positive,
            "link_support": dict(self.link_support),
            "auc_pr": self.auc_pr,
            "link_coverage": self.link_coverage,
            "table_precision": self.table_precision,
            "table_recall": self.table_recall,
            "table_f1": self.table_f1,
            "per_document": [dict(row) for row in self.per_document],
        }

    @property
    def selection_score(self) -> float:
        """Mean of node micro F1 and positive-link F1."""
        return (self.node_micro_f1 + self.link_f1_positive) / 2.0
