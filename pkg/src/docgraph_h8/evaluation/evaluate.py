"""Split evaluation and prediction dumps.

Every report is computed from per-document prediction records, so a report
rebuilt from a saved dump is identical to the one produced at evaluation time.
"""

import json
from collections.abc import Sequence
from pathlib import Path

import structlog

from ..concurrency.task_manager import map_blocking
from ..custom_types.common import (
    DatasetName,
    LinkLabel,
    LinkTask,
    entity_labels,
    link_task_for,
    positive_link_label,
)
from ..custom_types.errors import MetricInputError
from ..custom_types.records import DocumentPredictionRecord, EdgePredictionRecord
from ..graph.document_graph import DocumentGraph
from ..graph.geometry import BBox
from ..interfaces.visual import VisualBackend
from ..models.features import AblationConfig
from ..models.inputs import predict
from ..models.stage1 import StageOneEncoder
from ..models.stage2 import Prediction, StageTwoModel
from .metrics import (
    EvalReport,
    TableDetectionCounts,
    auc_pr,
    classification_f1,
    detect_tables,
    match_tables,
)

DUMP_FORMAT_VERSION = 1


def prediction_record(graph: DocumentGraph, prediction: Prediction, dataset: DatasetName) -> DocumentPredictionRecord:
    """Serializable predictions and targets of one document."""
    classes = {name: index for index, name in enumerate(entity_labels(dataset))}
    edges: list[EdgePredictionRecord] = [
        {
            "src": edge.src,
            "dst": edge.dst,
            "probability": float(probability),
            "predicted": int(predicted),
            "target": None if edge.link_label is None else int(edge.link_label != LinkLabel.NONE.value),
        }
        for edge, probability, predicted in zip(
            graph.edges, prediction.edge_probabilities, prediction.edge_labels, strict=True
        )
    ]
    coverage = graph.link_coverage
    return {
        "doc_id": graph.doc_id,
        "node_predicted": [int(v) for v in prediction.node_labels],
        "node_target": [
            None if node.entity_label is None else classes[node.entity_label] for node in graph.nodes
        ],
        "edges": edges,
        "tables": [table.as_list() for table in graph.tables],
        "boxes": [box.as_list() for box in graph.boxes],
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


def _document_row(record: DocumentPredictionRecord, table: TableDetectionCounts | None) -> dict[str, float | int | str | None]:
    node_pairs = [(p, t) for p, t in zip(record["node_predicted"], record["node_target"], strict=True) if t is not None]
    edge_pairs = [(e["predicted"], e["target"]) for e in record["edges"] if e["target"] is not None]
    row: dict[str, float | int | str | None] = {
        "doc_id": record["doc_id"],
        "nodes": len(record["node_predicted"]),
        "edges": len(record["edges"]),
        "node_accuracy": (sum(p == t for p, t in node_pairs) / len(node_pairs)) if node_pairs else None,
        "link_accuracy": (sum(p == t for p, t in edge_pairs) / len(edge_pairs)) if edge_pairs else None,
        "predicted_links": sum(e["predicted"] for e in record["edges"]),
        "true_links": sum(t for _, t in edge_pairs if t is not None),
    }
    if table is not None:
        row.update(
            table_detections=table.detections, table_ground_truth=table.ground_truth, table_correct=table.correct
        )
    return row


def report_from_records(records: Sequence[DocumentPredictionRecord], dataset: DatasetName) -> EvalReport:
    """Aggregate prediction records into a report.

    Raises:
        MetricInputError: If no record carries a labelled node
    """
    classes = entity_labels(dataset)
    task = link_task_for(dataset)
    link_classes = (LinkLabel.NONE.value, positive_link_label(task).value)

    node_predicted: list[int] = []
    node_target: list[int] = []
    edge_predicted: list[int] = []
    edge_target: list[int] = []
    edge_scores: list[float] = []
    covered = total = 0
    table_total = TableDetectionCounts()
    rows = []
    for record in records:
        for predicted, target in zip(record["node_predicted"], record["node_target"], strict=True):
            if target is not None:
                node_predicted.append(predicted)
                node_target.append(target)
        for edge in record["edges"]:
            if edge["target"] is not None:
                edge_predicted.append(edge["predicted"])
                edge_target.append(edge["target"])
                edge_scores.append(edge["probability"])
        if record["link_coverage"] is not None:
            covered += record["link_coverage"]["covered_pairs"]
            total += record["link_coverage"]["total_pairs"]

        table_counts = None
        if task == LinkTask.TABLE:
            boxes = [BBox.from_list(b) for b in record["boxes"]]
            pairs = [(e["src"], e["dst"]) for e in record["edges"]]
            detections = detect_tables(boxes, pairs, [e["predicted"] for e in record["edges"]])
            table_counts = match_tables(detections, [BBox.from_list(t) for t in record["tables"]])
            table_total = table_total + table_counts
        rows.append(_document_row(record, table_counts))

    if not node_target:
        raise MetricInputError("no labelled nodes to evaluate")
    nodes = classification_f1(node_predicted, node_target, classes)
    if edge_target:
        links = classification_f1(edge_predicted, edge_target, link_classes)
        link_f1 = links.f1
        link_support = links.support
        area = auc_pr(edge_scores, edge_target)
    else:
        link_f1 = {name: 0.0 for name in link_classes}
        link_support = {name: 0 for name in link_classes}
        area = None

    report = EvalReport(
        documents=len(records),
        node_micro_f1=nodes.micro_f1,
        node_f1=nodes.f1,
        node_support=nodes.support,
        node_zero_support=list(nodes.zero_support),
        link_f1_none=link_f1[link_classes[0]],
        link_f1_positive=link_f1[link_classes[1]],
        link_support=link_support,
        auc_pr=area,
        link_coverage=(covered / total) if total else None,
        per_document=rows,
    )
    if task == LinkTask.TABLE:
        report.table_precision = table_total.precision
        report.table_recall = table_total.recall if table_total.recall is not None else 0.0
        report.table_f1 = table_total.f1
    return report


def evaluate_predictions(
    graphs: Sequence[DocumentGraph], predictions: Sequence[Prediction], dataset: DatasetName
) -> tuple[EvalReport, list[DocumentPredictionRecord]]:
    """Score predictions already computed for ``graphs``."""
    records = [prediction_record(g, p, dataset) for g, p in zip(graphs, predictions, strict=True)]
    return report_from_records(records, dataset), records


def evaluate_split(
    graphs: Sequence[DocumentGraph],
    dataset: DatasetName,
    model: StageTwoModel,
    encoder: StageOneEncoder,
    backend: VisualBackend,
    ablation: AblationConfig | None = None,
    workers: int = 1,
    logger: structlog.typing.FilteringBoundLogger | None = None,
) -> tuple[EvalReport, list[DocumentPredictionRecord]]:
    """Predict every document of a split and score the predictions.

    Documents are predicted concurrently with ``workers`` threads; results are
    reduced in input order.
    """
    logger = logger or structlog.get_logger()

    def run(graph: DocumentGraph) -> Prediction:
        return predict(graph, dataset, model, encoder, backend, ablation)

    # modes are fixed before the worker threads share the modules
    modes = [(module, module.training) for module in (model, encoder, backend)]
    for module, _ in modes:
        module.eval()
    try:
        outcomes = map_blocking(run, list(graphs), workers=workers, logger=logger, context={"task": "evaluate"})
    finally:
        for module, training in modes:
            module.train(training)
    predictions: list[Prediction] = []
    for graph, outcome in zip(graphs, outcomes, strict=True):
        if outcome["error"] is not None:
            logger.error("Prediction failed", doc_id=graph.doc_id, exception=str(outcome["error"]))
            raise outcome["error"]
        assert outcome["result"] is not None
        predictions.append(outcome["result"])
    report, records = evaluate_predictions(graphs, predictions, dataset)
    logger.info(
        "Evaluated split",
        documents=report.documents,
        node_micro_f1=round(report.node_micro_f1, 4),
        link_f1_positive=round(report.link_f1_positive, 4),
        auc_pr=report.auc_pr,
    )
    return report, records


def write_prediction_dump(path: Path, records: Sequence[DocumentPredictionRecord], dataset: DatasetName) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {"format_version": DUMP_FORMAT_VERSION, "dataset": dataset.value, "documents": list(records)}
    path.write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")
    return path


def read_prediction_dump(path: Path) -> tuple[DatasetName, list[DocumentPredictionRecord]]:
    """Read a dump written by :func:`write_prediction_dump`.

    Raises:
        MetricInputError: If the file is not a prediction dump
    """
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
        if payload["format_version"] != DUMP_FORMAT_VERSION:
            raise MetricInputError(f"{path}: unsupported dump version {payload['format_version']}")
        return DatasetName(payload["dataset"]), list(payload["documents"])
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as e:
        raise MetricInputError(f"{path}: not a prediction dump ({e})") from e


def report_from_dump(path: Path) -> EvalReport:
    """Recompute a report from a saved prediction dump."""
    dataset, records = read_prediction_dump(path)
    return report_from_records(records, dataset)


def write_report(path: Path, report: EvalReport) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    return path

