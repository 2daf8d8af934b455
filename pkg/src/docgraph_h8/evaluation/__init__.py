"""Evaluation package.

Metric functions, the split-level report and ablation comparison tables.
"""

__all__ = [
    "ClassificationScores",
    "EvalReport",
    "TableDetectionCounts",
    "classification_f1",
    "auc_pr",
    "detect_tables",
    "match_tables",
    "table_detection",
    "evaluate_split",
    "evaluate_predictions",
    "prediction_record",
    "report_from_records",
    "report_from_dump",
    "read_prediction_dump",
    "write_prediction_dump",
    "write_report",
    "comparison_rows",
    "comparison_markdown",
]

from .evaluate import (
    evaluate_predictions,
    evaluate_split,
    prediction_record,
    read_prediction_dump,
    report_from_dump,
    report_from_records,
    write_prediction_dump,
    write_report,
)
from .metrics import (
    ClassificationScores,
    EvalReport,
    TableDetectionCounts,
    auc_pr,
    classification_f1,
    detect_tables,
    match_tables,
    table_detection,
)
from .tables import comparison_markdown, comparison_rows
