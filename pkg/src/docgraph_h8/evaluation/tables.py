"""Ablation comparison tables in Markdown and JSON."""

from collections.abc import Mapping

from ..models.features import AblationConfig
from .metrics import EvalReport

FEATURE_COLUMNS = ("distance", "angle", "polar", "relpos", "bbox", "area", "regional")
MODALITY_COLUMNS = ("geometric", "visual", "bbox", "area", "regional")
SCORE_COLUMNS = ("node_micro_f1", "link_f1_none", "link_f1_positive", "auc_pr")


def _mark(enabled: bool) -> str:
    return "yes" if enabled else "no"


def _score(value: float | None) -> str:
    return "n/a" if value is None else f"{value:.4f}"


def switch_columns(table: str) -> tuple[str, ...]:
    return MODALITY_COLUMNS if table == "modalities" else FEATURE_COLUMNS


def comparison_rows(
    table: str, rows: Mapping[str, tuple[AblationConfig, EvalReport]]
) -> list[dict[str, object]]:
    """One JSON-ready row per ablation setting: switches then scores."""
    columns = switch_columns(table)
    result = []
    for name, (ablation, report) in rows.items():
        entry: dict[str, object] = {"row": name}
        entry.update({column: getattr(ablation, column) for column in columns})
        entry.update({column: getattr(report, column) for column in SCORE_COLUMNS})
        if report.table_f1 is not None:
            entry.update(
                table_precision=report.table_precision,
                table_recall=report.table_recall,
                table_f1=report.table_f1,
            )
        result.append(entry)
    return result


def comparison_markdown(table: str, rows: Mapping[str, tuple[AblationConfig, EvalReport]]) -> str:
    """Render an ablation table as GitHub Markdown."""
    columns = switch_columns(table)
    header = ["row", *columns, *SCORE_COLUMNS]
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    for entry in comparison_rows(table, rows):
        cells = [str(entry["row"])]
        cells += [_mark(bool(entry[column])) for column in columns]
        cells += [_score(entry[column]) for column in SCORE_COLUMNS]  # type: ignore[arg-type]
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"
