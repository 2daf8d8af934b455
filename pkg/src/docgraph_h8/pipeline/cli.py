"""Command-line entry point.

Output directory layout::

    <out>/config.yaml
    <out>/graphs/<split>/<doc_id>.json, coverage.json, skipped.json
    <out>/stage1/stage1.pt, stage1_last.pt
    <out>/stage2/stage2.pt, stage2_last.pt
    <out>/eval/<split>/report.json, predictions.json
    <out>/ablate/<table>/<row>/..., comparison.md, comparison.json
    <out>/render/<doc_id>.png
"""

import dataclasses
import json
import sys
from collections.abc import Callable
from pathlib import Path
from typing import Any

import click
import structlog

from ..concurrency.task_manager import map_blocking
from ..custom_types.common import DatasetName, SplitName
from ..custom_types.errors import DocGraphError, MissingPrerequisiteError, UnknownDocumentError, describe
from ..evaluation.evaluate import evaluate_split, prediction_record, write_prediction_dump, write_report
from ..evaluation.metrics import EvalReport
from ..evaluation.tables import comparison_markdown, comparison_rows
from ..graph.document_graph import DocumentGraph
from ..graph.serialization import load_graph_dir, save_graph
from ..ingestion import build_labeled_graph, corpus_coverage, make_loader
from ..ingestion.records import DocumentRecord
from ..models.features import AblationConfig, ablation_rows
from ..models.inputs import predict
from ..training.checkpoint import inspect_checkpoint
from ..training.stage1_trainer import STAGE1_FILE, train_stage1
from ..training.stage2_trainer import STAGE2_FILE, load_stage2, train_stage2
from .config import CONFIG_FILE, ExperimentConfig, dump_config, load_config
from .logging import configure_logging
from .render import render_prediction

SPLITS = [split.value for split in SplitName]


def experiment_options(func: Callable[..., Any]) -> Callable[..., Any]:
    """Options shared by every command that runs part of an experiment."""
    options = [
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
                     help="Experiment YAML file; defaults apply when omitted."),
        click.option("--dataset", type=click.Choice([d.value for d in DatasetName]), default=None,
                     help="Dataset to use (overrides the config)."),
        click.option("--seed", type=int, default=None, help="Experiment seed (overrides the config)."),
        click.option("--workers", type=click.IntRange(min=1), default=None,
                     help="Documents processed concurrently."),
        click.option("--limit-docs", type=click.IntRange(min=1), default=None,
                     help="Keep at most this many documents per split."),
        click.option("--out", type=click.Path(file_okay=False), default=None,
                     help="Output directory (overrides the config)."),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def resolve_config(
    config_path: Path | None,
    dataset: str | None,
    seed: int | None,
    workers: int | None,
    limit_docs: int | None,
    out: str | None,
) -> ExperimentConfig:
    """Effective config: file, then flags, then the data-root environment variable."""
    config = load_config(config_path).with_overrides(
        dataset=dataset, seed=seed, workers=workers, limit_docs=limit_docs, out_dir=out
    )
    config = config.with_environment()
    config.validate()
    return config


def _persist(config: ExperimentConfig, directory: Path) -> None:
    dump_config(config, directory / CONFIG_FILE)


def _graph_dir(config: ExperimentConfig, split: SplitName | str) -> Path:
    return Path(config.out_dir) / "graphs" / SplitName(split).value


def load_split_graphs(config: ExperimentConfig, split: SplitName | str) -> list[DocumentGraph]:
    """Graphs written by ``build-graphs`` for one split.

    Raises:
        MissingPrerequisiteError: If the split was never built
    """
    directory = _graph_dir(config, split)
    if not directory.is_dir():
        raise MissingPrerequisiteError(f"no graphs under {directory}; run build-graphs first")
    return load_graph_dir(directory)


def build_graphs(
    config: ExperimentConfig, logger: structlog.typing.FilteringBoundLogger | None = None
) -> dict[str, Any]:
    """Build, label and save the graphs of every split.

    Per-document failures are logged individually; the first one is raised
    after all documents were attempted.

    Returns:
        Summary with per-split counts, coverage and skipped documents
    """
    logger = logger or structlog.get_logger()
    loader = make_loader(
        config.dataset,
        config.data.root,
        val_fraction=config.data.val_fraction,
        seed=config.seed,
        workers=config.data.workers,
        limit_docs=config.data.limit_docs,
        logger=logger,
        fractions=config.data.rvlcdip_fractions,
    )
    splits = loader.load()

    def build(document: DocumentRecord) -> DocumentGraph:
        return build_labeled_graph(document, splits.task, k=config.graph.k, polar_bins=config.graph.polar_bins)

    counts: dict[str, int] = {}
    all_graphs: list[DocumentGraph] = []
    failures: list[BaseException] = []
    for split in SplitName:
        documents = list(splits.get(split).documents)
        outcomes = map_blocking(
            build, documents, workers=config.data.workers, logger=logger, context={"task": "build_graphs"}
        )
        directory = _graph_dir(config, split)
        directory.mkdir(parents=True, exist_ok=True)
        for stale in directory.glob("*.json"):
            stale.unlink()
        graphs = []
        for document, outcome in zip(documents, outcomes, strict=True):
            if outcome["error"] is not None:
                logger.error("Graph construction failed", doc_id=document.doc_id, **describe(outcome["error"]))
                failures.append(outcome["error"])
                continue
            assert outcome["result"] is not None
            graphs.append(outcome["result"])
            save_graph(outcome["result"], directory / f"{document.doc_id}.json")
        counts[split.value] = len(graphs)
        all_graphs.extend(graphs)

    coverage = corpus_coverage(all_graphs)
    graphs_root = Path(config.out_dir) / "graphs"
    summary = {
        "dataset": config.dataset.value,
        "graphs": counts,
        "link_coverage": {
            "covered_pairs": coverage.covered_pairs,
            "total_pairs": coverage.total_pairs,
            "ratio": coverage.ratio,
        },
        "skipped": len(splits.skipped),
    }
    (graphs_root / "coverage.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    (graphs_root / "skipped.json").write_text(
        json.dumps(list(splits.skipped), indent=2) + "\n", encoding="utf-8"
    )
    logger.info("Built graphs", **counts, link_coverage=coverage.ratio, skipped=len(splits.skipped))
    if failures:
        raise failures[0]
    return summary


def run_stage1(
    config: ExperimentConfig,
    out_dir: Path,
    ablation: AblationConfig | None = None,
    logger: structlog.typing.FilteringBoundLogger | None = None,
) -> Path:
    result = train_stage1(
        load_split_graphs(config, SplitName.TRAIN),
        load_split_graphs(config, SplitName.VALIDATION),
        config.dataset,
        config.stage1,
        ablation or config.ablation,
        out_dir=out_dir,
        dtype=config.torch_dtype,
        logger=logger,
    )
    return result.checkpoint


def run_stage2(
    config: ExperimentConfig,
    stage1_path: Path,
    out_dir: Path,
    ablation: AblationConfig | None = None,
    logger: structlog.typing.FilteringBoundLogger | None = None,
) -> Path:
    result = train_stage2(
        load_split_graphs(config, SplitName.TRAIN),
        load_split_graphs(config, SplitName.VALIDATION),
        config.dataset,
        stage1_path,
        config.stage2,
        config.visual,
        ablation or config.ablation,
        out_dir=out_dir,
        dtype=config.torch_dtype,
        workers=config.data.workers,
        logger=logger,
    )
    return result.checkpoint


def _require(path: Path, what: str) -> Path:
    if not path.exists():
        raise MissingPrerequisiteError(f"{what} not found: {path}")
    return path


def evaluate_checkpoint(
    config: ExperimentConfig,
    checkpoint: Path,
    split: SplitName,
    out_dir: Path,
    logger: structlog.typing.FilteringBoundLogger | None = None,
) -> EvalReport:
    """Score a Stage-II checkpoint on one split and write the report and prediction dump."""
    logger = logger or structlog.get_logger()
    trained = load_stage2(_require(checkpoint, "stage 2 checkpoint"))
    if trained.dataset != config.dataset:
        logger.warning(
            "Checkpoint dataset differs from the config", checkpoint=trained.dataset.value, config=config.dataset.value
        )
    report, records = evaluate_split(
        load_split_graphs(config, split),
        trained.dataset,
        trained.model,
        trained.encoder,
        trained.backend,
        trained.ablation,
        workers=config.data.workers,
        logger=logger,
    )
    write_report(out_dir / "report.json", report)
    write_prediction_dump(out_dir / "predictions.json", records, trained.dataset)
    return report


def _headline(report: EvalReport) -> dict[str, Any]:
    return {k: v for k, v in report.to_dict().items() if k != "per_document"}


@click.group()
@click.option("--log-level", default="INFO", show_default=True, help="Minimum log level.")
@click.option("--json-logs", is_flag=True, help="Emit JSON log lines.")
def cli(log_level: str, json_logs: bool) -> None:
    """Language-agnostic document understanding on kNN layout graphs."""
    configure_logging(log_level, json_logs)


@cli.command("build-graphs")
@experiment_options
def build_graphs_command(**options: Any) -> None:
    """Build one labelled graph file per document and report link coverage."""
    config = resolve_config(**options)
    _persist(config, Path(config.out_dir))
    summary = build_graphs(config)
    click.echo(json.dumps(summary))


@cli.command("train")
@experiment_options
@click.option("--stage", type=click.IntRange(1, 2), required=True, help="Training stage.")
@click.option("--checkpoint", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Stage 1 checkpoint used by stage 2 (default: <out>/stage1/stage1.pt).")
def train_command(stage: int, checkpoint: Path | None, **options: Any) -> None:
    """Train stage 1 (contrastive encoder) or stage 2 (attention model)."""
    config = resolve_config(**options)
    out = Path(config.out_dir)
    _persist(config, out)
    if stage == 1:
        path = run_stage1(config, out / "stage1")
    else:
        stage1_path = _require(checkpoint or out / "stage1" / STAGE1_FILE, "stage 1 checkpoint")
        path = run_stage2(config, stage1_path, out / "stage2")
    click.echo(str(path))


@cli.command("evaluate")
@experiment_options
@click.option("--split", type=click.Choice(SPLITS), default=SplitName.TEST.value, show_default=True)
@click.option("--checkpoint", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Stage 2 checkpoint (default: <out>/stage2/stage2.pt).")
def evaluate_command(split: str, checkpoint: Path | None, **options: Any) -> None:
    """Score a trained model on a split; writes report.json and predictions.json."""
    config = resolve_config(**options)
    out = Path(config.out_dir)
    _persist(config, out)
    report = evaluate_checkpoint(
        config, checkpoint or out / "stage2" / STAGE2_FILE, SplitName(split), out / "eval" / split
    )
    click.echo(json.dumps(_headline(report)))


@cli.command("ablate")
@experiment_options
@click.option("--table", "table", type=click.Choice(["features", "node-edge", "modalities"]), required=True)
@click.option("--split", type=click.Choice(SPLITS), default=SplitName.TEST.value, show_default=True)
def ablate_command(table: str, split: str, **options: Any) -> None:
    """Train and evaluate every row of an ablation table and write the comparison."""
    config = resolve_config(**options)
    logger = structlog.get_logger()
    table_dir = Path(config.out_dir) / "ablate" / table
    _persist(config, Path(config.out_dir))

    stage1_by_features: dict[tuple[str, ...], Path] = {}
    results: dict[str, tuple[AblationConfig, EvalReport]] = {}
    for name, ablation in ablation_rows(table).items():
        row_dir = table_dir / name
        row_config = dataclasses.replace(config, ablation=ablation)
        _persist(row_config, row_dir)
        features = tuple(sorted(set(ablation.disabled()) - {"geometric", "visual"}))
        logger.info("Ablation row", table=table, row=name, disabled=ablation.disabled())
        if features not in stage1_by_features:
            stage1_by_features[features] = run_stage1(row_config, row_dir / "stage1", ablation, logger)
        stage2_path = run_stage2(row_config, stage1_by_features[features], row_dir / "stage2", ablation, logger)
        report = evaluate_checkpoint(row_config, stage2_path, SplitName(split), row_dir / "eval" / split, logger)
        results[name] = (ablation, report)

    markdown = comparison_markdown(table, results)
    (table_dir / "comparison.md").write_text(markdown, encoding="utf-8")
    (table_dir / "comparison.json").write_text(
        json.dumps(comparison_rows(table, results), indent=2) + "\n", encoding="utf-8"
    )
    click.echo(markdown, nl=False)


@cli.command("render")
@experiment_options
@click.option("--doc-id", required=True, help="Document to render.")
@click.option("--split", type=click.Choice(SPLITS), default=SplitName.TEST.value, show_default=True)
@click.option("--checkpoint", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Stage 2 checkpoint (default: <out>/stage2/stage2.pt).")
@click.option("--image-out", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Output image (default: <out>/render/<doc_id>.png).")
def render_command(doc_id: str, split: str, checkpoint: Path | None, image_out: Path | None, **options: Any) -> None:
    """Draw predicted classes and links of one document next to its ground truth."""
    config = resolve_config(**options)
    out = Path(config.out_dir)
    _persist(config, out)
    graphs = {graph.doc_id: graph for graph in load_split_graphs(config, split)}
    if doc_id not in graphs:
        raise UnknownDocumentError(doc_id, sorted(graphs))
    trained = load_stage2(_require(checkpoint or out / "stage2" / STAGE2_FILE, "stage 2 checkpoint"))
    graph = graphs[doc_id]
    prediction = predict(graph, trained.dataset, trained.model, trained.encoder, trained.backend, trained.ablation)
    record = prediction_record(graph, prediction, trained.dataset)
    result = render_prediction(graph, record, trained.dataset, image_out or out / "render" / f"{doc_id}.png")
    click.echo(str(result.path))


@cli.command("inspect-checkpoint")
@click.option("--checkpoint", type=click.Path(dir_okay=False, path_type=Path), required=True)
def inspect_checkpoint_command(checkpoint: Path) -> None:
    """Print format version, kind, config, provenance and loss history of a checkpoint."""
    click.echo(json.dumps(inspect_checkpoint(_require(checkpoint, "checkpoint")), indent=2, default=str))


def run(args: list[str] | None = None) -> int:
    """Run the command line and return the process exit code.

    Pipeline errors are reported as one ``error: <category>: <message>`` line.
    """
    try:
        result = cli.main(args=args, prog_name="docgraph", standalone_mode=False)
    except DocGraphError as e:
        message = " ".join(str(e).split())
        click.echo(f"error: {e.category}: {message}", err=True)
        return e.exit_code
    except click.ClickException as e:
        click.echo(f"error: usage: {' '.join(e.format_message().split())}", err=True)
        return e.exit_code
    except click.exceptions.Abort:
        click.echo("error: aborted: interrupted", err=True)
        return 1
    return result if isinstance(result, int) else 0


def main() -> None:
    sys.exit(run())
