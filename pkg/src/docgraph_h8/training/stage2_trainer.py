"""Joint training of the attention model and the visual encoder."""

import dataclasses
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import structlog
import torch

from ..custom_types.common import DatasetName, entity_labels
from ..custom_types.errors import MissingPrerequisiteError
from ..evaluation.evaluate import evaluate_split
from ..evaluation.metrics import EvalReport
from ..graph.document_graph import DocumentGraph
from ..interfaces.visual import VisualBackend
from ..models.features import AblationConfig, collate, graph_to_data
from ..models.inputs import geometric_embeddings, visual_embeddings
from ..models.stage1 import StageOneConfig, StageOneEncoder
from ..models.stage2 import StageTwoConfig, StageTwoModel, inverse_frequency_weights, joint_loss
from ..models.visual import VisualEncoderConfig, make_visual_backend
from .checkpoint import STAGE2_KIND, file_sha256, load_checkpoint, save_checkpoint
from .common import batch_order, ensure_finite, resident_memory_mb
from .seeding import seed_everything
from .stage1_trainer import load_stage1

STAGE2_FILE = "stage2.pt"
STAGE2_LAST_FILE = "stage2_last.pt"


@dataclass
class StageTwoResult:
    """Outcome of a Stage-II run."""

    model: StageTwoModel
    backend: VisualBackend
    encoder: StageOneEncoder
    ablation: AblationConfig
    checkpoint: Path
    best_epoch: int | None
    best_score: float | None
    loss_history: list[float] = field(default_factory=list)
    validation_history: list[dict[str, Any]] = field(default_factory=list)


@dataclass
class TrainedStageTwo:
    """Everything needed for inference, rebuilt from one checkpoint."""

    dataset: DatasetName
    model: StageTwoModel
    backend: VisualBackend
    encoder: StageOneEncoder
    ablation: AblationConfig
    metadata: dict[str, Any]


def _metadata(
    dataset: DatasetName,
    config: StageTwoConfig,
    visual_config: VisualEncoderConfig,
    ablation: AblationConfig,
    encoder: StageOneEncoder,
    stage1_path: Path,
    stage1_sha: str,
    epoch: int,
    loss_history: list[float],
    validation_history: list[dict[str, Any]],
    best_epoch: int | None,
    best_score: float | None,
) -> dict[str, Any]:
    return {
        "dataset": str(dataset.value),
        "config": asdict(config),
        "visual": asdict(visual_config),
        "visual_weights_id": visual_config.pretrained_weights,
        "ablation": ablation.as_dict(),
        "seed": config.seed,
        "epoch": epoch,
        "loss_history": list(loss_history),
        "validation_history": [dict(row) for row in validation_history],
        "best_epoch": best_epoch,
        "best_score": best_score,
        "stage1": {
            "path": str(stage1_path),
            "sha256": stage1_sha,
            "config": asdict(encoder.config),
            "polar_bins": encoder.polar_bins,
        },
    }


def _report_row(epoch: int, report: EvalReport) -> dict[str, Any]:
    return {
        "epoch": epoch,
        "node_micro_f1": report.node_micro_f1,
        "link_f1_none": report.link_f1_none,
        "link_f1_positive": report.link_f1_positive,
        "auc_pr": report.auc_pr,
        "score": report.selection_score,
    }


def train_stage2(
    train_graphs: Sequence[DocumentGraph],
    validation_graphs: Sequence[DocumentGraph],
    dataset: DatasetName,
    stage1_path: Path,
    config: StageTwoConfig | None = None,
    visual_config: VisualEncoderConfig | None = None,
    ablation: AblationConfig | None = None,
    out_dir: Path | None = None,
    resume: bool = True,
    dtype: torch.dtype = torch.float32,
    workers: int = 1,
    logger: structlog.typing.FilteringBoundLogger | None = None,
) -> StageTwoResult:
    """Minimise the joint entity + link loss over the training graphs.

    Stage-I parameters stay frozen; the visual encoder is fine-tuned when its
    config is trainable. After every epoch the validation split (or the
    training split when validation is empty) is scored and the best model by
    mean(node micro F1, positive-link F1) is kept.

    Args:
        train_graphs: Labelled training graphs
        validation_graphs: Labelled validation graphs
        dataset: Dataset whose label set the graphs use
        stage1_path: Trained Stage-I checkpoint
        config: Stage hyperparameters
        visual_config: Visual encoder settings
        ablation: Modality switches; feature switches come from the Stage-I checkpoint
        out_dir: Directory for ``stage2.pt`` and ``stage2_last.pt``; nothing is written when None
        resume: Continue from ``stage2_last.pt`` when it exists
        dtype: Parameter dtype
        workers: Documents scored concurrently during validation
        logger: Logger instance for recording events

    Raises:
        MissingPrerequisiteError: If the Stage-I checkpoint or the training graphs are missing
        NonFiniteLossError: If a batch loss is NaN or infinite
    """
    config = config or StageTwoConfig()
    visual_config = visual_config or VisualEncoderConfig()
    requested = ablation or AblationConfig()
    logger = logger or structlog.get_logger()
    if not stage1_path.exists():
        raise MissingPrerequisiteError(f"stage 1 checkpoint not found: {stage1_path}")
    if not train_graphs:
        raise MissingPrerequisiteError("stage 2 needs at least one training graph")

    encoder, stage1_meta = load_stage1(stage1_path)
    encoder = encoder.to(dtype).requires_grad_(False)
    ablation = dataclasses.replace(
        AblationConfig(**stage1_meta["ablation"]),
        geometric=requested.geometric,
        visual=requested.visual,
    )
    stage1_sha = file_sha256(stage1_path)

    seed_everything(config.seed)
    backend = make_visual_backend(visual_config, enabled=ablation.visual).to(dtype)
    model = StageTwoModel(
        num_classes=len(entity_labels(dataset)),
        config=config,
        geometric_dim=encoder.embed_dim,
        visual_dim=visual_config.embed_dim,
        polar_bins=encoder.polar_bins,
    ).to(dtype)
    trainable = [p for p in (*model.parameters(), *backend.parameters()) if p.requires_grad]
    optimizer = torch.optim.Adam(trainable, lr=config.learning_rate, weight_decay=config.weight_decay)

    items = [graph_to_data(g, dataset, ablation, dtype=dtype) for g in train_graphs]
    geometric = [geometric_embeddings(data, encoder, ablation) for data in items]
    link_weights = None
    if config.link_class_weighting == "inverse_frequency":
        link_weights = inverse_frequency_weights(torch.cat([d.edge_y for d in items])).to(dtype)
        logger.info("Link class weights", weights=[round(float(w), 4) for w in link_weights])

    scoring_graphs = list(validation_graphs) or list(train_graphs)
    start_epoch = 0
    loss_history: list[float] = []
    validation_history: list[dict[str, Any]] = []
    best_epoch: int | None = None
    best_score: float | None = None
    last_path = out_dir / STAGE2_LAST_FILE if out_dir is not None else None
    best_path = out_dir / STAGE2_FILE if out_dir is not None else Path(STAGE2_FILE)

    if resume and last_path is not None and last_path.exists():
        payload = load_checkpoint(last_path, STAGE2_KIND)
        model.load_state_dict(payload["state_dict"])
        backend.load_state_dict(payload["extra_state"]["visual"])
        if payload["optimizer"] is not None:
            optimizer.load_state_dict(payload["optimizer"])
        metadata = payload["metadata"]
        start_epoch = int(metadata["epoch"]) + 1
        loss_history = list(metadata["loss_history"])
        validation_history = list(metadata["validation_history"])
        best_epoch, best_score = metadata["best_epoch"], metadata["best_score"]
        logger.info("Resuming stage 2", path=str(last_path), epoch=start_epoch)

    def checkpoint(path: Path, epoch: int, with_optimizer: bool) -> Path:
        metadata = _metadata(
            dataset, config, visual_config, ablation, encoder, stage1_path, stage1_sha,
            epoch, loss_history, validation_history, best_epoch, best_score,
        )
        return save_checkpoint(
            path,
            STAGE2_KIND,
            model.state_dict(),
            metadata,
            optimizer.state_dict() if with_optimizer else None,
            {"visual": backend.state_dict(), "stage1": encoder.state_dict()},
        )

    for epoch in range(start_epoch, config.epochs):
        model.train()
        backend.train()
        losses: list[float] = []
        for batch_index, members in enumerate(
            batch_order(len(items), config.graphs_per_batch, config.seed, epoch)
        ):
            batch = collate([items[i] for i in members])
            visual = torch.cat(
                [visual_embeddings(train_graphs[i], backend).to(dtype) for i in members], dim=0
            )
            node_logits, _, edge_logits = model(
                torch.cat([geometric[i] for i in members], dim=0),
                visual,
                batch.edge_index,
                batch.edge_polar,
            )
            loss = joint_loss(
                node_logits, batch.y, edge_logits, batch.edge_y, link_weights, config.loss_reduction
            )
            ensure_finite(loss, model, epoch, batch_index)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            losses.append(float(loss.detach()))

        epoch_loss = sum(losses) / len(losses)
        loss_history.append(epoch_loss)
        report, _ = evaluate_split(
            scoring_graphs, dataset, model, encoder, backend, ablation, workers=workers, logger=logger
        )
        row = _report_row(epoch, report)
        validation_history.append(row)
        improved = best_score is None or report.selection_score > best_score
        if improved:
            best_epoch, best_score = epoch, report.selection_score
        logger.info(
            "Stage 2 epoch finished",
            epoch=epoch,
            loss=epoch_loss,
            node_micro_f1=round(report.node_micro_f1, 4),
            link_f1_positive=round(report.link_f1_positive, 4),
            auc_pr=report.auc_pr,
            best=improved,
            memory_mb=round(resident_memory_mb(), 1),
        )
        if out_dir is not None:
            if improved:
                checkpoint(best_path, epoch, with_optimizer=False)
            assert last_path is not None
            checkpoint(last_path, epoch, with_optimizer=True)

    if out_dir is not None and not best_path.exists():
        checkpoint(best_path, max(start_epoch - 1, 0), with_optimizer=False)
    if out_dir is not None and best_path.exists():
        trained = load_stage2(best_path)
        model, backend = trained.model.to(dtype), trained.backend.to(dtype)
        logger.info("Saved stage 2 checkpoint", path=str(best_path), best_epoch=best_epoch, score=best_score)
    model.eval()
    backend.eval()
    return StageTwoResult(
        model=model,
        backend=backend,
        encoder=encoder,
        ablation=ablation,
        checkpoint=best_path,
        best_epoch=best_epoch,
        best_score=best_score,
        loss_history=loss_history,
        validation_history=validation_history,
    )


def load_stage2(path: Path) -> TrainedStageTwo:
    """Rebuild the model, visual backend and frozen encoder of a Stage-II checkpoint.

    The visual encoder is constructed without downloading weights; the saved
    state dict replaces them and the recorded weights identifier is kept.

    Raises:
        CheckpointError: If the file is not a readable Stage-II checkpoint
    """
    payload = load_checkpoint(path, STAGE2_KIND)
    metadata = payload["metadata"]
    dataset = DatasetName(metadata["dataset"])
    dtype = next(iter(payload["state_dict"].values())).dtype

    stage1 = metadata["stage1"]
    encoder = StageOneEncoder(StageOneConfig(**stage1["config"]), polar_bins=int(stage1["polar_bins"]))
    encoder = encoder.to(dtype)
    encoder.load_state_dict(payload["extra_state"]["stage1"])
    encoder.requires_grad_(False).eval()

    config = StageTwoConfig(**{**metadata["config"], "head_widths": tuple(metadata["config"]["head_widths"])})
    visual_config = VisualEncoderConfig(**metadata["visual"])
    ablation = AblationConfig(**metadata["ablation"])
    backend = make_visual_backend(
        dataclasses.replace(visual_config, pretrained_weights="none"), enabled=ablation.visual
    ).to(dtype)
    backend.load_state_dict(payload["extra_state"]["visual"])
    backend.weights_id = metadata["visual_weights_id"] if ablation.visual else "disabled"
    backend.eval()

    model = StageTwoModel(
        num_classes=len(entity_labels(dataset)),
        config=config,
        geometric_dim=encoder.embed_dim,
        visual_dim=visual_config.embed_dim,
        polar_bins=encoder.polar_bins,
    ).to(dtype)
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return TrainedStageTwo(dataset, model, backend, encoder, ablation, metadata)
