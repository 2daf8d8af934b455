"""Training loop of the contrastive geometric encoder."""

from collections.abc import Sequence
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import structlog
import torch

from ..custom_types.common import DatasetName
from ..custom_types.errors import MissingPrerequisiteError
from ..graph.document_graph import DocumentGraph
from ..models.features import AblationConfig, collate, graph_to_data
from ..models.stage1 import StageOneConfig, StageOneEncoder, batch_triplet_loss, mine_triplets
from .checkpoint import STAGE1_KIND, load_checkpoint, save_checkpoint
from .common import batch_order, ensure_finite, resident_memory_mb
from .seeding import seed_everything

STAGE1_FILE = "stage1.pt"
STAGE1_LAST_FILE = "stage1_last.pt"


@dataclass
class StageOneResult:
    """Outcome of a Stage-I run."""

    encoder: StageOneEncoder
    checkpoint: Path
    loss_history: list[float | None] = field(default_factory=list)
    validation_history: list[float | None] = field(default_factory=list)


def _mining_seed(seed: int, epoch: int, batch: int) -> int:
    return seed * 1_000_003 + epoch * 1009 + batch


def _epoch_loss(
    encoder: StageOneEncoder,
    items: Sequence[Any],
    batches: list[list[int]],
    config: StageOneConfig,
    epoch: int,
    optimizer: torch.optim.Optimizer | None,
) -> float | None:
    losses: list[float] = []
    for batch_index, members in enumerate(batches):
        batch = collate([items[i] for i in members])
        triplets = mine_triplets(
            batch.y, config.triplets_per_anchor, seed=_mining_seed(config.seed, epoch, batch_index)
        )
        if not triplets:
            continue
        embeddings = encoder(batch.x, batch.edge_index, batch.edge_attr, batch.edge_dist)
        loss = batch_triplet_loss(embeddings, triplets, config.margin, config.p_norm)
        ensure_finite(loss, encoder, epoch, batch_index)
        if optimizer is not None:
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
        losses.append(float(loss.detach()))
    return sum(losses) / len(losses) if losses else None


def stage1_metadata(
    config: StageOneConfig,
    dataset: DatasetName,
    ablation: AblationConfig,
    polar_bins: int,
    epoch: int,
    loss_history: list[float | None],
    validation_history: list[float | None],
) -> dict[str, Any]:
    return {
        "config": asdict(config),
        "seed": config.seed,
        "dataset": str(dataset.value),
        "ablation": ablation.as_dict(),
        "polar_bins": polar_bins,
        "epoch": epoch,
        "loss_history": list(loss_history),
        "validation_history": list(validation_history),
    }


def train_stage1(
    train_graphs: Sequence[DocumentGraph],
    validation_graphs: Sequence[DocumentGraph],
    dataset: DatasetName,
    config: StageOneConfig | None = None,
    ablation: AblationConfig | None = None,
    out_dir: Path | None = None,
    resume: bool = True,
    dtype: torch.dtype = torch.float32,
    logger: structlog.typing.FilteringBoundLogger | None = None,
) -> StageOneResult:
    """Minimise the mean triplet loss over mined triplets of the training graphs.

    Args:
        train_graphs: Labelled training graphs
        validation_graphs: Labelled validation graphs, used for logging only
        dataset: Dataset whose label set the graphs use
        config: Stage hyperparameters
        ablation: Feature switches applied before message passing
        out_dir: Directory for ``stage1.pt`` and ``stage1_last.pt``; nothing is written when None
        resume: Continue from ``stage1_last.pt`` when it exists
        dtype: Parameter dtype
        logger: Logger instance for recording events

    Returns:
        The trained encoder, its checkpoint path and per-epoch losses

    Raises:
        MissingPrerequisiteError: If there are no training graphs
        NonFiniteLossError: If a batch loss is NaN or infinite
    """
    config = config or StageOneConfig()
    ablation = ablation or AblationConfig()
    logger = logger or structlog.get_logger()
    if not train_graphs:
        raise MissingPrerequisiteError("stage 1 needs at least one training graph")

    seed_everything(config.seed)
    polar_bins = train_graphs[0].polar_bins
    encoder = StageOneEncoder(config, polar_bins=polar_bins).to(dtype)
    optimizer = torch.optim.Adam(encoder.parameters(), lr=config.learning_rate)

    train_items = [graph_to_data(g, dataset, ablation, dtype=dtype) for g in train_graphs]
    val_items = [graph_to_data(g, dataset, ablation, dtype=dtype) for g in validation_graphs]

    start_epoch = 0
    loss_history: list[float | None] = []
    validation_history: list[float | None] = []
    last_path = out_dir / STAGE1_LAST_FILE if out_dir is not None else None
    if resume and last_path is not None and last_path.exists():
        payload = load_checkpoint(last_path, STAGE1_KIND)
        encoder.load_state_dict(payload["state_dict"])
        if payload["optimizer"] is not None:
            optimizer.load_state_dict(payload["optimizer"])
        metadata = payload["metadata"]
        start_epoch = int(metadata["epoch"]) + 1
        loss_history = list(metadata["loss_history"])
        validation_history = list(metadata["validation_history"])
        logger.info("Resuming stage 1", path=str(last_path), epoch=start_epoch)

    for epoch in range(start_epoch, config.epochs):
        encoder.train()
        batches = batch_order(len(train_items), config.graphs_per_batch, config.seed, epoch)
        train_loss = _epoch_loss(encoder, train_items, batches, config, epoch, optimizer)

        encoder.eval()
        with torch.no_grad():
            val_batches = [
                list(range(i, min(i + config.graphs_per_batch, len(val_items))))
                for i in range(0, len(val_items), config.graphs_per_batch)
            ]
            val_loss = _epoch_loss(encoder, val_items, val_batches, config, 0, None)

        loss_history.append(train_loss)
        validation_history.append(val_loss)
        logger.info(
            "Stage 1 epoch finished",
            epoch=epoch,
            loss=train_loss,
            validation_loss=val_loss,
            memory_mb=round(resident_memory_mb(), 1),
        )
        if last_path is not None:
            metadata = stage1_metadata(
                config, dataset, ablation, polar_bins, epoch, loss_history, validation_history
            )
            save_checkpoint(last_path, STAGE1_KIND, encoder.state_dict(), metadata, optimizer.state_dict())

    encoder.eval()
    final_path = Path(STAGE1_FILE)
    if out_dir is not None:
        metadata = stage1_metadata(
            config,
            dataset,
            ablation,
            polar_bins,
            max(config.epochs - 1, 0),
            loss_history,
            validation_history,
        )
        final_path = save_checkpoint(out_dir / STAGE1_FILE, STAGE1_KIND, encoder.state_dict(), metadata)
        logger.info("Saved stage 1 checkpoint", path=str(final_path))
    return StageOneResult(encoder, final_path, loss_history, validation_history)


def load_stage1(path: Path) -> tuple[StageOneEncoder, dict[str, Any]]:
    """Rebuild a trained encoder from its checkpoint.

    Returns:
        The encoder in eval mode and the checkpoint metadata

    Raises:
        CheckpointError: If the file is not a readable Stage-I checkpoint
    """
    payload = load_checkpoint(path, STAGE1_KIND)
    metadata = payload["metadata"]
    config = StageOneConfig(**metadata["config"])
    encoder = StageOneEncoder(config, polar_bins=int(metadata["polar_bins"]))
    first = next(iter(payload["state_dict"].values()))
    encoder = encoder.to(first.dtype)
    encoder.load_state_dict(payload["state_dict"])
    encoder.eval()
    return encoder, metadata
