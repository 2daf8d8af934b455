"""Graph-attention prediction model.

Two GAT layers with learned residual shortcuts run over the concatenation of
the frozen geometric embedding and the visual embedding of every node. A
five-layer head labels nodes; a second five-layer head classifies every
directed edge from ``h_src | h_dst | cls_src | cls_dst | polar``.
"""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn
from torch_geometric.nn import GATConv

from ..custom_types.errors import ConfigurationError, GraphValidationError
from ..graph.geometry import DEFAULT_POLAR_BINS
from .features import IGNORE_INDEX

LINK_THRESHOLD = 0.5


@dataclass(frozen=True)
class StageTwoConfig:
    """Hyperparameters of the prediction stage.

    ``link_class_weighting`` is ``inverse_frequency`` or ``none``.
    ``loss_reduction`` is ``mean`` or ``sum``; ``sum`` adds up per-sample
    cross-entropies literally.
    """

    hidden_dim: int = 1500
    heads: int = 2
    dropout: float = 0.2
    head_widths: tuple[int, ...] = (1024, 256, 64, 16)
    link_class_weighting: str = "inverse_frequency"
    loss_reduction: str = "mean"
    epochs: int = 50
    learning_rate: float = 1e-4
    weight_decay: float = 0.0
    graphs_per_batch: int = 1
    seed: int = 42

    def validate(self) -> None:
        problems = []
        if self.hidden_dim < 1 or self.heads < 1:
            problems.append("hidden_dim and heads must be positive")
        if not 0.0 <= self.dropout < 1.0:
            problems.append(f"dropout must be in [0, 1), got {self.dropout}")
        if any(width < 1 for width in self.head_widths):
            problems.append("head widths must be positive")
        if self.link_class_weighting not in ("inverse_frequency", "none"):
            problems.append(f"unknown link_class_weighting {self.link_class_weighting!r}")
        if self.loss_reduction not in ("mean", "sum"):
            problems.append(f"unknown loss_reduction {self.loss_reduction!r}")
        if self.epochs < 0 or self.graphs_per_batch < 1:
            problems.append("epochs must be >= 0 and graphs_per_batch >= 1")
        if problems:
            raise ConfigurationError("; ".join(problems), stage="stage2")


def _mlp(in_dim: int, hidden: Sequence[int], out_dim: int) -> nn.Sequential:
    layers: list[nn.Module] = []
    width = in_dim
    for next_width in hidden:
        layers += [nn.Linear(width, next_width), nn.ReLU()]
        width = next_width
    layers.append(nn.Linear(width, out_dim))
    return nn.Sequential(*layers)


def _shortcut(in_dim: int, out_dim: int) -> nn.Module:
    return nn.Identity() if in_dim == out_dim else nn.Linear(in_dim, out_dim)


def edge_representation(
    h: torch.Tensor,
    cls: torch.Tensor,
    edge_index: torch.Tensor,
    e_polar: torch.Tensor,
) -> torch.Tensor:
    """Edge vectors ``h_src | h_dst | cls_src | cls_dst | e_polar``.

    Args:
        h: Node embeddings (N, H)
        cls: Node class probabilities (N, C)
        edge_index: (2, E) source/destination indices
        e_polar: Polar one-hot of every edge (E, bins)

    Returns:
        Tensor of shape (E, 2H + 2C + bins)

    Raises:
        GraphValidationError: If an edge references a missing node
    """
    if edge_index.numel() and (int(edge_index.min()) < 0 or int(edge_index.max()) >= h.shape[0]):
        raise GraphValidationError("edge references a node outside the graph")
    src, dst = edge_index[0], edge_index[1]
    return torch.cat([h[src], h[dst], cls[src], cls[dst], e_polar], dim=-1)


class StageTwoModel(nn.Module):
    """GAT encoder with node-labelling and link-classification heads."""

    def __init__(
        self,
        num_classes: int,
        config: StageTwoConfig | None = None,
        geometric_dim: int = 17,
        visual_dim: int = 1448,
        polar_bins: int = DEFAULT_POLAR_BINS,
    ):
        """Initialize the model.

        Args:
            num_classes: Entity classes of the dataset (4 for FUNSD, 6 for invoices)
            config: Stage hyperparameters
            geometric_dim: Width of the geometric embedding
            visual_dim: Width of the visual embedding
            polar_bins: Polar sector count of the input graphs

        Raises:
            ConfigurationError: If the configuration or the width ledger is inconsistent
        """
        super().__init__()
        self.config = config or StageTwoConfig()
        self.config.validate()
        self.num_classes = num_classes
        self.geometric_dim = geometric_dim
        self.visual_dim = visual_dim
        self.polar_bins = polar_bins

        in_dim = geometric_dim + visual_dim
        hidden = self.config.hidden_dim
        self.out_dim = hidden * self.config.heads
        dropout = self.config.dropout

        self.input_dropout = nn.Dropout(dropout)
        self.gat1 = GATConv(in_dim, hidden, heads=1, dropout=dropout, add_self_loops=True)
        self.shortcut1 = _shortcut(in_dim, hidden)
        self.gat2 = GATConv(hidden, hidden, heads=self.config.heads, concat=True, dropout=dropout, add_self_loops=True)
        self.shortcut2 = _shortcut(hidden, self.out_dim)
        self.node_head = _mlp(self.out_dim, self.config.head_widths, num_classes)
        self.edge_in_dim = 2 * self.out_dim + 2 * num_classes + polar_bins
        self.edge_head = _mlp(self.edge_in_dim, self.config.head_widths, 2)

        first = self.edge_head[0]
        if not isinstance(first, nn.Linear) or first.in_features != 2 * self.out_dim + 2 * num_classes + polar_bins:
            raise ConfigurationError("edge head width does not match 2H + 2C + bins", stage="stage2")

    @property
    def input_dim(self) -> int:
        return self.geometric_dim + self.visual_dim

    def encode_nodes(
        self, geometric: torch.Tensor, visual: torch.Tensor, edge_index: torch.Tensor
    ) -> torch.Tensor:
        """Node embeddings after both attention layers, shape (N, hidden * heads).

        Raises:
            ConfigurationError: If an input width does not match the model
        """
        if geometric.shape[-1] != self.geometric_dim:
            raise ConfigurationError(
                f"geometric width {geometric.shape[-1]} != {self.geometric_dim}", stage="stage1"
            )
        if visual.shape[-1] != self.visual_dim:
            raise ConfigurationError(
                f"visual width {visual.shape[-1]} != {self.visual_dim}", stage="visual"
            )
        x = torch.cat([geometric, visual], dim=-1)
        h1 = F.relu(self.gat1(self.input_dropout(x), edge_index) + self.shortcut1(x))
        return F.relu(self.gat2(self.input_dropout(h1), edge_index) + self.shortcut2(h1))

    def forward(
        self,
        geometric: torch.Tensor,
        visual: torch.Tensor,
        edge_index: torch.Tensor,
        edge_polar: torch.Tensor,
    ) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """Return (node logits, node embeddings h, edge logits)."""
        h = self.encode_nodes(geometric, visual, edge_index)
        node_logits = self.node_head(h)
        if edge_polar.shape[-1] != self.polar_bins:
            raise ConfigurationError(
                f"polar width {edge_polar.shape[-1]} != {self.polar_bins}", stage="stage2"
            )
        h_e = edge_representation(h, node_logits.softmax(dim=-1), edge_index, edge_polar)
        return node_logits, h, self.edge_head(h_e)

    @torch.no_grad()
    def attention_weights(
        self, geometric: torch.Tensor, visual: torch.Tensor, edge_index: torch.Tensor
    ) -> list[tuple[torch.Tensor, torch.Tensor]]:
        """Pre-dropout attention coefficients of both layers.

        Returns:
            One (edge_index with self-loops, alpha of shape (E', heads)) pair per layer
        """
        was_training = self.training
        self.eval()
        try:
            x = torch.cat([geometric, visual], dim=-1)
            out1, first = self.gat1(x, edge_index, return_attention_weights=True)
            h1 = F.relu(out1 + self.shortcut1(x))
            _, second = self.gat2(h1, edge_index, return_attention_weights=True)
        finally:
            self.train(was_training)
        return [first, second]


def loss_terms(
    node_logits: torch.Tensor,
    node_labels: torch.Tensor,
    edge_logits: torch.Tensor,
    edge_labels: torch.Tensor,
    link_weights: torch.Tensor | None = None,
    reduction: str = "mean",
) -> tuple[torch.Tensor, torch.Tensor]:
    """Entity and link cross-entropy terms; unlabelled targets are ignored."""
    entity = F.cross_entropy(node_logits, node_labels, ignore_index=IGNORE_INDEX, reduction=reduction)
    if edge_logits.shape[0] == 0:
        link = edge_logits.sum() * 0.0
    else:
        link = F.cross_entropy(
            edge_logits, edge_labels, weight=link_weights, ignore_index=IGNORE_INDEX, reduction=reduction
        )
    return entity, link


def joint_loss(
    node_logits: torch.Tensor,
    node_labels: torch.Tensor,
    edge_logits: torch.Tensor,
    edge_labels: torch.Tensor,
    link_weights: torch.Tensor | None = None,
    reduction: str = "mean",
) -> torch.Tensor:
    """Entity cross-entropy plus (optionally class-weighted) link cross-entropy."""
    entity, link = loss_terms(node_logits, node_labels, edge_logits, edge_labels, link_weights, reduction)
    return entity + link


def inverse_frequency_weights(edge_labels: torch.Tensor, num_classes: int = 2) -> torch.Tensor:
    """Class weights ``total / (classes * count)``; absent classes get weight 1."""
    labelled = edge_labels[edge_labels != IGNORE_INDEX]
    counts = torch.bincount(labelled, minlength=num_classes).to(torch.float64)
    total = counts.sum()
    weights = torch.where(counts > 0, total / (num_classes * counts.clamp(min=1.0)), torch.ones_like(counts))
    return weights


def threshold_links(probabilities: np.ndarray, threshold: float = LINK_THRESHOLD) -> np.ndarray:
    """Positive iff the positive-class probability is strictly above ``threshold``."""
    return (np.asarray(probabilities) > threshold).astype(np.int64)


@dataclass(frozen=True)
class Prediction:
    """Model outputs for one document."""

    node_labels: np.ndarray
    node_probabilities: np.ndarray
    edge_probabilities: np.ndarray
    edge_labels: np.ndarray


@torch.no_grad()
def predict_tensors(
    model: StageTwoModel,
    geometric: torch.Tensor,
    visual: torch.Tensor,
    edge_index: torch.Tensor,
    edge_polar: torch.Tensor,
) -> Prediction:
    """Run the model in inference mode (dropout off) on prepared inputs."""
    was_training = model.training
    model.eval()
    try:
        node_logits, _, edge_logits = model(geometric, visual, edge_index, edge_polar)
    finally:
        model.train(was_training)
    node_probabilities = node_logits.softmax(dim=-1).double().cpu().numpy()
    edge_probabilities = edge_logits.softmax(dim=-1)[:, 1].double().cpu().numpy()
    return Prediction(
        node_labels=node_probabilities.argmax(axis=-1).astype(np.int64),
        node_probabilities=node_probabilities,
        edge_probabilities=edge_probabilities,
        edge_labels=threshold_links(edge_probabilities),
    )
