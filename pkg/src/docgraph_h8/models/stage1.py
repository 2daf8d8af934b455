"""Contrastive geometric encoder.

Two rounds of edge-feature message passing turn the 9-d node vectors into
17-d geometric embeddings. Messages are the raw edge vectors in both rounds;
only the node representation evolves. The encoder is trained with a triplet
margin loss over triplets mined by entity class.
"""

from collections import defaultdict
from dataclasses import dataclass

import numpy as np
import structlog
import torch
from torch import nn
from torch_geometric.utils import scatter

from ..custom_types.errors import ConfigurationError
from ..graph.document_graph import DocumentGraph
from ..graph.geometry import DEFAULT_POLAR_BINS, NODE_FEATURE_DIM, edge_feature_dim

logger = structlog.get_logger(__name__)

Triplet = tuple[int, int, int]


@dataclass(frozen=True)
class StageOneConfig:
    """Hyperparameters of the contrastive stage."""

    dist_threshold: float = 0.3
    scale_c: float = 1.0
    margin: float = 1.0
    p_norm: float = 2.0
    triplets_per_anchor: int = 1
    epochs: int = 100
    learning_rate: float = 1e-3
    graphs_per_batch: int = 4
    hidden_dim: int = 15
    embed_dim: int = 17
    seed: int = 42

    def validate(self) -> None:
        """Check the value ranges.

        Raises:
            ConfigurationError: If any value is out of range
        """
        problems = []
        if not 0.0 < self.dist_threshold <= 1.0:
            problems.append(f"dist_threshold must be in (0, 1], got {self.dist_threshold}")
        if self.margin <= 0:
            problems.append(f"margin must be positive, got {self.margin}")
        if self.p_norm < 1:
            problems.append(f"p_norm must be >= 1, got {self.p_norm}")
        if self.triplets_per_anchor < 1:
            problems.append("triplets_per_anchor must be positive")
        if self.epochs < 0 or self.graphs_per_batch < 1:
            problems.append("epochs must be >= 0 and graphs_per_batch >= 1")
        if self.hidden_dim < 1 or self.embed_dim < 1:
            problems.append("hidden_dim and embed_dim must be positive")
        if problems:
            raise ConfigurationError("; ".join(problems), stage="stage1")


def aggregate_messages(
    edge_index: torch.Tensor,
    edge_attr: torch.Tensor,
    edge_dist: torch.Tensor,
    num_nodes: int,
    dist_threshold: float = 0.3,
    scale_c: float = 1.0,
) -> torch.Tensor:
    """Gated mean of each node's outgoing edge vectors.

    A node aggregates the edges to out-neighbours whose centre distance is
    strictly below ``dist_threshold``, scaled by ``scale_c``. Nodes with no
    such neighbour get the zero vector.

    Args:
        edge_index: (2, E) source/destination indices
        edge_attr: (E, F) edge vectors used as messages
        edge_dist: (E,) raw centre distances used by the gate
        num_nodes: Number of nodes N
        dist_threshold: Distance gate
        scale_c: Aggregation constant

    Returns:
        Tensor of shape (N, F)
    """
    src = edge_index[0]
    gate = (edge_dist < dist_threshold).to(edge_attr.dtype)
    summed = scatter(edge_attr * gate.unsqueeze(-1), src, dim=0, dim_size=num_nodes, reduce="sum")
    counts = scatter(gate, src, dim=0, dim_size=num_nodes, reduce="sum")
    scale = torch.where(counts > 0, scale_c / counts.clamp(min=1.0), torch.zeros_like(counts))
    return summed * scale.unsqueeze(-1)


class StageOneEncoder(nn.Module):
    """Two-layer edge-conditioned encoder producing 17-d node embeddings.

    Each layer concatenates the current node representation with the
    aggregated edge messages and applies Linear, LayerNorm and ReLU.
    """

    def __init__(
        self,
        config: StageOneConfig | None = None,
        polar_bins: int = DEFAULT_POLAR_BINS,
    ):
        """Initialize the encoder.

        Args:
            config: Stage hyperparameters
            polar_bins: Polar sector count of the input graphs

        Raises:
            ConfigurationError: If the configuration is invalid
        """
        super().__init__()
        self.config = config or StageOneConfig()
        self.config.validate()
        self.polar_bins = polar_bins
        self.edge_dim = edge_feature_dim(polar_bins)

        first_in = NODE_FEATURE_DIM + self.edge_dim
        second_in = self.config.hidden_dim + self.edge_dim
        self.layer1 = nn.Linear(first_in, self.config.hidden_dim)
        self.norm1 = nn.LayerNorm(self.config.hidden_dim)
        self.layer2 = nn.Linear(second_in, self.config.embed_dim)
        self.norm2 = nn.LayerNorm(self.config.embed_dim)

        if (self.layer1.in_features, self.layer2.in_features) != (first_in, second_in):
            raise ConfigurationError("layer widths do not match the feature ledger", stage="stage1")

    @property
    def embed_dim(self) -> int:
        return self.config.embed_dim

    def forward(
        self,
        x: torch.Tensor,
        edge_index: torch.Tensor,
        edge_attr: torch.Tensor,
        edge_dist: torch.Tensor,
    ) -> torch.Tensor:
        if x.shape[-1] != NODE_FEATURE_DIM or edge_attr.shape[-1] != self.edge_dim:
            raise ConfigurationError(
                f"expected node width {NODE_FEATURE_DIM} and edge width {self.edge_dim}, "
                f"got {x.shape[-1]} and {edge_attr.shape[-1]}",
                stage="stage1",
            )
        messages = aggregate_messages(
            edge_index,
            edge_attr,
            edge_dist,
            x.shape[0],
            self.config.dist_threshold,
            self.config.scale_c,
        )
        h = torch.relu(self.norm1(self.layer1(torch.cat([x, messages], dim=-1))))
        return torch.relu(self.norm2(self.layer2(torch.cat([h, messages], dim=-1))))


@torch.no_grad()
def encode(graph: DocumentGraph, encoder: StageOneEncoder) -> torch.Tensor:
    """Embed every node of a graph, shape (N, embed_dim)."""
    dtype = next(encoder.parameters()).dtype
    raw_edges = torch.as_tensor(graph.edge_matrix(), dtype=dtype)
    was_training = encoder.training
    encoder.eval()
    try:
        return encoder(
            torch.as_tensor(graph.node_matrix(), dtype=dtype),
            torch.as_tensor(graph.edge_index(), dtype=torch.long),
            raw_edges,
            raw_edges[:, 1],
        )
    finally:
        encoder.train(was_training)


def triplet_loss(
    anchor: torch.Tensor,
    positive: torch.Tensor,
    negative: torch.Tensor,
    margin: float = 1.0,
    p: float = 2.0,
) -> torch.Tensor:
    """Per-triplet hinge ``max(|a - p|_p - |a - n|_p + margin, 0)``.

    Distances carry no epsilon, so ``a == p == n`` gives exactly ``margin``.
    Inputs may be single vectors or batches of shape (T, D).
    """
    if anchor.shape != positive.shape or anchor.shape != negative.shape:
        raise ConfigurationError("triplet members must share a shape", stage="stage1")
    positive_distance = torch.linalg.vector_norm(anchor - positive, ord=p, dim=-1)
    negative_distance = torch.linalg.vector_norm(anchor - negative, ord=p, dim=-1)
    return torch.clamp(positive_distance - negative_distance + margin, min=0.0)


def mine_triplets(
    labels: np.ndarray | torch.Tensor | list[int],
    triplets_per_anchor: int = 1,
    seed: int = 0,
) -> list[Triplet]:
    """Sample (anchor, positive, negative) index triples by entity class.

    Every labelled node is an anchor. Positives are drawn uniformly from other
    nodes of the same class, negatives from nodes of any other class. Anchors
    without a same-class partner are skipped; negative labels mean
    "unlabelled" and never take part.

    Args:
        labels: Class index per node
        triplets_per_anchor: Triples drawn for each anchor
        seed: Sampling seed

    Returns:
        Triples in anchor order
    """
    values = np.asarray(labels, dtype=np.int64).reshape(-1)
    members: dict[int, list[int]] = defaultdict(list)
    for index, label in enumerate(values.tolist()):
        if label >= 0:
            members[label].append(index)

    if len(members) < 2:
        logger.warning("Batch has fewer than two classes, no triplets mined", classes=len(members))
        return []

    rng = np.random.default_rng(seed)
    everyone = np.flatnonzero(values >= 0)
    triplets: list[Triplet] = []
    for anchor in everyone.tolist():
        label = int(values[anchor])
        positives = [i for i in members[label] if i != anchor]
        if not positives:
            continue
        negatives = everyone[values[everyone] != label]
        for _ in range(triplets_per_anchor):
            positive = positives[int(rng.integers(len(positives)))]
            negative = int(negatives[int(rng.integers(len(negatives)))])
            triplets.append((anchor, positive, negative))
    return triplets


def batch_triplet_loss(
    embeddings: torch.Tensor,
    triplets: list[Triplet],
    margin: float = 1.0,
    p: float = 2.0,
) -> torch.Tensor:
    """Mean triplet loss over mined triples; zero (with graph) when none."""
    if not triplets:
        return embeddings.sum() * 0.0
    index = torch.as_tensor(triplets, dtype=torch.long, device=embeddings.device)
    losses = triplet_loss(
        embeddings[index[:, 0]], embeddings[index[:, 1]], embeddings[index[:, 2]], margin, p
    )
    return losses.mean()
