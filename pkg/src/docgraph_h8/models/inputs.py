"""Assembly of per-document model inputs and graph-level inference."""

from dataclasses import dataclass

import torch
from torch_geometric.data import Data

from ..custom_types.common import DatasetName
from ..graph.document_graph import DocumentGraph
from ..interfaces.visual import VisualBackend
from .features import AblationConfig, graph_to_data
from .stage1 import StageOneEncoder
from .stage2 import Prediction, StageTwoModel, predict_tensors
from .visual import load_page_image


@dataclass
class StageTwoInputs:
    """Everything the prediction model consumes for one document."""

    data: Data
    geometric: torch.Tensor
    visual: torch.Tensor


@torch.no_grad()
def geometric_embeddings(
    data: Data, encoder: StageOneEncoder, ablation: AblationConfig
) -> torch.Tensor:
    """Frozen geometric embeddings, zeroed when the modality is off."""
    dtype = next(encoder.parameters()).dtype
    was_training = encoder.training
    encoder.eval()
    try:
        embedded = encoder(
            data.x.to(dtype), data.edge_index, data.edge_attr.to(dtype), data.edge_dist.to(dtype)
        )
    finally:
        encoder.train(was_training)
    if not ablation.geometric:
        embedded = torch.zeros_like(embedded)
    return embedded


def visual_embeddings(
    graph: DocumentGraph,
    backend: VisualBackend,
    image: torch.Tensor | None = None,
) -> torch.Tensor:
    """Visual embeddings of every node; gradients flow when the backend trains.

    The page image is only decoded when the backend needs pixels.
    """
    if image is None:
        if graph.image_path is None or not any(True for _ in backend.parameters()):
            image = torch.zeros(3, 1, 1)
        else:
            image = load_page_image(graph.image_path)
    return backend.node_features(image, graph.boxes)


def prepare_inputs(
    graph: DocumentGraph,
    dataset: DatasetName,
    encoder: StageOneEncoder,
    backend: VisualBackend,
    ablation: AblationConfig | None = None,
    image: torch.Tensor | None = None,
) -> StageTwoInputs:
    """Tensors, geometric and visual embeddings of one document."""
    ablation = ablation or AblationConfig()
    dtype = next(encoder.parameters()).dtype
    data = graph_to_data(graph, dataset, ablation, dtype=dtype)
    geometric = geometric_embeddings(data, encoder, ablation)
    visual = visual_embeddings(graph, backend, image).to(geometric.dtype)
    return StageTwoInputs(data=data, geometric=geometric, visual=visual)


def predict(
    graph: DocumentGraph,
    dataset: DatasetName,
    model: StageTwoModel,
    encoder: StageOneEncoder,
    backend: VisualBackend,
    ablation: AblationConfig | None = None,
    image: torch.Tensor | None = None,
) -> Prediction:
    """Node labels and link probabilities/labels of one document."""
    was_training = backend.training
    backend.eval()
    try:
        with torch.no_grad():
            inputs = prepare_inputs(graph, dataset, encoder, backend, ablation, image)
    finally:
        backend.train(was_training)
    return predict_tensors(
        model,
        inputs.geometric.to(next(model.parameters()).dtype),
        inputs.visual.to(next(model.parameters()).dtype),
        inputs.data.edge_index,
        inputs.data.edge_polar.to(next(model.parameters()).dtype),
    )
