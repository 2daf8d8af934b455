"""Model package.

The contrastive geometric encoder, the visual backends and the graph-attention
prediction model, plus the tensors they consume.
"""

__all__ = [
    "AblationConfig",
    "ablation_rows",
    "graph_to_data",
    "collate",
    "StageOneConfig",
    "StageOneEncoder",
    "aggregate_messages",
    "encode",
    "triplet_loss",
    "mine_triplets",
    "batch_triplet_loss",
    "VisualEncoderConfig",
    "CropVisualBackend",
    "RoiVisualBackend",
    "ZeroVisualBackend",
    "make_visual_backend",
    "node_visual_features",
    "load_page_image",
    "StageTwoConfig",
    "StageTwoModel",
    "Prediction",
    "edge_representation",
    "joint_loss",
    "loss_terms",
    "inverse_frequency_weights",
    "threshold_links",
    "predict",
    "prepare_inputs",
]

from .features import AblationConfig, ablation_rows, collate, graph_to_data
from .inputs import predict, prepare_inputs
from .stage1 import (
    StageOneConfig,
    StageOneEncoder,
    aggregate_messages,
    batch_triplet_loss,
    encode,
    mine_triplets,
    triplet_loss,
)
from .stage2 import (
    Prediction,
    StageTwoConfig,
    StageTwoModel,
    edge_representation,
    inverse_frequency_weights,
    joint_loss,
    loss_terms,
    threshold_links,
)
from .visual import (
    CropVisualBackend,
    RoiVisualBackend,
    VisualEncoderConfig,
    ZeroVisualBackend,
    load_page_image,
    make_visual_backend,
    node_visual_features,
)
