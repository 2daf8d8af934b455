"""DocGraph H8.

Language-agnostic document understanding on layout graphs:
- kNN graphs over text-region boxes with geometric node and edge vectors
- Contrastive geometric node embeddings trained with a triplet margin loss
- Per-region visual features from a MobileNet encoder
- Graph attention with entity-labelling and link-prediction heads
- F1, AUC-PR and table-detection evaluation with ablation tables
"""

__all__ = [
    "BBox",
    "DocumentGraph",
    "build_graph",
    "AblationConfig",
    "StageOneConfig",
    "StageOneEncoder",
    "VisualEncoderConfig",
    "StageTwoConfig",
    "StageTwoModel",
    "Prediction",
    "predict",
    "EvalReport",
    "evaluate_split",
    "ExperimentConfig",
    "load_config",
    "StandardTaskManager",
    "DocGraphError",
]

from .concurrency.task_manager import StandardTaskManager
from .custom_types.errors import DocGraphError
from .evaluation.evaluate import evaluate_split
from .evaluation.metrics import EvalReport
from .graph.document_graph import DocumentGraph, build_graph
from .graph.geometry import BBox
from .models.features import AblationConfig
from .models.inputs import predict
from .models.stage1 import StageOneConfig, StageOneEncoder
from .models.stage2 import Prediction, StageTwoConfig, StageTwoModel
from .models.visual import VisualEncoderConfig
from .pipeline.config import ExperimentConfig, load_config
