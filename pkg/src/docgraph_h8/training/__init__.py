"""Training package.

Seeding, versioned checkpoints and the trainers of both stages.
"""

__all__ = [
    "seed_everything",
    "save_checkpoint",
    "load_checkpoint",
    "inspect_checkpoint",
    "file_sha256",
    "train_stage1",
    "load_stage1",
    "StageOneResult",
    "train_stage2",
    "load_stage2",
    "StageTwoResult",
    "TrainedStageTwo",
]

from .checkpoint import file_sha256, inspect_checkpoint, load_checkpoint, save_checkpoint
from .seeding import seed_everything
from .stage1_trainer import StageOneResult, load_stage1, train_stage1
from .stage2_trainer import StageTwoResult, TrainedStageTwo, load_stage2, train_stage2
