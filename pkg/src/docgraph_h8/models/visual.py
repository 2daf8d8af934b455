"""Per-node visual embeddings.

A MobileNetV2 feature extractor embeds the page region under every text box.
Two extraction strategies share the ``VisualBackend`` interface: cropping and
resizing each box (default), or ROI-aligning boxes on one full-page feature
map. ``ZeroVisualBackend`` stands in when the visual modality is disabled.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import structlog
import torch
import torch.nn.functional as F
from PIL import Image, UnidentifiedImageError
from torch import nn
from torchvision.models import MobileNet_V2_Weights, mobilenet_v2
from torchvision.ops import roi_align
from torchvision.transforms.functional import normalize, pil_to_tensor

from ..custom_types.errors import CheckpointError, ConfigurationError, DocumentImageError
from ..graph.geometry import BBox
from ..interfaces.visual import VisualBackend

logger = structlog.get_logger(__name__)

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)
FEATURE_STRIDE = 32


@dataclass(frozen=True)
class VisualEncoderConfig:
    """Visual encoder settings.

    ``pretrained_weights`` is ``torchvision:IMAGENET1K_V1``, ``none`` for a
    random initialisation, or ``file:<path>`` pointing at a state dict of a
    MobileNetV2 feature extractor (for example a segmentation UNet's encoder).
    """

    crop_size: int = 64
    embed_dim: int = 1448
    pretrained_weights: str = "torchvision:IMAGENET1K_V1"
    trainable: bool = True
    backend: str = "crop"
    roi_output_size: int = 2

    def validate(self) -> None:
        if self.crop_size < 1 or self.embed_dim < 1 or self.roi_output_size < 1:
            raise ConfigurationError(
                "crop_size, embed_dim and roi_output_size must be positive", stage="visual"
            )
        if self.backend not in ("crop", "roi"):
            raise ConfigurationError(f"unknown visual backend {self.backend!r}", stage="visual")
        if not (
            self.pretrained_weights in ("none", "torchvision:IMAGENET1K_V1")
            or self.pretrained_weights.startswith("file:")
        ):
            raise ConfigurationError(
                f"unknown weights identifier {self.pretrained_weights!r}", stage="visual"
            )


def load_page_image(path: str | Path) -> torch.Tensor:
    """Decode a page as a normalized float tensor of shape (3, H, W).

    Raises:
        DocumentImageError: If the file cannot be decoded
    """
    try:
        with Image.open(path) as image:
            rgb = image.convert("RGB")
    except (OSError, UnidentifiedImageError) as e:
        raise DocumentImageError(f"{path}: {e}") from e
    tensor = pil_to_tensor(rgb).float() / 255.0
    return normalize(tensor, list(IMAGENET_MEAN), list(IMAGENET_STD))


def build_mobilenet_features(weights_id: str) -> tuple[nn.Module, int]:
    """Return the MobileNetV2 feature extractor and its output channel count.

    Raises:
        CheckpointError: If a ``file:`` state dict cannot be loaded
    """
    if weights_id == "torchvision:IMAGENET1K_V1":
        network = mobilenet_v2(weights=MobileNet_V2_Weights.IMAGENET1K_V1)
    else:
        network = mobilenet_v2(weights=None)
    features = network.features

    if weights_id.startswith("file:"):
        path = weights_id.removeprefix("file:")
        try:
            state = torch.load(path, map_location="cpu", weights_only=True)
        except (OSError, RuntimeError) as e:
            raise CheckpointError(f"cannot read encoder weights {path}: {e}") from e
        state = {key.removeprefix("features."): value for key, value in state.items()}
        try:
            features.load_state_dict(state)
        except RuntimeError as e:
            raise CheckpointError(f"encoder weights {path} do not fit MobileNetV2: {e}") from e
    return features, int(network.last_channel)


class _MobileNetBackend(VisualBackend):
    """Shared encoder plumbing for the MobileNet backends."""

    def __init__(self, config: VisualEncoderConfig):
        super().__init__()
        config.validate()
        self.config = config
        self.embed_dim = config.embed_dim
        self.weights_id = config.pretrained_weights
        self.encoder, channels = build_mobilenet_features(config.pretrained_weights)
        self.projection = nn.Linear(channels, config.embed_dim)
        if not config.trainable:
            self.encoder.requires_grad_(False)

    def train(self, mode: bool = True) -> "_MobileNetBackend":
        super().train(mode)
        # BatchNorm running statistics stay at their pretrained values
        for module in self.encoder.modules():
            if isinstance(module, nn.BatchNorm2d):
                module.eval()
        return self


class CropVisualBackend(_MobileNetBackend):
    """Crop every box, resize it to ``crop_size`` and encode it."""

    def node_features(self, image: torch.Tensor, boxes: Sequence[BBox]) -> torch.Tensor:
        dtype = self.projection.weight.dtype
        output = torch.zeros(len(boxes), self.embed_dim, dtype=dtype, device=image.device)
        _, height, width = image.shape
        crops: list[torch.Tensor] = []
        rows: list[int] = []
        for index, box in enumerate(boxes):
            left = max(int(box.xmin), 0)
            top = max(int(box.ymin), 0)
            right = min(math.ceil(box.xmax), width)
            bottom = min(math.ceil(box.ymax), height)
            if right - left < 1 or bottom - top < 1:
                logger.warning("Box thinner than one pixel, using zero visual vector", node_index=index)
                continue
            crop = image[:, top:bottom, left:right].unsqueeze(0).to(dtype)
            size = (self.config.crop_size, self.config.crop_size)
            crops.append(F.interpolate(crop, size=size, mode="bilinear", align_corners=False))
            rows.append(index)
        if not crops:
            return output

        feature_maps = self.encoder(torch.cat(crops, dim=0))
        pooled = F.adaptive_avg_pool2d(feature_maps, 1).flatten(1)
        embedded = self.projection(pooled)
        return output.index_put((torch.as_tensor(rows, device=image.device),), embedded)


class RoiVisualBackend(_MobileNetBackend):
    """Encode the full page once and ROI-align every box on the feature map."""

    def node_features(self, image: torch.Tensor, boxes: Sequence[BBox]) -> torch.Tensor:
        dtype = self.projection.weight.dtype
        if not boxes:
            return torch.zeros(0, self.embed_dim, dtype=dtype, device=image.device)
        feature_map = self.encoder(image.unsqueeze(0).to(dtype))
        rois = torch.as_tensor(
            [[0.0, *box.as_list()] for box in boxes], dtype=dtype, device=image.device
        )
        size = self.config.roi_output_size
        pooled = roi_align(
            feature_map,
            rois,
            output_size=(size, size),
            spatial_scale=1.0 / FEATURE_STRIDE,
            sampling_ratio=2,
            aligned=True,
        )
        return self.projection(pooled.mean(dim=(2, 3)))


class ZeroVisualBackend(VisualBackend):
    """Constant zero embedding used when the visual modality is switched off."""

    def __init__(self, embed_dim: int = 1448):
        super().__init__()
        self.embed_dim = embed_dim
        self.weights_id = "disabled"
        self.register_buffer("_dtype_marker", torch.zeros(0))

    def node_features(self, image: torch.Tensor, boxes: Sequence[BBox]) -> torch.Tensor:
        return torch.zeros(len(boxes), self.embed_dim, dtype=self._dtype_marker.dtype, device=image.device)


def make_visual_backend(config: VisualEncoderConfig, enabled: bool = True) -> VisualBackend:
    """Build the backend named by ``config.backend``, or the zero backend."""
    config.validate()
    if not enabled:
        return ZeroVisualBackend(config.embed_dim)
    if config.backend == "roi":
        return RoiVisualBackend(config)
    return CropVisualBackend(config)


def node_visual_features(
    image: torch.Tensor | str | Path,
    boxes: Sequence[BBox],
    backend: VisualBackend,
) -> torch.Tensor:
    """Embed every box of a page, shape (len(boxes), embed_dim).

    Args:
        image: Normalized page tensor or a path to the page image
        boxes: Text-region boxes in pixel coordinates
        backend: Extraction backend

    Raises:
        DocumentImageError: If ``image`` is a path that cannot be decoded
    """
    if not isinstance(image, torch.Tensor):
        image = load_page_image(image)
    return backend.node_features(image, boxes)
