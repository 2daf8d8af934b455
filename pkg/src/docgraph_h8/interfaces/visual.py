"""Visual feature backend interface."""

from abc import ABC, abstractmethod
from collections.abc import Sequence

import torch
from torch import nn

from ..graph.geometry import BBox


class VisualBackend(nn.Module, ABC):
    """Interface for per-node visual embedding extractors.

    Implementations map a page image and its text-region boxes to one
    ``embed_dim`` vector per box, in box order.
    """

    embed_dim: int
    weights_id: str

    @abstractmethod
    def node_features(self, image: torch.Tensor, boxes: Sequence[BBox]) -> torch.Tensor:
        """Embed every box of a page.

        Args:
            image: Normalized page tensor of shape (3, H, W)
            boxes: Text-region boxes in pixel coordinates of ``image``

        Returns:
            Tensor of shape (len(boxes), embed_dim)
        """
        pass
