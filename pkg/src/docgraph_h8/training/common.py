"""Helpers shared by both trainers."""

import math

import psutil
import torch
from torch import nn

from ..custom_types.errors import NonFiniteLossError


def resident_memory_mb() -> float:
    return psutil.Process().memory_info().rss / (1024 * 1024)


def parameter_norms(model: nn.Module) -> dict[str, float]:
    return {name: float(p.detach().norm()) for name, p in model.named_parameters()}


def ensure_finite(loss: torch.Tensor, model: nn.Module, epoch: int, batch: int) -> None:
    """Raise with diagnostics when ``loss`` is NaN or infinite.

    Raises:
        NonFiniteLossError: Carrying epoch, batch and every parameter norm
    """
    value = float(loss.detach())
    if not math.isfinite(value):
        raise NonFiniteLossError(
            f"loss became {value}", epoch=epoch, batch=batch, parameter_norms=parameter_norms(model)
        )


def batch_order(count: int, batch_size: int, seed: int, epoch: int) -> list[list[int]]:
    """Seeded per-epoch shuffle of document indices, chunked into batches."""
    generator = torch.Generator().manual_seed(seed * 7919 + epoch)
    order = torch.randperm(count, generator=generator).tolist()
    return [order[i : i + batch_size] for i in range(0, count, batch_size)]
