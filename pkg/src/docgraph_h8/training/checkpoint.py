"""Versioned checkpoint files.

A checkpoint is a ``torch.save`` dictionary holding the model state dict, the
optimizer state (for resuming) and a metadata block with the config, seed,
epoch, loss history and provenance identifiers. Loading uses
``weights_only=True`` so only tensors and plain containers are accepted.
"""

import hashlib
from pathlib import Path
from typing import Any

import torch

from ..custom_types.errors import CheckpointError

FORMAT_VERSION = 1
STAGE1_KIND = "stage1"
STAGE2_KIND = "stage2"


def file_sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def save_checkpoint(
    path: Path,
    kind: str,
    state_dict: dict[str, torch.Tensor],
    metadata: dict[str, Any],
    optimizer: dict[str, Any] | None = None,
    extra_state: dict[str, dict[str, torch.Tensor]] | None = None,
) -> Path:
    """Write a checkpoint atomically.

    Args:
        path: Destination file
        kind: ``stage1`` or ``stage2``
        state_dict: Model parameters and buffers
        metadata: Config, seed, epoch, loss history and provenance
        optimizer: Optimizer state for resuming
        extra_state: Further named state dicts (for example the visual backend)

    Returns:
        The written path
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "state_dict": state_dict,
        "optimizer": optimizer,
        "extra_state": extra_state or {},
        "metadata": metadata,
    }
    partial = path.with_suffix(path.suffix + ".partial")
    torch.save(payload, partial)
    partial.replace(path)
    return path


def load_checkpoint(path: Path, kind: str | None = None) -> dict[str, Any]:
    """Read and validate a checkpoint.

    Args:
        path: Checkpoint file
        kind: Expected kind, or None to accept any

    Raises:
        CheckpointError: If the file is missing, unreadable, of another kind or version
    """
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    if not isinstance(payload, dict) or "format_version" not in payload:
        raise CheckpointError(f"{path} is not a checkpoint")
    if payload["format_version"] != FORMAT_VERSION:
        raise CheckpointError(
            f"{path}: unsupported checkpoint version {payload['format_version']}"
        )
    if kind is not None and payload.get("kind") != kind:
        raise CheckpointError(f"{path}: expected a {kind} checkpoint, got {payload.get('kind')}")
    return payload


def inspect_checkpoint(path: Path) -> dict[str, Any]:
    """Summary of a checkpoint: version, kind, metadata and parameter count."""
    payload = load_checkpoint(path)
    parameters = sum(int(t.numel()) for t in payload["state_dict"].values())
    return {
        "path": str(path),
        "format_version": payload["format_version"],
        "kind": payload["kind"],
        "parameters": parameters,
        "sha256": file_sha256(path),
        **payload["metadata"],
    }
