"""Exception hierarchy.

Every error raised on purpose by the package derives from ``DocGraphError`` and
carries a short machine-parsable ``category`` plus the process exit code the
command line uses when the error escapes a command.
"""

from typing import Any


class DocGraphError(Exception):
    """Base exception for pipeline errors."""

    category = "internal"
    exit_code = 1


class GraphValidationError(DocGraphError):
    """Raised when a box or coordinate violates the geometric invariants."""

    category = "validation"
    exit_code = 2

    def __init__(self, message: str, node_index: int | None = None):
        """Initialize the exception.

        Args:
            message: Error message
            node_index: Index of the offending node (if known)
        """
        if node_index is not None:
            message = f"node {node_index}: {message}"
        super().__init__(message)
        self.node_index = node_index


class AnnotationError(DocGraphError):
    """Raised when an annotation file cannot be interpreted."""

    category = "annotation"
    exit_code = 3

    def __init__(self, message: str, path: str | None = None):
        """Initialize the exception.

        Args:
            message: Error message
            path: Annotation file that failed to parse
        """
        if path is not None:
            message = f"{path}: {message}"
        super().__init__(message)
        self.path = path


class DocumentImageError(DocGraphError):
    """Raised when a document image cannot be decoded."""

    category = "image"
    exit_code = 3


class ConfigurationError(DocGraphError):
    """Raised on inconsistent configuration or tensor widths."""

    category = "configuration"
    exit_code = 4

    def __init__(self, message: str, stage: str | None = None):
        """Initialize the exception.

        Args:
            message: Error message
            stage: Pipeline stage whose configuration is inconsistent
        """
        if stage is not None:
            message = f"[{stage}] {message}"
        super().__init__(message)
        self.stage = stage


class MissingPrerequisiteError(DocGraphError):
    """Raised when a command runs before the artifacts it depends on exist."""

    category = "missing_prerequisite"
    exit_code = 5


class CheckpointError(DocGraphError):
    """Raised when a checkpoint is unreadable or of an unexpected kind/version."""

    category = "checkpoint"
    exit_code = 6


class NonFiniteLossError(DocGraphError):
    """Raised when training produces a NaN or infinite loss."""

    category = "non_finite_loss"
    exit_code = 7

    def __init__(
        self,
        message: str,
        epoch: int,
        batch: int,
        parameter_norms: dict[str, float] | None = None,
    ):
        """Initialize the exception.

        Args:
            message: Error message
            epoch: Epoch in which the loss diverged
            batch: Batch index inside the epoch
            parameter_norms: L2 norm of every named parameter at failure time
        """
        super().__init__(f"{message} (epoch={epoch}, batch={batch})")
        self.epoch = epoch
        self.batch = batch
        self.parameter_norms = parameter_norms or {}


class UnknownDocumentError(DocGraphError):
    """Raised when a document id is not part of the requested split."""

    category = "unknown_document"
    exit_code = 8

    def __init__(self, doc_id: str, valid_ids: list[str]):
        """Initialize the exception.

        Args:
            doc_id: Requested document id
            valid_ids: Ids that do exist
        """
        shown = ", ".join(valid_ids[:20]) + (" ..." if len(valid_ids) > 20 else "")
        super().__init__(f"unknown document '{doc_id}'; valid ids: {shown}")
        self.doc_id = doc_id
        self.valid_ids = valid_ids


class MetricInputError(DocGraphError):
    """Raised when a metric receives input it cannot score."""

    category = "metric_input"
    exit_code = 9


def describe(error: BaseException) -> dict[str, Any]:
    """Return a flat dictionary describing an error for structured logs."""
    return {
        "category": getattr(error, "category", "internal"),
        "error_type": type(error).__name__,
        "message": str(error),
    }
