"""Common types used across the application.

This module defines the small vocabularies shared by every stage of the
pipeline: dataset names, split names, entity label sets, link labels and the
geometric tokens used in edge features.
"""

from enum import IntEnum, StrEnum


class DatasetName(StrEnum):
    """Supported annotated corpora."""

    FUNSD = "funsd"
    RVLCDIP = "rvlcdip"


class SplitName(StrEnum):
    """Dataset partitions."""

    TRAIN = "train"
    VALIDATION = "validation"
    TEST = "test"


class LinkTask(StrEnum):
    """Edge labelling task attached to a dataset."""

    KEY_VALUE = "kv"  # FUNSD question/answer pairs
    TABLE = "table"  # RVL-CDIP same-table membership


class LinkLabel(StrEnum):
    """Edge classes. Index 0 is always the negative class."""

    NONE = "none"
    KEY_VALUE = "key_value"
    TABLE = "table"


class FunsdLabel(StrEnum):
    """FUNSD entity classes, in model output order."""

    QUESTION = "question"
    ANSWER = "answer"
    HEADER = "header"
    OTHER = "other"


class InvoiceLabel(StrEnum):
    """RVL-CDIP Invoices region classes, in model output order."""

    INVOICE_INFO = "invoice_info"
    OTHER = "other"
    POSITIONS = "positions"
    RECEIVER = "receiver"
    SUPPLIER = "supplier"
    TOTAL = "total"


class RelativePosition(StrEnum):
    """Relative-position token of a destination box seen from a source box."""

    LEFT = "left"
    RIGHT = "right"
    TOP = "top"
    BOTTOM = "bottom"
    VERT_INTERSECT = "vert-intersect"
    HOR_INTERSECT = "hor-intersect"
    SQR_INTERSECT = "sqr-intersect"

    @property
    def index(self) -> int:
        """Position of the token inside the one-hot block."""
        return list(RelativePosition).index(self)


class RegionCode(IntEnum):
    """Quarter-section code of a normalized coordinate."""

    FIRST = 11
    SECOND = 12
    THIRD = 21
    FOURTH = 22

    @property
    def stored(self) -> float:
        """Value written into the node feature vector (uniform spacing in [0, 1])."""
        return _REGION_STORED[self.value]


_REGION_STORED = {11: 0.0, 12: 1.0 / 3.0, 21: 2.0 / 3.0, 22: 1.0}


def entity_labels(dataset: DatasetName) -> tuple[str, ...]:
    """Return the ordered entity label names of a dataset.

    Args:
        dataset: Dataset whose label set is requested

    Returns:
        Label names in model output order
    """
    if dataset == DatasetName.FUNSD:
        return tuple(label.value for label in FunsdLabel)
    return tuple(label.value for label in InvoiceLabel)


def link_task_for(dataset: DatasetName) -> LinkTask:
    """Return the edge task a dataset is evaluated on."""
    return LinkTask.KEY_VALUE if dataset == DatasetName.FUNSD else LinkTask.TABLE


def positive_link_label(task: LinkTask) -> LinkLabel:
    """Return the positive edge class of a link task."""
    return LinkLabel.KEY_VALUE if task == LinkTask.KEY_VALUE else LinkLabel.TABLE
