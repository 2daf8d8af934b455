"""Link-prediction overlays.

Boxes are outlined in the colour of their class and links are drawn between
box centres. Labelled documents get a ground-truth panel on the left.
"""

from dataclasses import dataclass
from pathlib import Path

import structlog
from PIL import Image, ImageDraw

from ..custom_types.common import DatasetName, LinkLabel, entity_labels
from ..custom_types.records import DocumentPredictionRecord
from ..graph.document_graph import DocumentGraph
from ..graph.geometry import BBox

PALETTE = (
    (31, 119, 180),
    (255, 127, 14),
    (44, 160, 44),
    (214, 39, 40),
    (148, 103, 189),
    (140, 86, 75),
    (227, 119, 194),
    (127, 127, 127),
)
LINK_COLOUR = (0, 170, 255)
UNLABELLED_COLOUR = (160, 160, 160)
PANEL_GAP = 16


@dataclass(frozen=True)
class RenderResult:
    path: Path
    predicted_links: int
    ground_truth_links: int | None


def class_colour(index: int | None) -> tuple[int, int, int]:
    if index is None:
        return UNLABELLED_COLOUR
    return PALETTE[index % len(PALETTE)]


def _page(graph: DocumentGraph, logger: structlog.typing.FilteringBoundLogger) -> Image.Image:
    width, height = int(round(graph.image_size[0])), int(round(graph.image_size[1]))
    if graph.image_path is not None and Path(graph.image_path).exists():
        with Image.open(graph.image_path) as image:
            return image.convert("RGB")
    logger.warning("Page image unavailable, drawing on a blank page", doc_id=graph.doc_id)
    return Image.new("RGB", (width, height), "white")


def draw_panel(
    page: Image.Image,
    boxes: list[BBox],
    classes: list[int | None],
    links: list[tuple[int, int]],
) -> Image.Image:
    """Draw boxes and links on a copy of ``page``."""
    panel = page.copy()
    draw = ImageDraw.Draw(panel)
    width = max(1, round(min(panel.size) / 400))
    for src, dst in links:
        draw.line([boxes[src].center, boxes[dst].center], fill=LINK_COLOUR, width=width)
    for box, cls in zip(boxes, classes, strict=True):
        draw.rectangle(box.as_list(), outline=class_colour(cls), width=width + 1)
    return panel


def ground_truth_links(graph: DocumentGraph) -> list[tuple[int, int]] | None:
    """Linked pairs of the annotation that are edges of the graph, one per unordered pair."""
    if all(edge.link_label is None for edge in graph.edges) and graph.link_coverage is None:
        return None
    seen: set[frozenset[int]] = set()
    pairs = []
    for edge in graph.edges:
        pair = frozenset((edge.src, edge.dst))
        if edge.link_label not in (None, LinkLabel.NONE.value) and pair not in seen:
            seen.add(pair)
            pairs.append((edge.src, edge.dst))
    return pairs


def render_prediction(
    graph: DocumentGraph,
    record: DocumentPredictionRecord,
    dataset: DatasetName,
    out_path: Path,
    logger: structlog.typing.FilteringBoundLogger | None = None,
) -> RenderResult:
    """Write the overlay image of one predicted document.

    Every positively predicted directed edge is drawn, so the line count equals
    the positive-edge count of the prediction record.

    Args:
        graph: The document graph the prediction was made on
        record: Prediction record of the same document
        dataset: Dataset the labels belong to
        out_path: Image file to write (format from the suffix)
        logger: Logger instance for recording events

    Returns:
        Output path and the number of drawn links per panel
    """
    logger = logger or structlog.get_logger()
    page = _page(graph, logger)
    boxes = graph.boxes
    predicted_links = [(e["src"], e["dst"]) for e in record["edges"] if e["predicted"] == 1]
    predicted: list[int | None] = list(record["node_predicted"])
    prediction_panel = draw_panel(page, boxes, predicted, predicted_links)

    gt_links = ground_truth_links(graph)
    has_labels = gt_links is not None or any(t is not None for t in record["node_target"])
    if has_labels:
        gt_panel = draw_panel(page, boxes, list(record["node_target"]), gt_links or [])
        canvas = Image.new(
            "RGB", (gt_panel.width + PANEL_GAP + prediction_panel.width, page.height), "white"
        )
        canvas.paste(gt_panel, (0, 0))
        canvas.paste(prediction_panel, (gt_panel.width + PANEL_GAP, 0))
    else:
        canvas = prediction_panel

    out_path.parent.mkdir(parents=True, exist_ok=True)
    canvas.save(out_path)
    logger.info(
        "Rendered document",
        doc_id=graph.doc_id,
        path=str(out_path),
        classes=list(entity_labels(dataset)),
        predicted_links=len(predicted_links),
        ground_truth_links=None if gt_links is None else len(gt_links),
    )
    return RenderResult(
        out_path, len(predicted_links), None if gt_links is None else len(gt_links)
    )
