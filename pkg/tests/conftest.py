"""Pytest configuration for docgraph tests."""

import json
import os
from pathlib import Path

import numpy as np
import pytest
import structlog
from PIL import Image, ImageDraw

from docgraph_h8.custom_types.common import LinkTask
from docgraph_h8.ingestion import FunsdLoader, build_labeled_graph

PAGE_SIZE = (320, 240)
SHADES = {"header": (40, 40, 40), "question": (90, 90, 200), "answer": (200, 90, 90), "other": (150, 150, 150)}


def pytest_addoption(parser):
    """Add custom command line options."""
    parser.addoption(
        "--funsd",
        action="store",
        default=None,
        help="Root of a FUNSD copy; enables the dataset tests",
    )
    parser.addoption(
        "--rvlcdip",
        action="store",
        default=None,
        help="Root of an RVL-CDIP Invoices copy; enables the dataset tests",
    )


def _dataset_root(request, option: str, variable: str) -> Path:
    value = request.config.getoption(option) or os.getenv(variable)
    if not value:
        pytest.skip(f"pass {option} PATH or set {variable} to run dataset tests")
    return Path(value)


@pytest.fixture(scope="session")
def funsd_root(request):
    """Real FUNSD root from --funsd or FUNSD_ROOT."""
    return _dataset_root(request, "--funsd", "FUNSD_ROOT")


@pytest.fixture(scope="session")
def rvlcdip_root(request):
    """Real RVL-CDIP Invoices root from --rvlcdip or RVLCDIP_ROOT."""
    return _dataset_root(request, "--rvlcdip", "RVLCDIP_ROOT")


# Configure structlog for testing
structlog.configure(
    processors=[
        structlog.processors.add_log_level,
        structlog.processors.format_exc_info,
        structlog.dev.ConsoleRenderer(),
    ],
    wrapper_class=structlog.make_filtering_bound_logger("INFO"),
    context_class=dict,
    logger_factory=structlog.PrintLoggerFactory(),
    cache_logger_on_first_use=False,
)


def _draw_page(path: Path, entities: list[dict]) -> None:
    image = Image.new("RGB", PAGE_SIZE, "white")
    draw = ImageDraw.Draw(image)
    for entity in entities:
        draw.rectangle(entity["box"], fill=SHADES.get(entity["label"], (0, 0, 0)))
    image.save(path)


def funsd_form(seed: int) -> list[dict]:
    """A header, four question/answer rows and a footer, jittered by ``seed``."""
    rng = np.random.default_rng(seed)
    dx = int(rng.integers(0, 12))
    dy = int(rng.integers(0, 6))
    form = [{"id": 0, "box": [20 + dx, 8 + dy, 160 + dx, 26 + dy], "label": "header", "text": "FORM", "linking": []}]
    for row in range(4):
        top = 48 + dy + row * 38
        question_id, answer_id = 1 + 2 * row, 2 + 2 * row
        link = [[question_id, answer_id]]
        form.append(
            {"id": question_id, "box": [16 + dx, top, 110 + dx, top + 18], "label": "question", "text": "Q:", "linking": link}
        )
        form.append(
            {"id": answer_id, "box": [130 + dx, top, 290, top + 18], "label": "answer", "text": "A", "linking": link}
        )
    form.append({"id": 9, "box": [16, 210, 300, 230], "label": "other", "text": "footer", "linking": []})
    return form


def write_funsd_corpus(root: Path, train: int = 5, test: int = 2) -> Path:
    """Write a FUNSD-layout corpus of synthetic forms under ``root``."""
    for part, count, offset in (("training_data", train, 0), ("testing_data", test, 100)):
        annotations = root / part / "annotations"
        images = root / part / "images"
        annotations.mkdir(parents=True, exist_ok=True)
        images.mkdir(parents=True, exist_ok=True)
        for index in range(count):
            stem = f"form_{offset + index:03d}"
            form = funsd_form(offset + index)
            (annotations / f"{stem}.json").write_text(json.dumps({"form": form}), encoding="utf-8")
            _draw_page(images / f"{stem}.png", form)
    return root


def invoice_entities() -> list[dict]:
    """Supplier, invoice info and receiver blocks, a 3x2 table of positions and a total."""
    entities = [
        {"id": 0, "box": [10, 10, 120, 30], "label": "Supplier"},
        {"id": 1, "box": [200, 10, 310, 30], "label": "Invoice Info"},
        {"id": 2, "box": [10, 40, 120, 60], "label": "receiver"},
    ]
    for row in range(3):
        top = 90 + row * 30
        entities.append({"id": 3 + 2 * row, "box": [20, top, 150, top + 20], "label": "positions"})
        entities.append({"id": 4 + 2 * row, "box": [170, top, 300, top + 20], "label": "positions"})
    entities.append({"id": 9, "box": [200, 200, 310, 225], "label": "total"})
    return entities


INVOICE_TABLE = [10, 80, 310, 180]


def write_invoice_corpus(root: Path, count: int = 10) -> Path:
    """Write an RVL-CDIP-Invoices-layout corpus with one table per page."""
    (root / "annotations").mkdir(parents=True, exist_ok=True)
    (root / "images").mkdir(parents=True, exist_ok=True)
    for index in range(count):
        entities = invoice_entities()
        document = {"entities": entities, "tables": [{"id": 0, "box": INVOICE_TABLE}]}
        (root / "annotations" / f"inv_{index:03d}.json").write_text(json.dumps(document), encoding="utf-8")
        _draw_page(root / "images" / f"inv_{index:03d}.png", entities)
    return root


def invoice_region_xml(entities: list[dict], table_box: list[int]) -> str:
    """Region markup of one page; the table is drawn as a polygon."""
    objects = []
    for entity in entities:
        xmin, ymin, xmax, ymax = entity["box"]
        objects.append(
            f"<object><name>{entity['label']}</name><bndbox><xmin>{xmin}</xmin><ymin>{ymin}</ymin>"
            f"<xmax>{xmax}</xmax><ymax>{ymax}</ymax></bndbox></object>"
        )
    xmin, ymin, xmax, ymax = table_box
    corners = [(xmin, ymin), (xmax, ymin), (xmax, ymax), (xmin, ymax)]
    points = "".join(f"<pt><x>{x}</x><y>{y}</y></pt>" for x, y in corners)
    objects.append(f"<object><name>Table</name><polygon>{points}</polygon></object>")
    width, height = PAGE_SIZE
    return (
        f"<annotation><size><width>{width}</width><height>{height}</height></size>"
        + "".join(objects)
        + "</annotation>"
    )


def write_invoice_xml_corpus(root: Path, count: int = 4) -> Path:
    """Write the invoice corpus with XML region annotations instead of JSON."""
    (root / "annotations").mkdir(parents=True, exist_ok=True)
    (root / "images").mkdir(parents=True, exist_ok=True)
    for index in range(count):
        entities = invoice_entities()
        (root / "annotations" / f"inv_{index:03d}.xml").write_text(
            invoice_region_xml(entities, INVOICE_TABLE), encoding="utf-8"
        )
        _draw_page(root / "images" / f"inv_{index:03d}.png", entities)
    return root


@pytest.fixture()
def logger():
    """Fixture for providing a structured logger."""
    return structlog.get_logger()


@pytest.fixture()
def funsd_corpus(tmp_path):
    """Synthetic five-train, two-test FUNSD-layout corpus."""
    return write_funsd_corpus(tmp_path / "funsd")


@pytest.fixture()
def invoice_corpus(tmp_path):
    """Synthetic ten-page invoice corpus."""
    return write_invoice_corpus(tmp_path / "invoices")


@pytest.fixture()
def funsd_graphs(funsd_corpus):
    """Labelled kNN graphs of the synthetic training forms."""
    splits = FunsdLoader(funsd_corpus, val_fraction=0.0).load()
    return [build_labeled_graph(doc, LinkTask.KEY_VALUE, k=10) for doc in splits.train.documents]


@pytest.fixture()
def invoice_xml_corpus(tmp_path):
    """Synthetic four-page invoice corpus annotated as XML regions."""
    return write_invoice_xml_corpus(tmp_path / "invoices_xml")
