"""Tests for node and edge geometry."""

import math

import numpy as np
import pytest

from docgraph_h8.custom_types.common import RegionCode, RelativePosition
from docgraph_h8.custom_types.errors import GraphValidationError
from docgraph_h8.graph.geometry import (
    BBox,
    box_iou,
    edge_feature_dim,
    edge_geometry,
    normalize_box,
    polar_sector,
    regional_encoding,
    relative_position,
)


def _brute_force_relpos(src: BBox, dst: BBox) -> RelativePosition:
    x_overlap = max(src.xmin, dst.xmin) < min(src.xmax, dst.xmax)
    y_overlap = max(src.ymin, dst.ymin) < min(src.ymax, dst.ymax)
    if x_overlap and y_overlap:
        return RelativePosition.SQR_INTERSECT
    if x_overlap:
        return RelativePosition.VERT_INTERSECT
    if y_overlap:
        return RelativePosition.HOR_INTERSECT
    dx = (dst.xmin + dst.xmax - src.xmin - src.xmax) / 2
    dy = (dst.ymin + dst.ymax - src.ymin - src.ymax) / 2
    if abs(dx) >= abs(dy):
        return RelativePosition.RIGHT if dx > 0 else RelativePosition.LEFT
    return RelativePosition.BOTTOM if dy > 0 else RelativePosition.TOP


def _random_box(rng: np.random.Generator, size: float) -> BBox:
    x0, y0 = rng.uniform(0, size - 10, size=2)
    w, h = rng.uniform(1, 60, size=2)
    return BBox(float(x0), float(y0), float(min(x0 + w, size)), float(min(y0 + h, size)))


class TestRegionalEncoding:
    """Quarter-section codes."""

    @pytest.mark.parametrize(
        ("coord", "expected"),
        [
            (0.0, RegionCode.FIRST),
            (0.2499, RegionCode.FIRST),
            (0.25, RegionCode.SECOND),
            (0.5, RegionCode.THIRD),
            (0.75, RegionCode.FOURTH),
            (1.0, RegionCode.FOURTH),
        ],
    )
    def test_section_boundaries(self, coord, expected):
        """Sections are lower-inclusive and 1.0 falls in the last one."""
        assert regional_encoding(coord) == expected

    def test_out_of_range(self):
        """Coordinates outside [0, 1] are rejected."""
        with pytest.raises(GraphValidationError):
            regional_encoding(1.01)

    def test_stored_values_are_spread_over_unit_interval(self):
        """Stored codes keep their order and span [0, 1]."""
        stored = [code.stored for code in RegionCode]
        assert stored == sorted(stored)
        assert stored[0] == 0.0
        assert stored[-1] == 1.0


class TestNormalizeBox:
    """The 9-d node vector."""

    def test_known_box(self):
        """Coordinates are divided by the larger side and area by the page area."""
        vector = normalize_box(BBox(0, 0, 100, 50), (200, 100))
        assert vector.as_list()[:5] == [0.0, 0.0, 0.5, 0.25, 0.25]
        assert vector.r_xmin == RegionCode.FIRST.stored
        assert vector.r_ymax == RegionCode.SECOND.stored
        assert vector.r_xmax == RegionCode.THIRD.stored

    def test_full_page_box(self):
        """A box covering the page has area 1."""
        vector = normalize_box(BBox(0, 0, 100, 100), (100, 100))
        assert vector.area == 1.0
        assert vector.nxmax == 1.0

    def test_degenerate_box_names_node(self):
        """Zero-width boxes fail with the node index in the message."""
        with pytest.raises(GraphValidationError) as excinfo:
            normalize_box(BBox(10, 10, 10, 20), (100, 100), node_index=7)
        assert excinfo.value.node_index == 7
        assert "node 7" in str(excinfo.value)

    def test_box_outside_image(self):
        """Boxes beyond the image extent are rejected."""
        with pytest.raises(GraphValidationError):
            normalize_box(BBox(0, 0, 120, 20), (100, 100))

    def test_clamp_keeps_one_pixel(self):
        """Clamping a box past the border keeps at least one pixel per side."""
        clamped = BBox(150, 10, 160, 10.2).clamp_to((100, 100))
        assert clamped.width >= 1.0
        assert clamped.height >= 1.0
        clamped.validate((100, 100))


class TestRelativePosition:
    """Relative-position tokens."""

    def test_directions(self):
        """Disjoint boxes resolve by the dominant displacement axis."""
        src = BBox(40, 40, 60, 60)
        assert relative_position(src, BBox(80, 45, 90, 55)) == RelativePosition.HOR_INTERSECT
        assert relative_position(src, BBox(80, 70, 90, 80)) == RelativePosition.RIGHT
        assert relative_position(src, BBox(0, 0, 10, 30)) == RelativePosition.LEFT
        assert relative_position(src, BBox(61, 90, 70, 99)) == RelativePosition.BOTTOM
        assert relative_position(src, BBox(62, 0, 64, 10)) == RelativePosition.TOP

    def test_intersections(self):
        """Overlap on both axes wins over single-axis overlap."""
        src = BBox(40, 40, 60, 60)
        assert relative_position(src, BBox(50, 50, 70, 70)) == RelativePosition.SQR_INTERSECT
        assert relative_position(src, BBox(45, 80, 55, 90)) == RelativePosition.VERT_INTERSECT

    def test_touching_boxes_do_not_intersect(self):
        """Shared edges are not overlaps."""
        assert relative_position(BBox(0, 0, 10, 10), BBox(10, 0, 20, 10)) == RelativePosition.HOR_INTERSECT
        assert relative_position(BBox(0, 0, 10, 10), BBox(10, 10, 20, 20)) == RelativePosition.RIGHT

    def test_matches_brute_force(self):
        """Random box pairs agree with a direct interval computation."""
        rng = np.random.default_rng(3)
        for _ in range(500):
            src, dst = _random_box(rng, 200), _random_box(rng, 200)
            assert relative_position(src, dst) == _brute_force_relpos(src, dst)


class TestEdgeGeometry:
    """The edge vector."""

    def test_axis_aligned_right(self):
        """A destination straight to the right at distance 0.5."""
        edge = edge_geometry(BBox(0, 40, 20, 60), BBox(50, 40, 70, 60), (100, 100))
        assert edge.theta == 0.0
        assert edge.dist == pytest.approx(0.5, abs=1e-12)
        assert edge.polar_onehot.index(1.0) == polar_sector(0.0)
        assert edge.relpos_onehot.index(1.0) == RelativePosition.HOR_INTERSECT.index

    def test_identical_centres(self):
        """Coincident centres give theta 0, dist 0 and the sector of angle 0."""
        edge = edge_geometry(BBox(10, 10, 30, 30), BBox(15, 15, 25, 25), (100, 100))
        assert (edge.theta, edge.dist) == (0.0, 0.0)
        assert edge.polar_onehot.index(1.0) == polar_sector(0.0)

    def test_theta_pi_falls_in_last_sector(self):
        """The upper bound of the angle range maps into the last sector."""
        assert polar_sector(math.pi) == 5
        assert polar_sector(-math.pi) == 0

    def test_y_grows_downward(self):
        """A destination below the source has a positive angle."""
        edge = edge_geometry(BBox(40, 0, 60, 10), BBox(40, 80, 60, 90), (100, 100))
        assert edge.theta == pytest.approx(math.pi / 2)

    def test_width_and_one_hots(self):
        """Edge vectors are 15 wide with exactly one hot entry per block."""
        rng = np.random.default_rng(11)
        for _ in range(200):
            src, dst = _random_box(rng, 200), _random_box(rng, 200)
            edge = edge_geometry(src, dst, (200, 200))
            assert len(edge.as_list()) == edge_feature_dim() == 15
            assert sum(edge.polar_onehot) == 1.0
            assert sum(edge.relpos_onehot) == 1.0
            assert 0.0 <= edge.dist <= 1.0
            assert -math.pi <= edge.theta <= math.pi

    def test_matches_direct_formula(self):
        """Angle, distance and sector agree with a direct recomputation."""
        rng = np.random.default_rng(5)
        size = (300.0, 200.0)
        for _ in range(300):
            src, dst = _random_box(rng, 200), _random_box(rng, 200)
            edge = edge_geometry(src, dst, size)
            dx = ((dst.xmin + dst.xmax) - (src.xmin + src.xmax)) / 2 / 300.0
            dy = ((dst.ymin + dst.ymax) - (src.ymin + src.ymax)) / 2 / 300.0
            theta = math.atan2(dy, dx)
            assert edge.theta == pytest.approx(theta, abs=1e-9)
            assert edge.dist == pytest.approx(min(math.hypot(dx, dy), 1.0), abs=1e-9)
            sector = min(math.floor((edge.theta + math.pi) / (2 * math.pi / 6)), 5)
            assert edge.polar_onehot.index(1.0) == sector


class TestBoxIou:
    """Intersection over union."""

    def test_identical(self):
        assert box_iou(BBox(0, 0, 10, 10), BBox(0, 0, 10, 10)) == 1.0

    def test_disjoint(self):
        assert box_iou(BBox(0, 0, 10, 10), BBox(20, 20, 30, 30)) == 0.0

    def test_half_overlap(self):
        """Two 10x10 boxes shifted by 5 share a third of their union."""
        assert box_iou(BBox(0, 0, 10, 10), BBox(5, 0, 15, 10)) == pytest.approx(1 / 3)
