"""Node and edge geometry.

Pure functions turning pixel boxes into the 9-d node vector and the
(2 + polar_bins + 7)-d edge vector. Everything is computed in float64 on
coordinates normalized by the larger image side, with the image frame
convention (y grows downward).
"""

import math
from dataclasses import dataclass

import numpy as np
from shapely.geometry import box as shapely_box

from ..custom_types.common import RegionCode, RelativePosition
from ..custom_types.errors import GraphValidationError

ImageSize = tuple[float, float]

NODE_FEATURE_DIM = 9
RELPOS_DIM = len(RelativePosition)
DEFAULT_POLAR_BINS = 6


def edge_feature_dim(polar_bins: int = DEFAULT_POLAR_BINS) -> int:
    """Width of an edge vector: theta, dist, polar one-hot, relative-position one-hot."""
    return 2 + polar_bins + RELPOS_DIM


@dataclass(frozen=True, slots=True)
class BBox:
    """Axis-aligned text-region rectangle in pixel coordinates."""

    xmin: float
    ymin: float
    xmax: float
    ymax: float

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return ((self.xmin + self.xmax) / 2.0, (self.ymin + self.ymax) / 2.0)

    def as_list(self) -> list[float]:
        return [self.xmin, self.ymin, self.xmax, self.ymax]

    def validate(self, image_size: ImageSize | None = None, node_index: int | None = None) -> None:
        """Check the box invariants.

        Args:
            image_size: Optional (width, height) the box must lie inside
            node_index: Node index reported in the error message

        Raises:
            GraphValidationError: If the box is degenerate, negative or outside the image
        """
        coords = self.as_list()
        if not all(math.isfinite(c) for c in coords):
            raise GraphValidationError(f"non-finite box {coords}", node_index)
        if self.xmin >= self.xmax or self.ymin >= self.ymax:
            raise GraphValidationError(f"degenerate box {coords}", node_index)
        if min(coords) < 0:
            raise GraphValidationError(f"negative coordinate in box {coords}", node_index)
        if image_size is not None:
            width, height = image_size
            if self.xmax > width or self.ymax > height:
                raise GraphValidationError(
                    f"box {coords} exceeds image extent {width}x{height}", node_index
                )

    def clamp_to(self, image_size: ImageSize) -> "BBox":
        """Clip the box to the image and widen it to at least one pixel per side."""
        width, height = image_size
        xmin = min(max(self.xmin, 0.0), width)
        xmax = min(max(self.xmax, 0.0), width)
        ymin = min(max(self.ymin, 0.0), height)
        ymax = min(max(self.ymax, 0.0), height)
        xmin, xmax = min(xmin, xmax), max(xmin, xmax)
        ymin, ymax = min(ymin, ymax), max(ymin, ymax)
        if xmax - xmin < 1.0:
            xmin, xmax = _widen(xmin, width)
        if ymax - ymin < 1.0:
            ymin, ymax = _widen(ymin, height)
        return BBox(xmin, ymin, xmax, ymax)

    def scaled(self, factor: float) -> "BBox":
        return BBox(self.xmin * factor, self.ymin * factor, self.xmax * factor, self.ymax * factor)

    def union(self, other: "BBox") -> "BBox":
        return BBox(
            min(self.xmin, other.xmin),
            min(self.ymin, other.ymin),
            max(self.xmax, other.xmax),
            max(self.ymax, other.ymax),
        )

    @classmethod
    def from_list(cls, values: list[float] | tuple[float, ...]) -> "BBox":
        if len(values) != 4:
            raise GraphValidationError(f"box needs 4 coordinates, got {len(values)}")
        return cls(*(float(v) for v in values))


def _widen(low: float, limit: float) -> tuple[float, float]:
    if low + 1.0 <= limit:
        return low, low + 1.0
    return max(limit - 1.0, 0.0), limit


@dataclass(frozen=True, slots=True)
class NodeGeomVector:
    """Normalized box, relative area and regional codes of one node."""

    nxmin: float
    nymin: float
    nxmax: float
    nymax: float
    area: float
    r_xmin: float
    r_ymin: float
    r_xmax: float
    r_ymax: float

    def as_list(self) -> list[float]:
        return [
            self.nxmin,
            self.nymin,
            self.nxmax,
            self.nymax,
            self.area,
            self.r_xmin,
            self.r_ymin,
            self.r_xmax,
            self.r_ymax,
        ]

    @classmethod
    def from_list(cls, values: list[float]) -> "NodeGeomVector":
        if len(values) != NODE_FEATURE_DIM:
            raise GraphValidationError(f"node vector needs 9 values, got {len(values)}")
        return cls(*(float(v) for v in values))


@dataclass(frozen=True, slots=True)
class EdgeGeomVector:
    """Angle, distance, polar sector and relative-position token of one edge."""

    theta: float
    dist: float
    polar_onehot: tuple[float, ...]
    relpos_onehot: tuple[float, ...]

    def as_list(self) -> list[float]:
        return [self.theta, self.dist, *self.polar_onehot, *self.relpos_onehot]

    @property
    def polar_bins(self) -> int:
        return len(self.polar_onehot)

    @classmethod
    def from_list(cls, values: list[float], polar_bins: int = DEFAULT_POLAR_BINS) -> "EdgeGeomVector":
        if len(values) != edge_feature_dim(polar_bins):
            raise GraphValidationError(
                f"edge vector needs {edge_feature_dim(polar_bins)} values, got {len(values)}"
            )
        floats = [float(v) for v in values]
        return cls(
            theta=floats[0],
            dist=floats[1],
            polar_onehot=tuple(floats[2 : 2 + polar_bins]),
            relpos_onehot=tuple(floats[2 + polar_bins :]),
        )


def regional_encoding(coord: float) -> RegionCode:
    """Quarter-section code of a normalized coordinate.

    Sections are lower-inclusive and upper-exclusive, except that 1.0 belongs
    to the last one.

    Args:
        coord: Normalized coordinate in [0, 1]

    Returns:
        The section code (11, 12, 21 or 22)

    Raises:
        GraphValidationError: If ``coord`` lies outside [0, 1]
    """
    if not 0.0 <= coord <= 1.0:
        raise GraphValidationError(f"normalized coordinate {coord} outside [0, 1]")
    section = min(int(coord * 4.0), 3)
    return list(RegionCode)[section]


def normalize_box(box: BBox, image_size: ImageSize, node_index: int | None = None) -> NodeGeomVector:
    """Build the 9-d node vector of a box.

    Args:
        box: Pixel box inside ``image_size``
        image_size: (width, height) of the page in pixels
        node_index: Node index reported in validation errors

    Returns:
        The node geometry vector

    Raises:
        GraphValidationError: If the box is degenerate or outside the image
    """
    box.validate(image_size, node_index)
    width, height = image_size
    scale = max(width, height)
    coords = [box.xmin / scale, box.ymin / scale, box.xmax / scale, box.ymax / scale]
    regions = [regional_encoding(c).stored for c in coords]
    return NodeGeomVector(*coords, box.area / (width * height), *regions)


def relative_position(src: BBox, dst: BBox) -> RelativePosition:
    """Relative-position token of ``dst`` seen from ``src``.

    Range overlaps are strict, so boxes that merely touch do not intersect.
    Without any overlap the dominant axis of the centre displacement decides,
    horizontal on ties.
    """
    x_overlap = src.xmin < dst.xmax and dst.xmin < src.xmax
    y_overlap = src.ymin < dst.ymax and dst.ymin < src.ymax
    if x_overlap and y_overlap:
        return RelativePosition.SQR_INTERSECT
    if x_overlap:
        return RelativePosition.VERT_INTERSECT
    if y_overlap:
        return RelativePosition.HOR_INTERSECT

    (sx, sy), (dx, dy) = src.center, dst.center
    delta_x, delta_y = dx - sx, dy - sy
    if abs(delta_x) >= abs(delta_y):
        return RelativePosition.RIGHT if delta_x > 0 else RelativePosition.LEFT
    return RelativePosition.BOTTOM if delta_y > 0 else RelativePosition.TOP


def polar_sector(theta: float, polar_bins: int = DEFAULT_POLAR_BINS) -> int:
    """Index of the angular sector containing ``theta`` (radians in [-pi, pi])."""
    width = 2.0 * math.pi / polar_bins
    return min(int(math.floor((theta + math.pi) / width)), polar_bins - 1)


def edge_geometry(
    src: BBox,
    dst: BBox,
    image_size: ImageSize,
    polar_bins: int = DEFAULT_POLAR_BINS,
) -> EdgeGeomVector:
    """Build the edge vector of ``src -> dst``.

    Identical centres give theta = 0 and dist = 0, which falls in the sector of angle 0.

    Args:
        src: Source box in pixels
        dst: Destination box in pixels
        image_size: (width, height) of the page in pixels
        polar_bins: Number of angular sectors

    Returns:
        The edge geometry vector
    """
    scale = max(image_size)
    (sx, sy), (dx, dy) = src.center, dst.center
    delta_x = (dx - sx) / scale
    delta_y = (dy - sy) / scale
    theta = math.atan2(delta_y, delta_x)
    dist = min(math.hypot(delta_x, delta_y), 1.0)

    polar = [0.0] * polar_bins
    polar[polar_sector(theta, polar_bins)] = 1.0
    relpos = [0.0] * RELPOS_DIM
    relpos[relative_position(src, dst).index] = 1.0
    return EdgeGeomVector(theta, dist, tuple(polar), tuple(relpos))


def normalized_centers(boxes: list[BBox], image_size: ImageSize) -> np.ndarray:
    """Box centres divided by the larger image side, shape (N, 2)."""
    scale = max(image_size)
    if not boxes:
        return np.zeros((0, 2), dtype=np.float64)
    return np.asarray([box.center for box in boxes], dtype=np.float64) / scale


def box_iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two boxes."""
    first = shapely_box(a.xmin, a.ymin, a.xmax, a.ymax)
    second = shapely_box(b.xmin, b.ymin, b.xmax, b.ymax)
    union = first.union(second).area
    if union <= 0:
        return 0.0
    return float(first.intersection(second).area / union)
