"""k-nearest-neighbour edge construction."""

import numpy as np
import structlog
from scipy.spatial.distance import cdist

from ..custom_types.errors import ConfigurationError

logger = structlog.get_logger(__name__)


def knn_edges(centers: np.ndarray, k: int) -> list[tuple[int, int]]:
    """Directed kNN edges over box centres.

    Every node gets exactly ``min(k, N - 1)`` out-edges to its nearest
    neighbours by Euclidean distance; equal distances are resolved in favour
    of the lower node id.

    Args:
        centers: Array of shape (N, 2) with normalized box centres
        k: Neighbour count

    Returns:
        Edges as (src, dst) pairs, grouped by source in ascending order and,
        within a source, ordered by distance

    Raises:
        ConfigurationError: If ``k`` is not positive
    """
    if k < 1:
        raise ConfigurationError(f"k must be positive, got {k}", stage="graph")
    points = np.asarray(centers, dtype=np.float64).reshape(-1, 2)
    count = points.shape[0]
    if count < 2:
        logger.warning("Graph has fewer than two nodes, no edges built", nodes=count)
        return []

    distances = cdist(points, points, metric="euclidean")
    ids = np.arange(count)
    degree = min(k, count - 1)
    edges: list[tuple[int, int]] = []
    for src in range(count):
        # lexsort sorts by the last key first: distance, then id
        order = np.lexsort((ids, distances[src]))
        neighbours = [int(j) for j in order if j != src][:degree]
        edges.extend((src, dst) for dst in neighbours)
    return edges
