"""Ground-truth labels for graph nodes and edges."""

from collections import defaultdict
from collections.abc import Sequence
from itertools import combinations

import structlog

from ..custom_types.common import LinkLabel, LinkTask
from ..custom_types.errors import AnnotationError
from ..graph.document_graph import DocumentGraph, LinkCoverage, build_graph
from ..graph.geometry import DEFAULT_POLAR_BINS
from .records import DocumentRecord, EntityRecord

logger = structlog.get_logger(__name__)

Pair = frozenset[int]


def ground_truth_pairs(records: Sequence[EntityRecord], task: LinkTask) -> set[Pair]:
    """Unordered node-index pairs that are linked in the annotation.

    Args:
        records: Entity records in node order
        task: Key-value linking or same-table membership

    Returns:
        Set of two-element frozensets of node indices

    Raises:
        AnnotationError: If a link references an id missing from the document
    """
    if task == LinkTask.TABLE:
        groups: dict[int, list[int]] = defaultdict(list)
        for index, record in enumerate(records):
            if record.table_id is not None:
                groups[record.table_id].append(index)
        return {frozenset(pair) for members in groups.values() for pair in combinations(members, 2)}

    index_of = {record.id: index for index, record in enumerate(records)}
    pairs: set[Pair] = set()
    for record in records:
        for from_id, to_id in record.links:
            if from_id not in index_of or to_id not in index_of:
                raise AnnotationError(f"link ({from_id}, {to_id}) references a missing entity")
            if from_id != to_id:
                pairs.add(frozenset((index_of[from_id], index_of[to_id])))
    return pairs


def attach_labels(
    graph: DocumentGraph, records: Sequence[EntityRecord], task: LinkTask
) -> DocumentGraph:
    """Copy entity labels onto nodes and link labels onto edges.

    An edge is positive when its unordered endpoint pair is linked in the
    annotation, so both directions of a linked pair are labelled. Pairs missing
    from the kNN graph are not added; they only lower the reported coverage.

    Args:
        graph: Graph built from the same records' boxes, in the same order
        records: Entity records in node order
        task: Key-value linking or same-table membership

    Returns:
        A labelled copy of ``graph`` carrying its link coverage

    Raises:
        AnnotationError: If the record count differs from the node count
    """
    if len(records) != graph.num_nodes:
        raise AnnotationError(
            f"document {graph.doc_id!r} has {len(records)} records but {graph.num_nodes} nodes"
        )
    positive = LinkLabel.KEY_VALUE if task == LinkTask.KEY_VALUE else LinkLabel.TABLE
    gt_pairs = ground_truth_pairs(records, task)

    link_labels: list[str | None] = []
    edge_pairs: set[Pair] = set()
    for edge in graph.edges:
        pair = frozenset((edge.src, edge.dst))
        edge_pairs.add(pair)
        link_labels.append(positive.value if pair in gt_pairs else LinkLabel.NONE.value)

    coverage = LinkCoverage(covered_pairs=len(gt_pairs & edge_pairs), total_pairs=len(gt_pairs))
    return graph.with_labels([record.label for record in records], link_labels, coverage)


def build_labeled_graph(
    document: DocumentRecord,
    task: LinkTask,
    k: int,
    polar_bins: int = DEFAULT_POLAR_BINS,
) -> DocumentGraph:
    """Build the kNN graph of an annotated page and attach its labels."""
    graph = build_graph(
        [entity.box for entity in document.entities],
        document.image_size,
        k=k,
        polar_bins=polar_bins,
        doc_id=document.doc_id,
        image_path=document.image_path,
        texts=[entity.text for entity in document.entities],
        tables=document.tables,
    )
    return attach_labels(graph, document.entities, task)


def corpus_coverage(graphs: Sequence[DocumentGraph]) -> LinkCoverage:
    """Sum the per-document coverage counts of a corpus."""
    total = LinkCoverage(0, 0)
    for graph in graphs:
        if graph.link_coverage is not None:
            total = total + graph.link_coverage
    return total
