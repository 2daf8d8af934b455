"""Graph-to-tensor conversion and feature ablation switches."""

from collections.abc import Sequence
from dataclasses import asdict, dataclass, fields

import numpy as np
import torch
from torch_geometric.data import Batch, Data

from ..custom_types.common import DatasetName, LinkLabel, entity_labels
from ..custom_types.errors import ConfigurationError
from ..graph.document_graph import DocumentGraph
from ..graph.geometry import NODE_FEATURE_DIM, edge_feature_dim

# Column layout of the node vector
BBOX_COLUMNS = (0, 1, 2, 3)
AREA_COLUMNS = (4,)
REGIONAL_COLUMNS = (5, 6, 7, 8)

IGNORE_INDEX = -100


@dataclass(frozen=True)
class AblationConfig:
    """On/off switches for feature groups and modalities.

    A disabled feature group has its columns zeroed; no width ever changes.
    """

    distance: bool = True
    angle: bool = True
    polar: bool = True
    relpos: bool = True
    bbox: bool = True
    area: bool = True
    regional: bool = True
    geometric: bool = True
    visual: bool = True

    def node_mask(self) -> np.ndarray:
        mask = np.ones(NODE_FEATURE_DIM, dtype=np.float64)
        for enabled, columns in (
            (self.bbox, BBOX_COLUMNS),
            (self.area, AREA_COLUMNS),
            (self.regional, REGIONAL_COLUMNS),
        ):
            if not enabled:
                mask[list(columns)] = 0.0
        return mask

    def edge_mask(self, polar_bins: int) -> np.ndarray:
        width = edge_feature_dim(polar_bins)
        mask = np.ones(width, dtype=np.float64)
        if not self.angle:
            mask[0] = 0.0
        if not self.distance:
            mask[1] = 0.0
        if not self.polar:
            mask[2 : 2 + polar_bins] = 0.0
        if not self.relpos:
            mask[2 + polar_bins :] = 0.0
        return mask

    def disabled(self) -> list[str]:
        return [f.name for f in fields(self) if not getattr(self, f.name)]

    def as_dict(self) -> dict[str, bool]:
        return asdict(self)

    @classmethod
    def without(cls, *names: str) -> "AblationConfig":
        """Return a config with the named switches turned off.

        Raises:
            ConfigurationError: If a name is not a switch
        """
        known = {f.name for f in fields(cls)}
        unknown = set(names) - known
        if unknown:
            raise ConfigurationError(f"unknown ablation switches {sorted(unknown)}")
        return cls(**{name: False for name in names})


EDGE_SWITCHES = ("distance", "angle", "polar", "relpos")
NODE_SWITCHES = ("bbox", "area", "regional")


def ablation_rows(table: str) -> dict[str, AblationConfig]:
    """Named rows of an ablation table.

    Args:
        table: ``features`` (all, then one geometric feature off at a time),
            ``node-edge`` (edge features only, node features only) or
            ``modalities`` (visual only, geometric edge features only, both)

    Raises:
        ConfigurationError: If the table name is unknown
    """
    if table == "features":
        rows = {"all": AblationConfig()}
        rows.update({f"no_{name}": AblationConfig.without(name) for name in (*EDGE_SWITCHES, *NODE_SWITCHES)})
        return rows
    if table == "node-edge":
        return {
            "edge_only": AblationConfig.without(*NODE_SWITCHES),
            "node_only": AblationConfig.without(*EDGE_SWITCHES),
        }
    if table == "modalities":
        return {
            "visual_only": AblationConfig.without("geometric"),
            "geometric_only": AblationConfig.without("visual", *NODE_SWITCHES),
            "combined": AblationConfig(),
        }
    raise ConfigurationError(f"unknown ablation table {table!r}")


def graph_to_data(
    graph: DocumentGraph,
    dataset: DatasetName,
    ablation: AblationConfig | None = None,
    dtype: torch.dtype = torch.float32,
) -> Data:
    """Convert a labelled graph to a torch_geometric ``Data`` object.

    Fields:
        x: masked node vectors (N, 9)
        edge_index: (2, E)
        edge_attr: masked edge vectors (E, 2 + polar_bins + 7)
        edge_polar: raw polar one-hot (E, polar_bins)
        edge_dist: raw centre distance (E,), used for gating
        y: entity class index, IGNORE_INDEX when unlabelled
        edge_y: 1 for positive links, 0 for none, IGNORE_INDEX when unlabelled
    """
    ablation = ablation or AblationConfig()
    bins = graph.polar_bins
    node_values = graph.node_matrix() * ablation.node_mask()
    raw_edges = graph.edge_matrix()
    edge_values = raw_edges * ablation.edge_mask(bins)

    classes = {name: index for index, name in enumerate(entity_labels(dataset))}
    y = [
        IGNORE_INDEX if node.entity_label is None else classes[node.entity_label]
        for node in graph.nodes
    ]
    edge_y = [
        IGNORE_INDEX
        if edge.link_label is None
        else int(edge.link_label != LinkLabel.NONE.value)
        for edge in graph.edges
    ]
    return Data(
        x=torch.as_tensor(node_values, dtype=dtype),
        edge_index=torch.as_tensor(graph.edge_index(), dtype=torch.long),
        edge_attr=torch.as_tensor(edge_values, dtype=dtype),
        edge_polar=torch.as_tensor(raw_edges[:, 2 : 2 + bins], dtype=dtype),
        edge_dist=torch.as_tensor(raw_edges[:, 1], dtype=dtype),
        y=torch.as_tensor(y, dtype=torch.long),
        edge_y=torch.as_tensor(edge_y, dtype=torch.long),
        num_nodes=graph.num_nodes,
    )


def collate(items: Sequence[Data]) -> Batch:
    """Merge several documents into one disconnected batch graph."""
    return Batch.from_data_list(list(items))
