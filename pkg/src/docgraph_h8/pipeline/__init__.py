"""Pipeline package.

Experiment configuration, logging setup, rendering and the ``docgraph``
command line.
"""

__all__ = [
    "ExperimentConfig",
    "DataConfig",
    "GraphConfig",
    "load_config",
    "dump_config",
    "config_from_dict",
    "configure_logging",
    "render_prediction",
    "RenderResult",
]

from .config import DataConfig, ExperimentConfig, GraphConfig, config_from_dict, dump_config, load_config
from .logging import configure_logging
from .render import RenderResult, render_prediction
