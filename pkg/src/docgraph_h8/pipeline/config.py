"""Experiment configuration.

An experiment is described by one YAML document. Every default is written out
by :func:`dump_config`, so a persisted config fully determines a run.
"""

import dataclasses
import os
from collections.abc import Mapping
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import torch
import yaml

from ..custom_types.common import DatasetName
from ..custom_types.errors import ConfigurationError
from ..graph.document_graph import DEFAULT_K
from ..graph.geometry import DEFAULT_POLAR_BINS
from ..models.features import AblationConfig
from ..models.stage1 import StageOneConfig
from ..models.stage2 import StageTwoConfig
from ..models.visual import VisualEncoderConfig

FORMAT_VERSION = 1
DATA_ROOT_ENV = "DOCGRAPH_DATA_ROOT"
CONFIG_FILE = "config.yaml"

_DTYPES = {"float32": torch.float32, "float64": torch.float64}


@dataclass(frozen=True)
class DataConfig:
    """Dataset choice and locations."""

    dataset: str = DatasetName.FUNSD.value
    funsd_root: str = "data/funsd"
    rvlcdip_root: str = "data/rvlcdip_invoices"
    val_fraction: float = 0.1
    rvlcdip_fractions: tuple[float, float, float] = (0.7, 0.1, 0.2)
    limit_docs: int | None = None
    workers: int = 1

    @property
    def root(self) -> str:
        """Root of the selected dataset."""
        return self.funsd_root if DatasetName(self.dataset) == DatasetName.FUNSD else self.rvlcdip_root

    def with_root(self, root: str) -> "DataConfig":
        if DatasetName(self.dataset) == DatasetName.FUNSD:
            return dataclasses.replace(self, funsd_root=root)
        return dataclasses.replace(self, rvlcdip_root=root)


@dataclass(frozen=True)
class GraphConfig:
    k: int = DEFAULT_K
    polar_bins: int = DEFAULT_POLAR_BINS


@dataclass(frozen=True)
class ExperimentConfig:
    """Complete description of one experiment.

    ``seed`` is the single source of randomness: it drives the data split and
    is copied into both stage configs.
    """

    data: DataConfig = field(default_factory=DataConfig)
    graph: GraphConfig = field(default_factory=GraphConfig)
    stage1: StageOneConfig = field(default_factory=StageOneConfig)
    visual: VisualEncoderConfig = field(default_factory=VisualEncoderConfig)
    stage2: StageTwoConfig = field(default_factory=StageTwoConfig)
    ablation: AblationConfig = field(default_factory=AblationConfig)
    seed: int = 42
    out_dir: str = "runs/default"
    dtype: str = "float32"

    def __post_init__(self) -> None:
        # stage seeds always follow the experiment seed
        object.__setattr__(self, "stage1", dataclasses.replace(self.stage1, seed=self.seed))
        object.__setattr__(self, "stage2", dataclasses.replace(self.stage2, seed=self.seed))

    @property
    def dataset(self) -> DatasetName:
        return DatasetName(self.data.dataset)

    @property
    def torch_dtype(self) -> torch.dtype:
        return _DTYPES[self.dtype]

    def validate(self) -> None:
        """Check every section.

        Raises:
            ConfigurationError: If any value is out of range
        """
        try:
            DatasetName(self.data.dataset)
        except ValueError:
            raise ConfigurationError(
                f"unknown dataset {self.data.dataset!r}; expected one of {[d.value for d in DatasetName]}",
                stage="config",
            ) from None
        if not 0.0 <= self.data.val_fraction < 1.0:
            raise ConfigurationError("data.val_fraction must be in [0, 1)", stage="config")
        if len(self.data.rvlcdip_fractions) != 3 or abs(sum(self.data.rvlcdip_fractions) - 1.0) > 1e-9:
            raise ConfigurationError("data.rvlcdip_fractions must be three values summing to 1", stage="config")
        if self.data.limit_docs is not None and self.data.limit_docs < 1:
            raise ConfigurationError("data.limit_docs must be positive", stage="config")
        if self.data.workers < 1:
            raise ConfigurationError("data.workers must be positive", stage="config")
        if self.graph.k < 1 or self.graph.polar_bins < 1:
            raise ConfigurationError("graph.k and graph.polar_bins must be positive", stage="config")
        if self.dtype not in _DTYPES:
            raise ConfigurationError(f"dtype must be one of {sorted(_DTYPES)}", stage="config")
        self.stage1.validate()
        self.visual.validate()
        self.stage2.validate()

    def with_overrides(
        self,
        dataset: str | None = None,
        seed: int | None = None,
        workers: int | None = None,
        limit_docs: int | None = None,
        out_dir: str | None = None,
    ) -> "ExperimentConfig":
        """Apply command-line overrides; None leaves a value unchanged."""
        data = self.data
        if dataset is not None:
            data = dataclasses.replace(data, dataset=dataset)
        if workers is not None:
            data = dataclasses.replace(data, workers=workers)
        if limit_docs is not None:
            data = dataclasses.replace(data, limit_docs=limit_docs)
        return dataclasses.replace(
            self,
            data=data,
            seed=self.seed if seed is None else seed,
            out_dir=self.out_dir if out_dir is None else out_dir,
        )

    def with_environment(self, environ: Mapping[str, str] | None = None) -> "ExperimentConfig":
        """Point the selected dataset at ``$DOCGRAPH_DATA_ROOT`` when it is set."""
        environ = os.environ if environ is None else environ
        root = environ.get(DATA_ROOT_ENV)
        if not root:
            return self
        return dataclasses.replace(self, data=self.data.with_root(root))

    def to_dict(self) -> dict[str, Any]:
        stage1 = asdict(self.stage1)
        stage2 = asdict(self.stage2)
        del stage1["seed"], stage2["seed"]
        stage2["head_widths"] = list(stage2["head_widths"])
        data = asdict(self.data)
        data["rvlcdip_fractions"] = list(data["rvlcdip_fractions"])
        return {
            "format_version": FORMAT_VERSION,
            "seed": self.seed,
            "out_dir": self.out_dir,
            "dtype": self.dtype,
            "data": data,
            "graph": asdict(self.graph),
            "stage1": stage1,
            "visual": asdict(self.visual),
            "stage2": stage2,
            "ablation": self.ablation.as_dict(),
        }


def _section(cls: type, raw: Any, name: str, excluded: tuple[str, ...] = ()) -> Any:
    if raw is None:
        return cls()
    if not isinstance(raw, Mapping):
        raise ConfigurationError(f"section {name!r} must be a mapping", stage="config")
    known = {f.name: f for f in fields(cls) if f.name not in excluded}
    unknown = sorted(set(raw) - set(known))
    if unknown:
        raise ConfigurationError(f"unknown keys in {name!r}: {unknown}", stage="config")
    values = {
        key: tuple(value) if isinstance(value, list) else value for key, value in raw.items()
    }
    try:
        return cls(**values)
    except TypeError as e:
        raise ConfigurationError(f"invalid section {name!r}: {e}", stage="config") from e


def config_from_dict(raw: Mapping[str, Any]) -> ExperimentConfig:
    """Build and validate a config from its YAML mapping.

    Raises:
        ConfigurationError: On unknown keys, a wrong format version or invalid values
    """
    version = raw.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise ConfigurationError(f"unsupported config format_version {version}", stage="config")
    sections = {
        "data": DataConfig,
        "graph": GraphConfig,
        "stage1": StageOneConfig,
        "visual": VisualEncoderConfig,
        "stage2": StageTwoConfig,
        "ablation": AblationConfig,
    }
    scalars = {"format_version", "seed", "out_dir", "dtype"}
    unknown = sorted(set(raw) - set(sections) - scalars)
    if unknown:
        raise ConfigurationError(f"unknown top-level keys: {unknown}", stage="config")
    parts = {
        name: _section(cls, raw.get(name), name, excluded=("seed",)) for name, cls in sections.items()
    }
    defaults = ExperimentConfig()
    config = ExperimentConfig(
        **parts,
        seed=int(raw.get("seed", defaults.seed)),
        out_dir=str(raw.get("out_dir", defaults.out_dir)),
        dtype=str(raw.get("dtype", defaults.dtype)),
    )
    config.validate()
    return config


def load_config(path: Path | None = None) -> ExperimentConfig:
    """Read a config file, or return the defaults when ``path`` is None.

    Raises:
        ConfigurationError: If the file is missing, not YAML or invalid
    """
    if path is None:
        return ExperimentConfig()
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as e:
        raise ConfigurationError(f"cannot read config {path}: {e}", stage="config") from e
    if raw is None:
        raw = {}
    if not isinstance(raw, Mapping):
        raise ConfigurationError(f"config {path} must be a mapping", stage="config")
    return config_from_dict(raw)


def dump_config(config: ExperimentConfig, path: Path) -> Path:
    """Write ``config`` with every value spelled out."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(yaml.safe_dump(config.to_dict(), sort_keys=False), encoding="utf-8")
    return path
