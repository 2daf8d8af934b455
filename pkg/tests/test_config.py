"""Tests for experiment configuration files."""

from pathlib import Path

import pytest
import torch
import yaml

from docgraph_h8.custom_types.common import DatasetName
from docgraph_h8.custom_types.errors import ConfigurationError
from docgraph_h8.pipeline import ExperimentConfig, config_from_dict, dump_config, load_config

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


class TestExperimentConfig:
    """Defaults, overrides and validation."""

    def test_defaults(self):
        config = load_config(None)
        assert config.dataset == DatasetName.FUNSD
        assert config.graph.k == 10
        assert config.stage2.hidden_dim == 1500
        assert config.visual.embed_dim == 1448
        assert config.torch_dtype == torch.float32

    def test_seed_reaches_both_stages(self):
        config = ExperimentConfig(seed=7)
        assert config.stage1.seed == 7
        assert config.stage2.seed == 7
        assert config.with_overrides(seed=9).stage2.seed == 9

    def test_overrides(self):
        config = ExperimentConfig().with_overrides(dataset="rvlcdip", workers=4, limit_docs=3, out_dir="runs/x")
        assert config.dataset == DatasetName.RVLCDIP
        assert (config.data.workers, config.data.limit_docs, config.out_dir) == (4, 3, "runs/x")

    def test_environment_replaces_selected_root(self):
        config = ExperimentConfig().with_overrides(dataset="rvlcdip")
        moved = config.with_environment({"DOCGRAPH_DATA_ROOT": "/data/invoices"})
        assert moved.data.rvlcdip_root == "/data/invoices"
        assert moved.data.funsd_root == config.data.funsd_root
        assert config.with_environment({}) == config

    def test_invalid_values(self):
        with pytest.raises(ConfigurationError):
            ExperimentConfig().with_overrides(dataset="cord").validate()
        with pytest.raises(ConfigurationError):
            config_from_dict({"dtype": "float16"})


class TestConfigFiles:
    """YAML round trips."""

    def test_dump_and_load_round_trip(self, tmp_path):
        config = ExperimentConfig(seed=5).with_overrides(dataset="rvlcdip", limit_docs=2)
        path = dump_config(config, tmp_path / "config.yaml")
        assert load_config(path) == config

    def test_dump_spells_out_every_section(self, tmp_path):
        raw = yaml.safe_load(dump_config(ExperimentConfig(), tmp_path / "c.yaml").read_text())
        assert list(raw) == [
            "format_version", "seed", "out_dir", "dtype", "data", "graph", "stage1", "visual", "stage2", "ablation",
        ]
        assert "seed" not in raw["stage1"]

    def test_unknown_key_is_rejected(self):
        with pytest.raises(ConfigurationError) as excinfo:
            config_from_dict({"stage1": {"margn": 1.0}})
        assert "margn" in str(excinfo.value)

    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigurationError):
            config_from_dict({"stage3": {}})

    def test_wrong_version(self):
        with pytest.raises(ConfigurationError):
            config_from_dict({"format_version": 2})

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_config(tmp_path / "absent.yaml")

    @pytest.mark.parametrize("name", ["default.yaml", "smoke.yaml"])
    def test_shipped_configs_are_valid(self, name):
        config = load_config(CONFIG_DIR / name)
        config.validate()
