"""Integration tests running the whole pipeline on synthetic corpora."""

import json

import pytest
import yaml

from docgraph_h8.custom_types.common import DatasetName
from docgraph_h8.evaluation import report_from_dump
from docgraph_h8.models import StageOneConfig, StageTwoConfig, VisualEncoderConfig
from docgraph_h8.pipeline.cli import run
from docgraph_h8.training import load_stage2, train_stage1, train_stage2

TINY_VISUAL = VisualEncoderConfig(crop_size=32, embed_dim=16, pretrained_weights="none", trainable=False)


def _tiny_config(path, dataset: str, root, out) -> None:
    """Write a config small enough for a CPU run of a few seconds."""
    config = {
        "seed": 42,
        "out_dir": str(out),
        "data": {
            "dataset": dataset,
            "funsd_root": str(root),
            "rvlcdip_root": str(root),
            "val_fraction": 0.4,
        },
        "stage1": {"epochs": 3, "graphs_per_batch": 2},
        "visual": {"crop_size": 32, "embed_dim": 16, "pretrained_weights": "none", "trainable": False},
        "stage2": {
            "hidden_dim": 8,
            "heads": 2,
            "dropout": 0.0,
            "head_widths": [8],
            "epochs": 3,
            "learning_rate": 0.01,
            "graphs_per_batch": 2,
        },
    }
    path.write_text(yaml.safe_dump(config), encoding="utf-8")


@pytest.mark.slow
class TestPipeline:
    """Every command in order."""

    def test_funsd_end_to_end(self, funsd_corpus, tmp_path, capsys):
        out = tmp_path / "run"
        config = tmp_path / "tiny.yaml"
        _tiny_config(config, "funsd", funsd_corpus, out)
        base = ["--config", str(config)]

        assert run(["build-graphs", *base]) == 0
        assert run(["train", "--stage", "1", *base]) == 0
        assert (out / "stage1" / "stage1.pt").exists()
        assert run(["train", "--stage", "2", *base]) == 0
        assert (out / "stage2" / "stage2.pt").exists()
        assert (out / "stage2" / "stage2_last.pt").exists()

        capsys.readouterr()
        assert run(["evaluate", "--split", "test", *base]) == 0
        headline = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert 0.0 <= headline["node_micro_f1"] <= 1.0
        assert headline["documents"] == 2
        report = json.loads((out / "eval" / "test" / "report.json").read_text())
        dump = json.loads((out / "eval" / "test" / "predictions.json").read_text())
        assert [doc["doc_id"] for doc in dump["documents"]] == ["form_100", "form_101"]
        assert report["node_micro_f1"] == headline["node_micro_f1"]

        image = tmp_path / "overlay.png"
        assert run(["render", "--doc-id", "form_100", "--image-out", str(image), *base]) == 0
        assert image.exists()

        capsys.readouterr()
        assert run(["inspect-checkpoint", "--checkpoint", str(out / "stage2" / "stage2_last.pt")]) == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["kind"] == "stage2"
        assert summary["dataset"] == "funsd"
        assert summary["stage1"]["sha256"]
        assert len(summary["loss_history"]) == 3

    def test_evaluation_report_rebuilds_from_dump(self, funsd_corpus, tmp_path):
        out = tmp_path / "run"
        config = tmp_path / "tiny.yaml"
        _tiny_config(config, "funsd", funsd_corpus, out)
        base = ["--config", str(config)]
        for command in (["build-graphs"], ["train", "--stage", "1"], ["train", "--stage", "2"], ["evaluate"]):
            assert run([*command, *base]) == 0
        rebuilt = report_from_dump(out / "eval" / "test" / "predictions.json")
        saved = json.loads((out / "eval" / "test" / "report.json").read_text())
        assert json.loads(json.dumps(rebuilt.to_dict())) == saved

    def test_invoice_table_detection(self, invoice_corpus, tmp_path, capsys):
        out = tmp_path / "run"
        config = tmp_path / "tiny.yaml"
        _tiny_config(config, "rvlcdip", invoice_corpus, out)
        base = ["--config", str(config)]
        for command in (["build-graphs"], ["train", "--stage", "1"], ["train", "--stage", "2"]):
            assert run([*command, *base]) == 0
        capsys.readouterr()
        assert run(["evaluate", *base]) == 0
        headline = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert headline["table_f1"] is not None
        assert headline["table_recall"] is not None

    def test_modalities_ablation(self, funsd_corpus, tmp_path):
        out = tmp_path / "run"
        config = tmp_path / "tiny.yaml"
        _tiny_config(config, "funsd", funsd_corpus, out)
        assert run(["build-graphs", "--config", str(config)]) == 0
        assert run(["ablate", "--table", "modalities", "--config", str(config)]) == 0
        table = out / "ablate" / "modalities"
        rows = json.loads((table / "comparison.json").read_text())
        assert [row["row"] for row in rows] == ["visual_only", "geometric_only", "combined"]
        markdown = (table / "comparison.md").read_text()
        assert "| visual_only | no | yes | yes | yes | yes |" in markdown
        assert "| geometric_only | yes | no | no | no | no |" in markdown
        # geometric_only drops node features, so only it trains a second stage 1
        assert (table / "visual_only" / "stage1" / "stage1.pt").exists()
        assert (table / "geometric_only" / "stage1" / "stage1.pt").exists()
        assert not (table / "combined" / "stage1").exists()


@pytest.mark.slow
class TestOverfit:
    """Both stages memorise five synthetic forms."""

    def test_training_split_is_learned(self, funsd_graphs, tmp_path, logger):
        stage1 = train_stage1(
            funsd_graphs,
            [],
            DatasetName.FUNSD,
            StageOneConfig(epochs=100, learning_rate=0.01, graphs_per_batch=5),
            out_dir=tmp_path / "stage1",
            logger=logger,
        )
        config = StageTwoConfig(
            hidden_dim=64, heads=2, dropout=0.0, head_widths=(64, 16), epochs=150, learning_rate=0.003, graphs_per_batch=5
        )
        result = train_stage2(
            funsd_graphs,
            [],
            DatasetName.FUNSD,
            stage1.checkpoint,
            config,
            TINY_VISUAL,
            out_dir=tmp_path / "stage2",
            logger=logger,
        )
        assert result.validation_history[result.best_epoch]["node_micro_f1"] >= 0.95

        trained = load_stage2(result.checkpoint)
        assert trained.backend.weights_id == "none"
        assert trained.metadata["best_epoch"] == result.best_epoch


@pytest.mark.slow
class TestReproducibility:
    """Seed-pinned reruns of both trainers."""

    def test_stage_two_reruns_agree(self, funsd_graphs, tmp_path):
        stage1 = train_stage1(
            funsd_graphs, [], DatasetName.FUNSD, StageOneConfig(epochs=2, graphs_per_batch=2), out_dir=tmp_path / "stage1"
        )
        config = StageTwoConfig(hidden_dim=8, heads=2, dropout=0.2, head_widths=(8,), epochs=2, graphs_per_batch=2, seed=5)
        runs = [
            train_stage2(funsd_graphs, [], DatasetName.FUNSD, stage1.checkpoint, config, TINY_VISUAL, out_dir=tmp_path / name)
            for name in ("first", "second")
        ]
        assert len(runs[0].loss_history) == 2
        assert runs[0].loss_history[-1] == pytest.approx(runs[1].loss_history[-1], abs=1e-6)
