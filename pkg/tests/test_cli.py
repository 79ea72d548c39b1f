"""CLI subcommands: determinism, exit codes, report formats."""

import csv
import hashlib
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import make_dataset_dir, synthetic_portrait
from portraitgan.cli import main
from portraitgan.networks import create_bundle, save_checkpoint
from portraitgan.training import TrainConfig


def dir_digest(root: Path) -> dict:
    return {
        p.relative_to(root).as_posix(): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(root.rglob("*")) if p.is_file()
    }


@pytest.fixture(scope="module")
def dataset_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("data")
    make_dataset_dir(root, count=4, resolution=64)
    return root


@pytest.fixture(scope="module")
def conditions_dir(tmp_path_factory, dataset_dir):
    out = tmp_path_factory.mktemp("conds")
    assert main(["extract", str(dataset_dir), str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def checkpoint(tmp_path_factory):
    path = tmp_path_factory.mktemp("ckpt") / "model.pt"
    bundle = create_bundle(resolution=64, seed=17, base_width=4, disc_base_width=4)
    save_checkpoint(bundle, path)
    return path


class TestExtract:
    def test_four_condition_dirs(self, conditions_dir):
        dirs = [d for d in conditions_dir.iterdir() if d.is_dir()]
        assert len(dirs) == 4
        for d in dirs:
            assert (d / "conditions.json").exists()
            assert (d / "edge.png").exists()
            assert (d / "original.png").exists()

    def test_rerun_byte_identical(self, dataset_dir, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["extract", str(dataset_dir), str(a)]) == 0
        assert main(["extract", str(dataset_dir), str(b)]) == 0
        assert dir_digest(a) == dir_digest(b)

    def test_unreadable_file_fails_without_keep_going(self, tmp_path):
        (tmp_path / "images").mkdir()
        (tmp_path / "images" / "junk.png").write_bytes(b"nope")
        code = main(["extract", str(tmp_path), str(tmp_path / "out")])
        assert code == 1


class TestNoisePreview:
    def test_writes_all_regimes(self, conditions_dir, tmp_path):
        edge = next(conditions_dir.iterdir()) / "edge.png"
        assert main(["noise-preview", str(edge), str(tmp_path), "--seed", "3"]) == 0
        for name in ("identity", "removal", "shift", "lines"):
            assert (tmp_path / f"{name}.png").exists()


def write_smoke_config(path: Path, **overrides) -> TrainConfig:
    base = dict(epochs=2, batch_size=2, seed=9, resolution=64, base_width=4,
                disc_base_width=4, residual_blocks=2, lr_constant_epochs=1,
                checkpoint_every=100, sample_every=100)
    base.update(overrides)
    cfg = TrainConfig(**base)
    cfg.to_yaml(path)
    return cfg


class TestTrain:
    def test_smoke_run_completes_quickly(self, dataset_dir, tmp_path):
        config = tmp_path / "cfg.yaml"
        write_smoke_config(config)
        started = time.time()
        code = main(["train", "--config", str(config), "--data", str(dataset_dir),
                     "--out-dir", str(tmp_path / "run")])
        elapsed = time.time() - started
        assert code == 0
        assert elapsed < 300  # smoke budget: well under five minutes
        assert (tmp_path / "run" / "checkpoints" / "final.pt").exists()

    def test_resume_continues_identically(self, dataset_dir, tmp_path):
        config = tmp_path / "cfg.yaml"
        write_smoke_config(config)
        full = tmp_path / "full"
        assert main(["train", "--config", str(config), "--data", str(dataset_dir),
                     "--out-dir", str(full)]) == 0

        part = tmp_path / "part"
        assert main(["train", "--config", str(config), "--data", str(dataset_dir),
                     "--out-dir", str(part), "--max-steps", "2"]) == 0
        resumed = tmp_path / "resumed"
        assert main(["train", "--config", str(config), "--data", str(dataset_dir),
                     "--out-dir", str(resumed), "--resume",
                     str(part / "checkpoints" / "final_state.pt")]) == 0

        full_log = (full / "report" / "loss_log.csv").read_text()
        resumed_log = (resumed / "report" / "loss_log.csv").read_text()
        assert full_log == resumed_log

    def test_invalid_config_key_exits_2(self, dataset_dir, tmp_path):
        config = tmp_path / "cfg.yaml"
        write_smoke_config(config)
        config.write_text(config.read_text() + "\nturbo_mode: yes\n")
        code = main(["train", "--config", str(config), "--data", str(dataset_dir),
                     "--out-dir", str(tmp_path / "run")])
        assert code == 2


class TestGenerateEditTransfer:
    def test_generate_from_conditions(self, checkpoint, conditions_dir, tmp_path):
        code = main(["generate", "--checkpoint", str(checkpoint),
                     "--conditions", str(conditions_dir),
                     "--out-dir", str(tmp_path)])
        assert code == 0
        assert len(list(tmp_path.glob("*.png"))) == 4

    def test_generate_deterministic(self, checkpoint, conditions_dir, tmp_path):
        for sub in ("a", "b"):
            assert main(["generate", "--checkpoint", str(checkpoint),
                         "--conditions", str(conditions_dir),
                         "--out-dir", str(tmp_path / sub)]) == 0
        assert dir_digest(tmp_path / "a") == dir_digest(tmp_path / "b")

    def test_edit_script(self, checkpoint, conditions_dir, tmp_path):
        script = tmp_path / "script.json"
        script.write_text(
            '{"ops": [{"op": "set_row_color", "row": "hair",'
            ' "color": [0, 255, 0]}]}')
        code = main(["edit", "--checkpoint", str(checkpoint),
                     "--conditions", str(conditions_dir),
                     "--script", str(script), "--out-dir", str(tmp_path / "out")])
        assert code == 0
        assert len(list((tmp_path / "out").glob("*.png"))) == 4

    def test_transfer_writes_conditions(self, conditions_dir, dataset_dir, tmp_path):
        target = next(d for d in sorted(conditions_dir.iterdir()) if d.is_dir())
        reference = dataset_dir / "images" / "face001.png"
        # reuse the source segmentation as reference segmentation
        from PIL import Image

        image, seg = synthetic_portrait(64, seed=101)
        seg_path = tmp_path / "ref_seg.png"
        Image.fromarray(seg.labels, "L").save(seg_path)
        code = main(["transfer", "--conditions", str(target),
                     "--reference", str(reference),
                     "--reference-seg", str(seg_path),
                     "--strip-width", "8", "--out-dir", str(tmp_path / "t")])
        assert code == 0
        assert (tmp_path / "t" / "conditions.json").exists()


class TestEval:
    def test_report_columns_match_regime_header(self, checkpoint, dataset_dir,
                                                tmp_path):
        out = tmp_path / "report"
        code = main(["eval", "--checkpoint", f"only={checkpoint}",
                     "--test-data", str(dataset_dir), "--out-dir", str(out),
                     "--seed", "4", "--mode", "edges"])
        assert code == 0
        with open(out / "edge_robustness.csv") as fh:
            header = next(csv.reader(fh))
        assert header == ["model", "O", "RR", "RS", "RL"]

    def test_single_model_one_row(self, checkpoint, dataset_dir, tmp_path):
        out = tmp_path / "report"
        assert main(["eval", "--checkpoint", f"only={checkpoint}",
                     "--test-data", str(dataset_dir), "--out-dir", str(out),
                     "--seed", "4", "--mode", "edges"]) == 0
        with open(out / "edge_robustness.csv") as fh:
            rows = list(csv.reader(fh))
        assert len(rows) == 2  # header + one model row

    def test_seeded_rerun_identical(self, checkpoint, dataset_dir, tmp_path):
        outs = []
        for sub in ("a", "b"):
            out = tmp_path / sub
            assert main(["eval", "--checkpoint", f"only={checkpoint}",
                         "--test-data", str(dataset_dir), "--out-dir", str(out),
                         "--seed", "4", "--mode", "edges"]) == 0
            outs.append((out / "edge_robustness.csv").read_text())
        assert outs[0] == outs[1]

    def test_bad_checkpoint_spec_exits_2(self, dataset_dir, tmp_path):
        code = main(["eval", "--checkpoint", "missing-equals-sign",
                     "--test-data", str(dataset_dir),
                     "--out-dir", str(tmp_path)])
        assert code == 2


class TestReportCommand:
    def test_renders_saved_json(self, checkpoint, dataset_dir, tmp_path):
        out = tmp_path / "r1"
        assert main(["eval", "--checkpoint", f"only={checkpoint}",
                     "--test-data", str(dataset_dir), "--out-dir", str(out),
                     "--seed", "4", "--mode", "edges"]) == 0
        rendered = tmp_path / "r2"
        assert main(["report", str(out / "report.json"), str(rendered)]) == 0
        assert (rendered / "report.txt").exists()


class TestUsage:
    def test_missing_subcommand_exits_2(self):
        with pytest.raises(SystemExit) as err:
            main([])
        assert err.value.code == 2

    def test_unknown_flag_exits_2(self):
        with pytest.raises(SystemExit) as err:
            main(["extract", "--frobnicate"])
        assert err.value.code == 2
