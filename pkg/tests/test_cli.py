from metadenoise.checkpoint import load_checkpoint
from metadenoise.cli import run_cli

TINY_SIGNAL_CFG = """
problem = signal1d
base_seed = 0
k = 3
seeds = 1,2
data.count = 8
data.signal_length = 96
meta.outer_iterations = 3
inner.epochs = 2
supervised.budget = 9
out = {out}
"""

TINY_IMAGE_CFG = """
problem = image2d
base_seed = 0
k = 2
seeds = 1,2
data.count = 8
data.image_size = 16
patch.size = 8
patch.stride = 8
net.depth = 2
net.width = 2
meta.outer_iterations = 2
inner.epochs = 1
inner.batch_size = 2
out = {out}
"""

TINY_CT_CFG = """
problem = ct2d
base_seed = 0
k = 2
seeds = 1,2
data.count = 16
data.image_size = 16
ct.angles = 12
net.depth = 2
net.width = 2
meta.outer_iterations = 2
inner.epochs = 1
inner.batch_size = 2
out = {out}
"""


def _write_cfg(tmp_path, template, name="c.cfg", **extra):
    out = tmp_path / "out"
    text = template.format(out=out)
    for key, value in extra.items():
        text += f"{key} = {value}\n"
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path, out


class TestExitCodes:
    def test_missing_config_flag(self, capsys):
        assert run_cli(["compare"]) == 1
        assert "usage" in capsys.readouterr().err.lower()

    def test_unknown_flag(self, capsys):
        assert run_cli(["compare", "--config", "x.cfg", "--frobnicate"]) == 1

    def test_unknown_command(self):
        assert run_cli(["explode", "--config", "x.cfg"]) == 1

    def test_missing_config_file(self, capsys):
        assert run_cli(["compare", "--config", "/nonexistent/c.cfg"]) == 2

    def test_config_referencing_missing_dataset(self, tmp_path, capsys):
        cfg = tmp_path / "c.cfg"
        cfg.write_text(
            "problem = signal1d\ndata.source = files\ndata.path = /missing/data.csv\n",
            encoding="utf-8",
        )
        assert run_cli(["compare", "--config", str(cfg)]) == 2
        assert "/missing/data.csv" in capsys.readouterr().err

    def test_bad_k_override(self, tmp_path):
        cfg, _ = _write_cfg(tmp_path, TINY_SIGNAL_CFG)
        assert run_cli(["synth-data", "--config", str(cfg), "--k", "0"]) == 1


class TestSynthData:
    def test_signal_dataset_written(self, tmp_path):
        cfg, out = _write_cfg(tmp_path, TINY_SIGNAL_CFG)
        assert run_cli(["synth-data", "--config", str(cfg)]) == 0
        assert (out / "signals.csv").exists()

    def test_image_dataset_written(self, tmp_path):
        cfg, out = _write_cfg(tmp_path, TINY_IMAGE_CFG)
        assert run_cli(["synth-data", "--config", str(cfg)]) == 0
        images = list((out / "images").glob("*.pgm"))
        assert len(images) == 8


class TestTrainingCommands:
    def test_meta_train_writes_checkpoint_and_log(self, tmp_path):
        cfg, out = _write_cfg(tmp_path, TINY_SIGNAL_CFG)
        assert run_cli(["meta-train", "--config", str(cfg)]) == 0
        assert (out / "model_meta.mdnz").exists()
        assert (out / "train_log.csv").exists()
        assert (out / "train_curve.png").exists()
        model = load_checkpoint(out / "model_meta.mdnz")
        assert model.spec.input_size == 30

    def test_pretrain_then_finetune_then_evaluate(self, tmp_path):
        cfg, out = _write_cfg(tmp_path, TINY_SIGNAL_CFG)
        assert run_cli(["pretrain", "--config", str(cfg)]) == 0
        checkpoint = out / "model_supervised.mdnz"
        assert checkpoint.exists()

        cfg2, out2 = _write_cfg(
            tmp_path, TINY_SIGNAL_CFG, name="c2.cfg", **{"model.path": checkpoint}
        )
        out2_dir = tmp_path / "out2"
        assert run_cli(["finetune", "--config", str(cfg2), "--out", str(out2_dir)]) == 0
        assert (out2_dir / "model_finetuned.mdnz").exists()

        assert run_cli(["evaluate", "--config", str(cfg2), "--out", str(tmp_path / "out3")]) == 0
        assert (tmp_path / "out3" / "metrics.csv").exists()
        assert (tmp_path / "out3" / "metrics.png").exists()

    def test_transfer_writes_both_logs(self, tmp_path):
        cfg, out = _write_cfg(tmp_path, TINY_SIGNAL_CFG)
        assert run_cli(["transfer", "--config", str(cfg)]) == 0
        assert (out / "model_transfer.mdnz").exists()
        assert (out / "pretrain_loss.csv").exists()
        assert (out / "finetune_loss.csv").exists()

    def test_finetune_without_model_path(self, tmp_path, capsys):
        cfg, _ = _write_cfg(tmp_path, TINY_SIGNAL_CFG)
        assert run_cli(["finetune", "--config", str(cfg)]) == 2
        assert "model.path" in capsys.readouterr().err


class TestCompareAndSweep:
    def test_compare_writes_report_files(self, tmp_path, capsys):
        cfg, out = _write_cfg(tmp_path, TINY_SIGNAL_CFG)
        assert run_cli(["compare", "--config", str(cfg)]) == 0
        for name in ("report.csv", "report_table.txt", "ttests.csv", "report.png"):
            assert (out / name).exists(), name
        assert "Initial Noise" in capsys.readouterr().out

    def test_sweep_writes_table_and_figure(self, tmp_path):
        cfg, out = _write_cfg(tmp_path, TINY_SIGNAL_CFG, **{"sweep.ks": "1,2"})
        assert run_cli(["kshot-sweep", "--config", str(cfg)]) == 0
        assert (out / "sweep.csv").exists()
        assert (out / "sweep.png").exists()
        lines = (out / "sweep.csv").read_text().strip().splitlines()
        assert len(lines) == 3  # header + 2 rows

    def test_image_problem_end_to_end(self, tmp_path):
        cfg, out = _write_cfg(tmp_path, TINY_IMAGE_CFG)
        assert run_cli(["compare", "--config", str(cfg)]) == 0
        assert (out / "report.csv").exists()

    def test_ct_problem_meta_train(self, tmp_path):
        cfg, out = _write_cfg(tmp_path, TINY_CT_CFG)
        assert run_cli(["meta-train", "--config", str(cfg)]) == 0
        assert (out / "model_meta.mdnz").exists()


class TestLockFile:
    def test_lock_blocks_concurrent_use(self, tmp_path):
        cfg, out = _write_cfg(tmp_path, TINY_SIGNAL_CFG)
        out.mkdir(parents=True)
        (out / ".metadenoise-lock").touch()
        assert run_cli(["synth-data", "--config", str(cfg)]) == 2

    def test_lock_released_after_run(self, tmp_path):
        cfg, out = _write_cfg(tmp_path, TINY_SIGNAL_CFG)
        assert run_cli(["synth-data", "--config", str(cfg)]) == 0
        assert not (out / ".metadenoise-lock").exists()
        assert run_cli(["synth-data", "--config", str(cfg)]) == 0

    def test_writes_stay_inside_out_dir(self, tmp_path, monkeypatch):
        workdir = tmp_path / "work"
        workdir.mkdir()
        monkeypatch.chdir(workdir)
        cfg, out = _write_cfg(tmp_path, TINY_SIGNAL_CFG)
        assert run_cli(["meta-train", "--config", str(cfg)]) == 0
        assert list(workdir.iterdir()) == []
