import json

import numpy as np
import pytest

from nanet.cli import main
from nanet.dataset import read_png


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    return tmp_path_factory.mktemp("cli")


@pytest.fixture(scope="module")
def dataset(workdir):
    code = main(
        ["synth", "--out", str(workdir / "data"), "--seed", "3", "--per-letter", "2", "--test-per-letter", "1"]
    )
    assert code == 0
    return workdir / "data"


@pytest.fixture(scope="module")
def cls_ckpt(workdir, dataset):
    path = workdir / "cls.ckpt"
    code = main(
        ["train", "--data", str(dataset), "--out", str(path), "--preset", "desk",
         "--mode", "classifier-only", "--epochs", "1", "--seed", "0"]
    )
    assert code == 0
    return path


@pytest.fixture(scope="module")
def nanet_ckpt(workdir, dataset):
    path = workdir / "nanet.ckpt"
    code = main(
        ["train", "--data", str(dataset), "--out", str(path), "--preset", "desk",
         "--epochs", "1", "--seed", "0"]
    )
    assert code == 0
    return path


def test_synth_summary_and_layout(capsys, workdir):
    code, out, _ = run(
        capsys, "synth", "--out", str(workdir / "data2"), "--seed", "4",
        "--per-letter", "2", "--test-per-letter", "1"
    )
    assert code == 0
    summary = json.loads(out)
    assert summary["command"] == "synth"
    assert summary["clean_images"] == 52
    assert summary["noisy_images"] == 78
    assert (workdir / "data2" / "manifest.json").exists()
    assert (workdir / "data2" / "saltpepper" / "Z" / "01.png").exists()


def test_train_emits_summary_and_checkpoint(capsys, dataset, workdir):
    path = workdir / "t.ckpt"
    code, out, err = run(
        capsys, "train", "--data", str(dataset), "--out", str(path), "--preset", "desk",
        "--mode", "classifier-only", "--epochs", "1", "--seed", "1"
    )
    assert code == 0
    summary = json.loads(out)
    assert summary["mode"] == "classifier_only"
    assert summary["epochs"] == 1
    assert path.exists()
    assert "epoch 1/1" in err  # progress goes to stderr


def test_eval_writes_report(capsys, dataset, nanet_ckpt, workdir):
    rpt = workdir / "r.json"
    code, out, _ = run(
        capsys, "eval", "--ckpt", str(nanet_ckpt), "--data", str(dataset), "--report", str(rpt)
    )
    assert code == 0
    summary = json.loads(out)
    assert set(summary["accuracy"]) == {"clean", "uniform", "gaussian", "saltpepper"}
    data = json.loads(rpt.read_text())
    assert data["clean"]["psnr_noisy"] == 99.0
    assert data["uniform"]["psnr_denoised"] is not None


def test_eval_condition_subset(capsys, dataset, cls_ckpt, workdir):
    rpt = workdir / "rc.json"
    code, out, _ = run(
        capsys, "eval", "--ckpt", str(cls_ckpt), "--data", str(dataset),
        "--report", str(rpt), "--conditions", "clean", "gaussian"
    )
    assert code == 0
    data = json.loads(rpt.read_text())
    assert set(data) == {"clean", "gaussian"}
    assert data["clean"]["psnr_denoised"] is None  # no autoencoder stage


def test_report_renders_table(capsys, dataset, nanet_ckpt, workdir):
    rpt = workdir / "r2.json"
    assert run(capsys, "eval", "--ckpt", str(nanet_ckpt), "--data", str(dataset), "--report", str(rpt))[0] == 0
    code, out, _ = run(capsys, "report", "--in", str(rpt))
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("Condition")
    assert "Accuracy(%)" in lines[0]
    assert sum(1 for ln in lines[1:] if ln.strip()) == 4


def test_denoise_exports_reconstructions(capsys, dataset, nanet_ckpt, workdir):
    out_dir = workdir / "den"
    code, out, _ = run(capsys, "denoise", "--ckpt", str(nanet_ckpt), "--data", str(dataset), "--out", str(out_dir))
    assert code == 0
    assert json.loads(out)["written"] == 104  # 26 test images x 4 conditions
    sample = out_dir / "uniform" / "A" / "01.png"
    assert sample.exists()
    img = read_png(sample)
    assert img.values.shape == (64, 64)  # written at working resolution


def test_denoise_rejects_classifier_only(capsys, dataset, cls_ckpt, workdir):
    code, _, err = run(
        capsys, "denoise", "--ckpt", str(cls_ckpt), "--data", str(dataset), "--out", str(workdir / "d2")
    )
    assert code == 2
    assert json.loads(err)["error"] == "ValueError"


def test_cam_writes_heatmap(capsys, dataset, cls_ckpt, workdir):
    query = dataset / "clean" / "Q" / "01.png"
    out_png = workdir / "cam.png"
    code, out, _ = run(
        capsys, "cam", "--ckpt", str(cls_ckpt), "--image", str(query), "--out", str(out_png), "--class", "Q"
    )
    assert code == 0
    heat = read_png(out_png)
    assert heat.values.shape == (512, 512)
    assert float(heat.values.min()) >= 0.0 and float(heat.values.max()) <= 1.0


def test_usage_errors_exit_1(capsys):
    assert run(capsys, "train", "--data", "x")[0] == 1  # missing required flags
    assert run(capsys, "nonsense")[0] == 1
    code, _, err = run(capsys, "train", "--data", "x", "--out", "y", "--preset", "tiny")
    assert code == 1
    assert "preset" in err


def test_runtime_errors_exit_2(capsys, dataset, workdir):
    code, _, err = run(
        capsys, "eval", "--ckpt", str(workdir / "missing.ckpt"), "--data", str(dataset),
        "--report", str(workdir / "x.json")
    )
    assert code == 2
    payload = json.loads(err)
    assert payload["error"] == "IoFailure"
    assert "missing.ckpt" in payload["message"]


def test_synth_determinism_across_runs(capsys, dataset, workdir):
    code, _, _ = run(
        capsys, "synth", "--out", str(workdir / "data3"), "--seed", "3",
        "--per-letter", "2", "--test-per-letter", "1"
    )
    assert code == 0
    a = (dataset / "clean" / "M" / "00.png").read_bytes()
    b = (workdir / "data3" / "clean" / "M" / "00.png").read_bytes()
    assert a == b
