"""End-to-end acceptance suite.

Each test pins one release bar for the package, ordered from unit-level
identities up to the full desk-scale training run. The expensive pieces
(full dataset synthesis, two 40-epoch training runs) live in module
fixtures so the final criteria share them; everything else runs in
seconds.
"""

import time

import numpy as np
import pytest

import test_gradcheck as gradcheck
from nanet.checkpoint import load_checkpoint, save_checkpoint
from nanet.dataset import (CONDITIONS, NOISY_CONDITIONS, ImageBuffer,
                           RenderSpec, _image_rng, build_dataset, read_png)
from nanet.evaluation import compute_metrics, evaluate
from nanet.gradcam import grad_cam
from nanet.losses import cross_entropy, mse_loss, total_loss
from nanet.model import (AutoencoderConfig, ClassifierConfig,
                         forward_autoencoder, forward_classifier, init_params)
from nanet.morse import LETTERS, decode_sequence, encode_letter, letter_index
from nanet.tensor import Tensor
from nanet.training import TrainConfig, preset_config, train

pytestmark = pytest.mark.acceptance


@pytest.fixture(scope="module")
def full_data(tmp_path_factory):
    """Full-size corpus: 26 letters x 40 instances at 512x512, 10 of each
    held out and corrupted once per noisy condition."""
    out = tmp_path_factory.mktemp("full") / "data"
    t0 = time.monotonic()
    manifest = build_dataset(RenderSpec(), None, seed=7, out_dir=out,
                             per_letter=40, test_per_letter=10)
    return {"manifest": manifest, "root": out, "elapsed": time.monotonic() - t0}


@pytest.fixture(scope="module")
def desk_nanet(full_data, tmp_path_factory):
    """40-epoch desk-preset run of the joint model, plus its evaluation."""
    path = tmp_path_factory.mktemp("run_nanet") / "nanet.ckpt"
    cfg = preset_config("desk", mode="nanet", seed=3)
    ckpt, history = train(full_data["manifest"], cfg)
    save_checkpoint(ckpt.tensors, ckpt.configs, path)
    report = evaluate(load_checkpoint(path), full_data["manifest"])
    return {"history": history, "report": report.to_dict()}


@pytest.fixture(scope="module")
def desk_classifier_only(full_data, tmp_path_factory):
    """Same run with the autoencoder stage disabled, as the baseline."""
    path = tmp_path_factory.mktemp("run_cls") / "cls.ckpt"
    cfg = preset_config("desk", mode="classifier_only", seed=3)
    ckpt, history = train(full_data["manifest"], cfg)
    save_checkpoint(ckpt.tensors, ckpt.configs, path)
    report = evaluate(load_checkpoint(path), full_data["manifest"])
    return {"history": history, "report": report.to_dict()}


def test_criterion_01_gradient_suite():
    """Every differentiable primitive passes central-difference checks
    (h=1e-3) on five random small shapes each, rel err <= 1e-3 in float32
    and <= 1e-6 in float64, in under a minute."""
    checks = [
        gradcheck.test_grad_conv2d,
        gradcheck.test_grad_conv_transpose2d,
        gradcheck.test_grad_max_pool_tiled_and_overlapping,
        gradcheck.test_grad_adaptive_avg_pool,
        gradcheck.test_grad_relu,
        gradcheck.test_grad_sigmoid,
        gradcheck.test_grad_dropout,
        gradcheck.test_grad_linear,
        gradcheck.test_grad_concat_channels,
        gradcheck.test_grad_log_softmax,
        gradcheck.test_grad_elementwise_and_reductions,
        gradcheck.test_grad_losses,
    ]
    t0 = time.monotonic()
    for dtype, tol in gradcheck.SETTINGS:
        for check in checks:
            check(dtype, tol)
    assert time.monotonic() - t0 < 60.0


def test_criterion_02_loss_identities():
    rng = np.random.default_rng(2)
    x = Tensor(rng.random((4, 1, 8, 8), dtype=np.float32))
    assert float(mse_loss(x, Tensor(x.data.copy())).data) == 0.0

    logits = Tensor(np.full((5, 26), 0.37, dtype=np.float32))
    ce = float(cross_entropy(logits, np.arange(5) % 26).data)
    assert ce == pytest.approx(np.log(26.0), abs=1e-5)

    for _ in range(20):
        m = Tensor(np.float32(rng.random() * 5))
        c = Tensor(np.float32(rng.random() * 5))
        assert float(total_loss(m, c).data) == float(m.data + c.data)


def test_criterion_03_dataset_contract(full_data):
    manifest, root = full_data["manifest"], full_data["root"]
    canvas = manifest.render_spec.canvas

    assert len(list((root / "clean").rglob("*.png"))) == 1040
    assert len(manifest.train_items()) == 780
    clean_keys = {(it.letter, it.instance) for it in manifest.test_items("clean")}
    assert len(clean_keys) == 260
    for cond in NOISY_CONDITIONS:
        items = manifest.test_items(cond)
        assert len(items) == 260
        assert {(it.letter, it.instance) for it in items} == clean_keys
        assert len(list((root / cond).rglob("*.png"))) == 260

    # salt-and-pepper: replay each image's corruption mask from its stream
    # key; the hit fraction must sit within 4 sigma of the binomial mean and
    # the on-disk image may differ from its clean source only inside the mask
    ci = CONDITIONS.index("saltpepper")
    p = manifest.noise_specs["saltpepper"].p
    bound = 4.0 * np.sqrt(p * (1.0 - p) / canvas**2)
    for it in manifest.test_items("saltpepper"):
        rng = _image_rng(manifest.seed, letter_index(it.letter), it.instance, ci)
        hit = rng.random((canvas, canvas)) < p
        assert abs(hit.mean() - p) < bound
        noisy = read_png(root / it.path).values
        clean = read_png(root / "clean" / it.letter / f"{it.instance:02d}.png").values
        assert not (noisy != clean)[~hit].any()

    # gaussian: the pre-clamp perturbation field has std in [0.195, 0.205]
    ci = CONDITIONS.index("gaussian")
    sigma = manifest.noise_specs["gaussian"].sigma
    assert sigma == 0.2
    for it in manifest.test_items("gaussian"):
        rng = _image_rng(manifest.seed, letter_index(it.letter), it.instance, ci)
        raw = rng.normal(0.0, sigma, (canvas, canvas))
        assert 0.195 <= raw.std() <= 0.205

    assert full_data["elapsed"] < 120.0


def test_criterion_04_codec_round_trip():
    assert len(LETTERS) == 26
    seqs = [encode_letter(letter) for letter in LETTERS]
    for letter, seq in zip(LETTERS, seqs):
        assert decode_sequence(seq.symbols) == letter
    assert len({seq.symbols for seq in seqs}) == 26


def test_criterion_05_architecture_shapes():
    params = init_params(AutoencoderConfig(), ClassifierConfig(), seed=0)
    for size in (32, 64, 96, 224):
        x = Tensor(np.random.default_rng(size).random((1, 1, size, size), dtype=np.float32))
        assert forward_autoencoder(params, x).data.shape == x.data.shape
    for size in (64, 224):
        x = Tensor(np.random.default_rng(size).random((1, 1, size, size), dtype=np.float32))
        assert forward_classifier(params, x).data.shape == (1, 26)

    weights = [k for k in params.tensors if k.startswith("cls.") and k.endswith(".weight")]
    assert len(weights) == 9
    kernels = sorted(params.tensors[f"cls.conv{i}.weight"].data.shape[-1] for i in range(1, 7))
    assert kernels == [3, 3, 3, 3, 5, 11]
    assert sum(1 for k in weights if ".fc" in k) == 3


def test_criterion_06_desk_run_accuracy(desk_nanet, desk_classifier_only):
    """The 40-epoch desk run must classify held-out letters well in the
    clean condition and stay serviceable under every noise condition,
    beating the no-autoencoder baseline on most noisy conditions."""
    rep = desk_nanet["report"]
    base = desk_classifier_only["report"]
    assert rep["clean"]["accuracy"] >= 90.0
    for cond in NOISY_CONDITIONS:
        assert rep[cond]["accuracy"] >= 65.0, cond
    wins = sum(rep[c]["accuracy"] >= base[c]["accuracy"] for c in NOISY_CONDITIONS)
    assert wins >= 2


def test_criterion_07_denoising_efficacy(desk_nanet):
    """On each noisy test set the reconstruction is closer to the clean
    source than the corrupted input is."""
    rep = desk_nanet["report"]
    for cond in NOISY_CONDITIONS:
        assert rep[cond]["psnr_denoised"] > rep[cond]["psnr_noisy"], cond


def test_criterion_08_determinism_and_persistence(tiny_dataset, tmp_path):
    cfg = TrainConfig(epochs=1, batch_size=8, lr=1e-4, image_size=64,
                      seed=11, mode="nanet")
    a, b = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    ck_a, _ = train(tiny_dataset, cfg)
    save_checkpoint(ck_a.tensors, ck_a.configs, a)
    ck_b, _ = train(tiny_dataset, cfg)
    save_checkpoint(ck_b.tensors, ck_b.configs, b)
    assert a.read_bytes() == b.read_bytes()

    ck = load_checkpoint(a)
    rep_a = evaluate(ck, tiny_dataset).to_json()
    assert rep_a == evaluate(load_checkpoint(b), tiny_dataset).to_json()

    # save -> load round-trip preserves every tensor bit and the evaluation
    c = tmp_path / "c.ckpt"
    save_checkpoint(ck.tensors, ck.configs, c)
    ck2 = load_checkpoint(c)
    assert ck2.tensors.keys() == ck.tensors.keys()
    for name in ck.tensors:
        np.testing.assert_array_equal(ck2.tensors[name], ck.tensors[name])
    assert evaluate(ck2, tiny_dataset).to_json() == rep_a


def test_criterion_09_metrics_oracle():
    rng = np.random.default_rng(9)
    for _ in range(100):
        k = int(rng.integers(2, 30))
        cm = rng.integers(0, 50, size=(k, k))
        if cm.sum() == 0:
            cm[0, 0] = 1
        got = compute_metrics(cm)
        precs, recs, f1s = [], [], []
        for c in range(k):
            tp = float(cm[c, c])
            fp = float(cm[:, c].sum()) - tp
            fn = float(cm[c, :].sum()) - tp
            p = tp / (tp + fp) if tp + fp > 0 else 0.0
            r = tp / (tp + fn) if tp + fn > 0 else 0.0
            precs.append(p)
            recs.append(r)
            f1s.append(2.0 * p * r / (p + r) if p + r > 0 else 0.0)
        assert got["accuracy"] == float(np.trace(cm) / cm.sum() * 100.0)
        assert got["precision"] == float(np.mean(np.array(precs)) * 100.0)
        assert got["recall"] == float(np.mean(np.array(recs)) * 100.0)
        assert got["f1"] == float(np.mean(np.array(f1s)) * 100.0)

    confusion = np.zeros((26, 26), dtype=np.int64)
    confusion[np.arange(26), np.arange(26)] = 10
    for i in range(8):  # displace 8 of the 260 predictions
        confusion[i, i] -= 1
        confusion[i, (i + 1) % 26] += 1
    assert round(compute_metrics(confusion)["accuracy"], 2) == 96.92


def _init_ckpt(mode="classifier_only"):
    from nanet.checkpoint import Checkpoint
    ae = AutoencoderConfig() if mode == "nanet" else None
    params = init_params(ae, ClassifierConfig(), seed=0)
    configs = {"format_version": 1, "mode": mode, "image_size": 64,
               "ae_config": ae.to_dict() if ae else None,
               "cls_config": ClassifierConfig().to_dict()}
    return Checkpoint(configs, {n: t.data.copy() for n, t in params.tensors.items()})


def test_criterion_10_grad_cam_contract():
    rng = np.random.default_rng(10)
    image = ImageBuffer.from_array(rng.random((96, 80), dtype=np.float32))

    ck = _init_ckpt()
    cam = grad_cam(ck, image, target_class="Q")
    assert (cam.height, cam.width) == (96, 80)
    assert float(cam.values.min()) >= 0.0 and float(cam.values.max()) <= 1.0

    # with the last conv stage zeroed out the pooled gradients vanish and
    # the heatmap must be exactly zero rather than noise scaled up by the
    # normalizer
    dead = _init_ckpt()
    dead.tensors["cls.conv6.weight"][:] = 0.0
    dead.tensors["cls.conv6.bias"][:] = 0.0
    assert not grad_cam(dead, image).values.any()
