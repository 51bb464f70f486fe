"""Four-condition evaluation: confusion matrices, macro metrics, PSNR.

Test images are resized to the checkpoint's working resolution and pushed
through an eval-mode forward pass (no augmentation, no dropout, no graph).
Accuracy is trace/total; precision, recall, and F1 are one-vs-rest per
class with a contribute-zero convention for empty denominators, then
macro-averaged. PSNR uses MAX=1 on float images and is capped at 99 dB so
the identical-image case stays finite.
"""

import json
from pathlib import Path

import numpy as np

from .dataset import CONDITIONS, ImageBuffer, read_png, resize, write_png
from .errors import EmptyMatrix, MissingSplit
from .model import forward_autoencoder, forward_classifier
from .morse import LETTERS, letter_index
from .tensor import Tensor, no_grad

PSNR_CAP = 99.0


def psnr(a, b) -> float:
    """10*log10(1/MSE) for float images in [0,1], capped at 99 dB."""
    mse = float(np.mean((np.asarray(a, np.float64) - np.asarray(b, np.float64)) ** 2))
    if mse <= 0.0:
        return PSNR_CAP
    return min(10.0 * np.log10(1.0 / mse), PSNR_CAP)


def compute_metrics(cm) -> dict:
    """Accuracy and macro precision/recall/F1 (percent) from a confusion
    matrix with rows = true class, columns = predicted class.
    """
    cm = np.asarray(cm)
    if cm.size == 0 or cm.sum() == 0:
        raise EmptyMatrix("confusion matrix has no observations")
    tp = np.diag(cm).astype(np.float64)
    fp = cm.sum(axis=0) - tp
    fn = cm.sum(axis=1) - tp
    with np.errstate(invalid="ignore", divide="ignore"):
        prec = np.where(tp + fp > 0, tp / (tp + fp), 0.0)
        rec = np.where(tp + fn > 0, tp / (tp + fn), 0.0)
        f1 = np.where(prec + rec > 0, 2.0 * prec * rec / (prec + rec), 0.0)
    return {
        "accuracy": float(tp.sum() / cm.sum() * 100.0),
        "precision": float(prec.mean() * 100.0),
        "recall": float(rec.mean() * 100.0),
        "f1": float(f1.mean() * 100.0),
    }


class EvalReport:
    """Per-condition results; serialization rounds percentages and PSNR to
    2 decimals, leaving the in-memory values exact.
    """

    def __init__(self):
        self.conditions = {}  # name -> dict with confusion + metrics + psnr

    def add(self, condition, confusion, metrics, psnr_denoised, psnr_noisy):
        self.conditions[condition] = {
            "confusion": np.asarray(confusion, dtype=np.int64),
            **metrics,
            "psnr_denoised": psnr_denoised,
            "psnr_noisy": psnr_noisy,
        }

    def to_dict(self):
        out = {}
        for cond, e in self.conditions.items():
            out[cond] = {
                "confusion": e["confusion"].tolist(),
                "accuracy": round(e["accuracy"], 2),
                "precision": round(e["precision"], 2),
                "recall": round(e["recall"], 2),
                "f1": round(e["f1"], 2),
                "psnr_denoised": None if e["psnr_denoised"] is None else round(e["psnr_denoised"], 2),
                "psnr_noisy": round(e["psnr_noisy"], 2),
            }
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    def save(self, path):
        Path(path).write_text(self.to_json())


def _batched(seq, size):
    for i in range(0, len(seq), size):
        yield seq[i : i + size]


def _forward_eval(params, mode, batch):
    """Returns (recon array or None, logits array) without building a graph."""
    x = Tensor(batch)
    with no_grad():
        if mode == "nanet":
            recon = forward_autoencoder(params, x)
            logits = forward_classifier(params, recon, training=False)
            return recon.data, logits.data
        logits = forward_classifier(params, x, training=False)
        return None, logits.data


def _load_resized(root, rel_path, size):
    return resize(read_png(Path(root) / rel_path), size, size).values


def evaluate(ckpt, manifest, conditions=None, batch_size=8) -> EvalReport:
    """Run the test split for each condition and collect the report."""
    if conditions is None:
        conditions = CONDITIONS
    mode = ckpt.configs["mode"]
    size = ckpt.configs["image_size"]
    params = ckpt.to_params()
    root = manifest.root
    report = EvalReport()
    for cond in conditions:
        items = sorted(manifest.test_items(cond), key=lambda it: (it.letter, it.instance))
        if not items:
            raise MissingSplit(f"manifest has no test items for condition {cond!r}")
        cm = np.zeros((26, 26), dtype=np.int64)
        psnr_noisy_sum = 0.0
        psnr_den_sum = 0.0
        for chunk in _batched(items, batch_size):
            batch = np.empty((len(chunk), 1, size, size), dtype=np.float32)
            clean = np.empty_like(batch)
            for k, it in enumerate(chunk):
                batch[k, 0] = _load_resized(root, it.path, size)
                clean_rel = str(Path("clean") / it.letter / f"{it.instance:02d}.png")
                clean[k, 0] = (
                    batch[k, 0] if cond == "clean" else _load_resized(root, clean_rel, size)
                )
            recon, logits = _forward_eval(params, mode, batch)
            preds = logits.argmax(axis=1)
            for k, it in enumerate(chunk):
                cm[letter_index(it.letter), preds[k]] += 1
                psnr_noisy_sum += psnr(batch[k, 0], clean[k, 0])
                if recon is not None:
                    psnr_den_sum += psnr(recon[k, 0], clean[k, 0])
        n = len(items)
        report.add(
            cond,
            cm,
            compute_metrics(cm),
            psnr_den_sum / n if mode == "nanet" else None,
            psnr_noisy_sum / n,
        )
    return report


def export_denoised(ckpt, manifest, conditions, out_dir, batch_size=8):
    """Write the autoencoder's reconstructions of the test split as PNGs
    mirroring the dataset layout.
    """
    if ckpt.configs["mode"] != "nanet":
        raise ValueError("checkpoint has no autoencoder stage to export from")
    size = ckpt.configs["image_size"]
    params = ckpt.to_params()
    root = manifest.root
    out = Path(out_dir)
    written = 0
    for cond in conditions:
        items = sorted(manifest.test_items(cond), key=lambda it: (it.letter, it.instance))
        if not items:
            raise MissingSplit(f"manifest has no test items for condition {cond!r}")
        for chunk in _batched(items, batch_size):
            batch = np.empty((len(chunk), 1, size, size), dtype=np.float32)
            for k, it in enumerate(chunk):
                batch[k, 0] = _load_resized(root, it.path, size)
            with no_grad():
                recon = forward_autoencoder(params, Tensor(batch)).data
            for k, it in enumerate(chunk):
                img = ImageBuffer.from_array(np.clip(recon[k, 0], 0.0, 1.0))
                write_png(out / cond / it.letter / f"{it.instance:02d}.png", img)
                written += 1
    return written
