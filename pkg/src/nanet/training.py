"""Training loop: clean images only, joint reconstruction + classification.

Each epoch shuffles the train split, and every batch goes through
load -> rotate (uniform random angle) -> resize -> forward -> loss ->
backward -> Adam. In classifier_only mode the autoencoder is absent and the
objective is cross-entropy alone. All randomness (shuffling, angles,
dropout) derives from counter-based streams keyed by the config seed, so a
given (dataset, config) pair always produces the same checkpoint bits.
"""

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .checkpoint import FORMAT_VERSION, Checkpoint
from .dataset import ImageBuffer, augment_rotate, read_png, resize
from .errors import MissingSplit, NonFiniteLoss
from .losses import cross_entropy, mse_loss, total_loss
from .model import (
    AutoencoderConfig,
    ClassifierConfig,
    forward_classifier,
    forward_nanet,
    init_params,
)
from .morse import letter_index
from .optim import AdamState, adam_step, zero_grads
from .tensor import Tensor

MODES = ("nanet", "classifier_only")

PRESETS = {
    "desk": {"image_size": 64, "epochs": 40, "batch_size": 8, "lr": 1e-4},
    "paper": {"image_size": 224, "epochs": 300, "batch_size": 8, "lr": 1e-4},
}


@dataclass
class TrainConfig:
    epochs: int = 40
    batch_size: int = 8
    lr: float = 1e-4
    image_size: int = 64
    augment_rotation_deg: float = 15.0
    seed: int = 0
    mode: str = "nanet"

    def validate(self):
        if self.batch_size < 1:
            raise ValueError(f"batch_size {self.batch_size} < 1")
        if self.lr <= 0:
            raise ValueError(f"lr {self.lr} must be positive")
        if self.image_size % 8:
            raise ValueError(f"image_size {self.image_size} not divisible by 8")
        if self.epochs < 1:
            raise ValueError(f"epochs {self.epochs} < 1")
        if self.mode not in MODES:
            raise ValueError(f"mode {self.mode!r} not in {MODES}")

    def to_dict(self):
        return dataclasses.asdict(self)


def preset_config(name, **overrides) -> TrainConfig:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    merged = dict(PRESETS[name])
    merged.update({k: v for k, v in overrides.items() if v is not None})
    return TrainConfig(**merged)


def _stream(seed, lane):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, lane))))


def _load_train_images(manifest, items):
    """Decode the whole train split once, kept as uint8 to bound memory."""
    root = Path(manifest.root)
    images = []
    labels = np.empty(len(items), dtype=np.int64)
    for i, it in enumerate(items):
        buf = read_png(root / it.path)
        images.append(np.round(buf.values * 255.0).astype(np.uint8))
        labels[i] = letter_index(it.letter)
    return images, labels


def _prepare_batch(images, idx, angles, size, background):
    """uint8 canvas images -> rotated, resized float batch (B,1,size,size)."""
    batch = np.empty((len(idx), 1, size, size), dtype=np.float32)
    for k, (i, ang) in enumerate(zip(idx, angles)):
        buf = ImageBuffer.from_array(images[i].astype(np.float32) / 255.0)
        rot = augment_rotate(buf, ang, fill=background)
        batch[k, 0] = resize(rot, size, size).values
    return batch


def train(manifest, cfg: TrainConfig, progress=None):
    """Run the full loop; returns (Checkpoint, history).

    `history` holds one dict per epoch with mean mse/ce/total over all
    images. `progress`, when given, is called as progress(epoch_index,
    history_entry) after each epoch. A non-finite loss aborts immediately.
    """
    cfg.validate()
    items = manifest.train_items()
    if not items:
        raise MissingSplit("manifest has no train items")
    if any(it.condition != "clean" for it in items):
        raise ValueError("train split must be clean-only")

    images, labels = _load_train_images(manifest, items)
    background = manifest.render_spec.background
    n = len(images)

    ae_cfg = AutoencoderConfig() if cfg.mode == "nanet" else None
    cls_cfg = ClassifierConfig()
    params = init_params(ae_cfg, cls_cfg, cfg.seed)
    state = AdamState(lr=cfg.lr)
    data_rng = _stream(cfg.seed, 0)
    drop_rng = _stream(cfg.seed, 1)

    history = []
    initial_total = None
    for epoch in range(cfg.epochs):
        perm = data_rng.permutation(n)
        sums = {"mse": 0.0, "ce": 0.0, "total": 0.0}
        for start in range(0, n, cfg.batch_size):
            idx = perm[start : start + cfg.batch_size]
            angles = data_rng.uniform(-cfg.augment_rotation_deg, cfg.augment_rotation_deg, len(idx))
            batch = _prepare_batch(images, idx, angles, cfg.image_size, background)
            x = Tensor(batch)
            y = labels[idx]
            zero_grads(params.tensors)
            if cfg.mode == "nanet":
                recon, logits = forward_nanet(params, x, training=True, rng=drop_rng)
                mse = mse_loss(recon, x)
                ce = cross_entropy(logits, y)
                loss = total_loss(mse, ce)
                mse_val = float(mse.data)
            else:
                logits = forward_classifier(params, x, training=True, rng=drop_rng)
                ce = cross_entropy(logits, y)
                loss = ce
                mse_val = 0.0
            lv = float(loss.data)
            if initial_total is None:
                initial_total = lv
            if not np.isfinite(lv):
                raise NonFiniteLoss(
                    f"non-finite loss {lv} at epoch {epoch}, step {start // cfg.batch_size}"
                )
            loss.backward()
            adam_step(params.tensors, state)
            sums["mse"] += mse_val * len(idx)
            sums["ce"] += float(ce.data) * len(idx)
            sums["total"] += lv * len(idx)
        entry = {"epoch": epoch, **{k: v / n for k, v in sums.items()},
                 "initial_total": initial_total}
        history.append(entry)
        if progress is not None:
            progress(epoch, entry)

    configs = {
        "format_version": FORMAT_VERSION,
        "mode": cfg.mode,
        "image_size": cfg.image_size,
        "ae_config": ae_cfg.to_dict() if ae_cfg is not None else None,
        "cls_config": cls_cfg.to_dict(),
        "train": cfg.to_dict(),
    }
    tensors = {name: t.data.copy() for name, t in params.tensors.items()}
    return Checkpoint(configs, tensors), history
