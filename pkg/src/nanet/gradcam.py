"""Class-discriminative heatmaps from the classifier's last conv stage.

The selected logit is backpropagated to the final rectified conv feature
map; channel weights are the spatial means of those gradients, the map is
relu(sum_k w_k A_k), bilinearly upsampled to the query image's size and
min-max normalized. A class whose logit is constant in the features (zero
gradient everywhere) yields the all-zero map.
"""

import numpy as np

from .dataset import ImageBuffer, resize
from .model import forward_autoencoder, forward_classifier
from .morse import letter_index
from .tensor import Tensor


def _upsample_bilinear(arr, out_h, out_w):
    """Half-pixel-aligned bilinear resize of a raw float map (no clamping)."""
    h, w = arr.shape
    ys = np.clip((np.arange(out_h, dtype=np.float64) + 0.5) * (h / out_h) - 0.5, 0, h - 1)
    xs = np.clip((np.arange(out_w, dtype=np.float64) + 0.5) * (w / out_w) - 0.5, 0, w - 1)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    top = arr[np.ix_(y0, x0)] * (1 - fx) + arr[np.ix_(y0, x1)] * fx
    bot = arr[np.ix_(y1, x0)] * (1 - fx) + arr[np.ix_(y1, x1)] * fx
    return top * (1 - fy) + bot * fy


def grad_cam(ckpt, image: ImageBuffer, target_class=None) -> ImageBuffer:
    """Heatmap for `target_class` (letter or index; default: the argmax
    prediction), returned at the query image's dimensions with values
    in [0, 1].
    """
    mode = ckpt.configs["mode"]
    size = ckpt.configs["image_size"]
    params = ckpt.to_params()
    x = Tensor(resize(image, size, size).values[None, None])

    capture = []
    if mode == "nanet":
        net_in = forward_autoencoder(params, x)
    else:
        net_in = x
    logits = forward_classifier(params, net_in, training=False, capture=capture)
    feats = capture[0]

    if target_class is None:
        target = int(logits.data.argmax())
    elif isinstance(target_class, str):
        target = letter_index(target_class)
    else:
        target = int(target_class)

    onehot = np.zeros_like(logits.data)
    onehot[0, target] = 1.0
    (logits * onehot).sum().backward()

    grads = feats.grad
    if grads is None:
        cam = np.zeros(feats.data.shape[2:], dtype=np.float64)
    else:
        weights = grads.mean(axis=(2, 3), keepdims=True)
        cam = np.maximum((weights * feats.data).sum(axis=1)[0], 0.0).astype(np.float64)

    up = _upsample_bilinear(cam, image.height, image.width)
    lo, hi = float(up.min()), float(up.max())
    if hi > lo:
        up = (up - lo) / (hi - lo)
    else:
        up = np.zeros_like(up)
    return ImageBuffer(image.height, image.width, up.astype(np.float32))
