"""Neural-network primitives on Tensor, each with a hand-written backward.

conv2d computes cross-correlation (no kernel flip). All convolutions are
lowered to one GEMM via im2col. Column matrices below COLS_CACHE_MAX bytes
are kept alive for the backward pass; larger ones are rebuilt on demand so
peak memory stays near the size of the activations.
"""

import numpy as np

from .errors import ShapeMismatch
from .tensor import Tensor, make_node

# Per-conv cap on cached im2col matrices (bytes). Desk-scale layers all fit;
# 224x224 layers fall back to recomputation.
COLS_CACHE_MAX = 128 * 1024 * 1024


def _im2col(xp, kh, kw, stride, oh, ow):
    """(N,C,Hp,Wp) -> (N, C*kh*kw, oh*ow) patch matrix."""
    n, c = xp.shape[:2]
    cols = np.empty((n, c, kh, kw, oh, ow), dtype=xp.dtype)
    for i in range(kh):
        for j in range(kw):
            cols[:, :, i, j] = xp[:, :, i : i + stride * oh : stride, j : j + stride * ow : stride]
    return cols.reshape(n, c * kh * kw, oh * ow)


def _col2im(cols, n, c, hp, wp, kh, kw, stride, oh, ow):
    """Adjoint of _im2col: scatter-add patches back onto the (padded) image."""
    xp = np.zeros((n, c, hp, wp), dtype=cols.dtype)
    cols6 = cols.reshape(n, c, kh, kw, oh, ow)
    for i in range(kh):
        for j in range(kw):
            xp[:, :, i : i + stride * oh : stride, j : j + stride * ow : stride] += cols6[:, :, i, j]
    return xp


def _pad(x, p):
    if p == 0:
        return x
    n, c, h, w = x.shape
    xp = np.zeros((n, c, h + 2 * p, w + 2 * p), dtype=x.dtype)
    xp[:, :, p : p + h, p : p + w] = x
    return xp


def conv2d(x: Tensor, w: Tensor, b: Tensor, stride=1, padding=0) -> Tensor:
    """Batched 2-D cross-correlation plus bias.

    x: (N,Cin,H,W), w: (Cout,Cin,kh,kw), b: (Cout,) -> (N,Cout,H',W')
    with H' = floor((H+2p-kh)/s)+1 and likewise W'.
    """
    if x.data.ndim != 4 or w.data.ndim != 4:
        raise ShapeMismatch(f"conv2d expects 4-D input/weight, got {x.data.shape}, {w.data.shape}")
    n, cin, h, wid = x.data.shape
    cout, cin_w, kh, kw = w.data.shape
    if cin != cin_w:
        raise ShapeMismatch(f"conv2d channels: input {cin} vs weight {cin_w}")
    if b.data.shape != (cout,):
        raise ShapeMismatch(f"conv2d bias shape {b.data.shape}, expected ({cout},)")
    oh = (h + 2 * padding - kh) // stride + 1
    ow = (wid + 2 * padding - kw) // stride + 1
    if oh < 1 or ow < 1 or h + 2 * padding < kh or wid + 2 * padding < kw:
        raise ShapeMismatch(f"conv2d kernel {kh}x{kw} does not fit padded input {h}x{wid} (pad {padding})")

    cols = _im2col(_pad(x.data, padding), kh, kw, stride, oh, ow)
    wmat = w.data.reshape(cout, -1)
    y = np.matmul(wmat, cols)
    y += b.data.reshape(1, cout, 1)
    out = make_node(y.reshape(n, cout, oh, ow), (x, w, b))
    cached = cols if out.requires_grad and cols.nbytes <= COLS_CACHE_MAX else None
    del cols

    def bw():
        g = out.grad.reshape(n, cout, oh * ow)
        if b.requires_grad:
            b.accumulate_grad(g.sum(axis=(0, 2)), own=True)
        if w.requires_grad:
            cols_r = cached if cached is not None else _im2col(_pad(x.data, padding), kh, kw, stride, oh, ow)
            gw = np.matmul(g, cols_r.transpose(0, 2, 1)).sum(axis=0)
            gw.shape = w.data.shape
            w.accumulate_grad(gw, own=True)
        if x.requires_grad:
            gcols = np.matmul(wmat.T, g)
            gxp = _col2im(gcols, n, cin, h + 2 * padding, wid + 2 * padding, kh, kw, stride, oh, ow)
            if padding:
                gxp = np.ascontiguousarray(gxp[:, :, padding:-padding, padding:-padding])
            x.accumulate_grad(gxp, own=True)

    out._backward_fn = bw if out.requires_grad else None
    return out


def conv_transpose2d(x: Tensor, w: Tensor, b: Tensor, stride=1) -> Tensor:
    """Adjoint of strided conv2d (learnable upsampling).

    x: (N,Cin,H,W), w: (Cin,Cout,kh,kw), b: (Cout,) -> (N,Cout,(H-1)s+kh,(W-1)s+kw)
    """
    if x.data.ndim != 4 or w.data.ndim != 4:
        raise ShapeMismatch(f"conv_transpose2d expects 4-D input/weight, got {x.data.shape}, {w.data.shape}")
    n, cin, h, wid = x.data.shape
    cin_w, cout, kh, kw = w.data.shape
    if cin != cin_w:
        raise ShapeMismatch(f"conv_transpose2d channels: input {cin} vs weight {cin_w}")
    if b.data.shape != (cout,):
        raise ShapeMismatch(f"conv_transpose2d bias shape {b.data.shape}, expected ({cout},)")
    ho = (h - 1) * stride + kh
    wo = (wid - 1) * stride + kw

    wmat = w.data.reshape(cin, cout * kh * kw)
    cols = np.matmul(wmat.T, x.data.reshape(n, cin, h * wid))
    y = _col2im(cols, n, cout, ho, wo, kh, kw, stride, h, wid)
    y += b.data.reshape(1, cout, 1, 1)
    out = make_node(y, (x, w, b))
    del cols

    def bw():
        if b.requires_grad:
            b.accumulate_grad(out.grad.sum(axis=(0, 2, 3)), own=True)
        gcols = _im2col(out.grad, kh, kw, stride, h, wid)
        if x.requires_grad:
            gx = np.matmul(wmat, gcols)
            gx.shape = (n, cin, h, wid)
            x.accumulate_grad(gx, own=True)
        if w.requires_grad:
            xr = x.data.reshape(n, cin, h * wid)
            gw = np.matmul(xr, gcols.transpose(0, 2, 1)).sum(axis=0)
            gw.shape = w.data.shape
            w.accumulate_grad(gw, own=True)

    out._backward_fn = bw if out.requires_grad else None
    return out


def max_pool2d(x: Tensor, kernel=2, stride=None) -> Tensor:
    """Max pooling; argmax positions are recorded for the backward pass."""
    if stride is None:
        stride = kernel
    n, c, h, w = x.data.shape
    if h < kernel or w < kernel:
        raise ShapeMismatch(f"max_pool2d kernel {kernel} larger than input {h}x{w}")
    oh = (h - kernel) // stride + 1
    ow = (w - kernel) // stride + 1
    windows = np.empty((kernel * kernel, n, c, oh, ow), dtype=x.data.dtype)
    for i in range(kernel):
        for j in range(kernel):
            windows[i * kernel + j] = x.data[:, :, i : i + stride * oh : stride, j : j + stride * ow : stride]
    am = windows.argmax(axis=0)
    out = make_node(windows.max(axis=0), (x,))
    del windows

    def bw():
        if stride == kernel and h == kernel * oh and w == kernel * ow:
            # windows tile the input exactly: scatter grads by argmax index
            g5 = np.zeros((n, c, oh, ow, kernel * kernel), dtype=x.data.dtype)
            np.put_along_axis(g5, am[..., None], out.grad[..., None], axis=4)
            g6 = g5.reshape(n, c, oh, ow, kernel, kernel).transpose(0, 1, 2, 4, 3, 5)
            gx = g6.reshape(n, c, h, w)
        else:
            gx = np.zeros_like(x.data)
            for idx in range(kernel * kernel):
                mask = am == idx
                i, j = divmod(idx, kernel)
                gx[:, :, i : i + stride * oh : stride, j : j + stride * ow : stride] += out.grad * mask
        x.accumulate_grad(gx, own=True)

    out._backward_fn = bw if out.requires_grad else None
    return out


def adaptive_avg_pool2d(x: Tensor, out_h, out_w) -> Tensor:
    """Average pooling onto a fixed (out_h, out_w) grid of covering bins."""
    n, c, h, w = x.data.shape
    if out_h < 1 or out_w < 1:
        raise ShapeMismatch(f"adaptive_avg_pool2d target {out_h}x{out_w}")
    hs = [(i * h) // out_h for i in range(out_h)]
    he = [-(-((i + 1) * h) // out_h) for i in range(out_h)]
    ws = [(j * w) // out_w for j in range(out_w)]
    we = [-(-((j + 1) * w) // out_w) for j in range(out_w)]
    y = np.empty((n, c, out_h, out_w), dtype=x.data.dtype)
    for i in range(out_h):
        for j in range(out_w):
            y[:, :, i, j] = x.data[:, :, hs[i] : he[i], ws[j] : we[j]].mean(axis=(2, 3))
    out = make_node(y, (x,))

    def bw():
        gx = np.zeros_like(x.data)
        for i in range(out_h):
            for j in range(out_w):
                count = (he[i] - hs[i]) * (we[j] - ws[j])
                gx[:, :, hs[i] : he[i], ws[j] : we[j]] += out.grad[:, :, i : i + 1, j : j + 1] / count
        x.accumulate_grad(gx, own=True)

    out._backward_fn = bw if out.requires_grad else None
    return out


def relu(x: Tensor) -> Tensor:
    out = make_node(np.maximum(x.data, 0), (x,))

    def bw():
        x.accumulate_grad(out.grad * (out.data > 0), own=True)

    out._backward_fn = bw if out.requires_grad else None
    return out


def sigmoid(x: Tensor) -> Tensor:
    d = x.data
    y = np.empty_like(d)
    pos = d >= 0
    y[pos] = 1.0 / (1.0 + np.exp(-d[pos]))
    ex = np.exp(d[~pos])
    y[~pos] = ex / (1.0 + ex)
    out = make_node(y, (x,))

    def bw():
        x.accumulate_grad(out.grad * out.data * (1.0 - out.data), own=True)

    out._backward_fn = bw if out.requires_grad else None
    return out


def dropout(x: Tensor, p, training, rng) -> Tensor:
    """Inverted dropout: train-time scaling by 1/(1-p); identity in eval."""
    if not 0.0 <= p < 1.0:
        raise ShapeMismatch(f"dropout probability {p} outside [0,1)")
    if not training or p == 0.0:
        return x
    keep = (rng.random(x.data.shape) >= p).astype(x.data.dtype)
    scale = 1.0 / (1.0 - p)
    out = make_node(x.data * keep * scale, (x,))

    def bw():
        x.accumulate_grad(out.grad * keep * scale, own=True)

    out._backward_fn = bw if out.requires_grad else None
    return out


def linear(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """x:(N,F) @ w:(O,F)^T + b:(O,) -> (N,O)."""
    if x.data.ndim != 2 or w.data.ndim != 2:
        raise ShapeMismatch(f"linear expects 2-D input/weight, got {x.data.shape}, {w.data.shape}")
    if x.data.shape[1] != w.data.shape[1]:
        raise ShapeMismatch(f"linear features: input {x.data.shape[1]} vs weight {w.data.shape[1]}")
    if b.data.shape != (w.data.shape[0],):
        raise ShapeMismatch(f"linear bias shape {b.data.shape}, expected ({w.data.shape[0]},)")
    out = make_node(x.data @ w.data.T + b.data, (x, w, b))

    def bw():
        g = out.grad
        if x.requires_grad:
            x.accumulate_grad(g @ w.data, own=True)
        if w.requires_grad:
            w.accumulate_grad(g.T @ x.data, own=True)
        if b.requires_grad:
            b.accumulate_grad(g.sum(axis=0), own=True)

    out._backward_fn = bw if out.requires_grad else None
    return out


def concat_channels(a: Tensor, b: Tensor) -> Tensor:
    """Concatenate along the channel axis; backward splits the gradient."""
    if a.data.ndim != 4 or b.data.ndim != 4:
        raise ShapeMismatch("concat_channels expects 4-D tensors")
    if a.data.shape[0] != b.data.shape[0] or a.data.shape[2:] != b.data.shape[2:]:
        raise ShapeMismatch(f"concat_channels: {a.data.shape} vs {b.data.shape}")
    ca = a.data.shape[1]
    out = make_node(np.concatenate((a.data, b.data), axis=1), (a, b))

    def bw():
        if a.requires_grad:
            a.accumulate_grad(out.grad[:, :ca])
        if b.requires_grad:
            b.accumulate_grad(out.grad[:, ca:])

    out._backward_fn = bw if out.requires_grad else None
    return out


def log_softmax(x: Tensor) -> Tensor:
    """Row-wise log-softmax of (N,C) scores."""
    if x.data.ndim != 2:
        raise ShapeMismatch(f"log_softmax expects (N,C), got {x.data.shape}")
    z = x.data - x.data.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=1, keepdims=True))
    out = make_node(z - lse, (x,))

    def bw():
        soft = np.exp(out.data)
        g = out.grad
        x.accumulate_grad(g - soft * g.sum(axis=1, keepdims=True), own=True)

    out._backward_fn = bw if out.requires_grad else None
    return out
