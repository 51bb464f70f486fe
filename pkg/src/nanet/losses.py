"""Training losses: mean squared error, cross-entropy over logits, and
their sum (the joint reconstruction + classification objective).
"""

import numpy as np

from .errors import ShapeMismatch
from .tensor import Tensor, make_node


def mse_loss(pred: Tensor, target: Tensor) -> Tensor:
    """(1/n) * sum((pred - target)^2) over all n elements."""
    if pred.data.shape != target.data.shape:
        raise ShapeMismatch(f"mse_loss: {pred.data.shape} vs {target.data.shape}")
    diff = pred.data - target.data
    n = diff.size
    out = make_node((diff * diff).mean(), (pred, target))

    def bw():
        g = out.grad * 2.0 / n
        if pred.requires_grad:
            pred.accumulate_grad(g * diff)
        if target.requires_grad:
            target.accumulate_grad(-g * diff)

    out._backward_fn = bw if out.requires_grad else None
    return out


def cross_entropy(logits: Tensor, targets) -> Tensor:
    """Mean negative log-likelihood of integer class targets under
    softmax(logits); computed as log-softmax + NLL for stability.
    """
    if logits.data.ndim != 2:
        raise ShapeMismatch(f"cross_entropy expects (N,C) logits, got {logits.data.shape}")
    t = np.asarray(targets)
    n, c = logits.data.shape
    if t.shape != (n,):
        raise ShapeMismatch(f"cross_entropy targets shape {t.shape}, expected ({n},)")
    if t.min() < 0 or t.max() >= c:
        raise ShapeMismatch(f"class index outside [0,{c})")
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    logsm = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    out = make_node(-logsm[np.arange(n), t].mean(), (logits,))

    def bw():
        soft = np.exp(logsm)
        soft[np.arange(n), t] -= 1.0
        logits.accumulate_grad(out.grad / n * soft)

    out._backward_fn = bw if out.requires_grad else None
    return out


def total_loss(mse: Tensor, ce: Tensor) -> Tensor:
    """Joint objective: exact sum of the two scalar losses."""
    return mse + ce
