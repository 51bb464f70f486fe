"""Adam optimizer with bias correction, operating on named parameter dicts.

The update runs in fixed-size chunks through two scratch buffers so the
intermediate products stay cache-resident instead of materializing full-size
temporaries for every term.
"""

from dataclasses import dataclass, field

import numpy as np

_CHUNK = 65536


@dataclass
class AdamState:
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params, state: AdamState):
    """One Adam update over `params` ({name: Tensor}), in place.

    m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2,
    p <- p - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps).
    Parameters with no gradient decay their moments and still step.
    """
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1 ** state.t
    bc2 = 1.0 - b2 ** state.t
    s1 = s2 = zeros = None
    for name, p in params.items():
        if name not in state.m:
            state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        pf = p.data.reshape(-1)
        mf = state.m[name].reshape(-1)
        vf = state.v[name].reshape(-1)
        if p.grad is not None:
            gf = np.asarray(p.grad, dtype=p.data.dtype).reshape(-1)
        else:
            if zeros is None or zeros.dtype != p.data.dtype:
                zeros = np.zeros(_CHUNK, dtype=p.data.dtype)
            gf = None
        if s1 is None or s1.dtype != p.data.dtype:
            s1 = np.empty(_CHUNK, dtype=p.data.dtype)
            s2 = np.empty(_CHUNK, dtype=p.data.dtype)
        n = pf.shape[0]
        for a in range(0, n, _CHUNK):
            b = min(a + _CHUNK, n)
            k = b - a
            pc, mc, vc = pf[a:b], mf[a:b], vf[a:b]
            gc = gf[a:b] if gf is not None else zeros[:k]
            t1, t2 = s1[:k], s2[:k]
            mc *= b1
            np.multiply(gc, 1.0 - b1, out=t1)
            mc += t1
            vc *= b2
            np.multiply(gc, gc, out=t1)
            t1 *= 1.0 - b2
            vc += t1
            np.divide(vc, bc2, out=t1)
            np.sqrt(t1, out=t1)
            t1 += state.eps
            np.divide(mc, bc1, out=t2)
            t2 /= t1
            t2 *= state.lr
            pc -= t2


def zero_grads(params):
    for p in params.values():
        p.grad = None
