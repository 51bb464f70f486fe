"""A short tour of the tensor engine.

Builds a tiny computation by hand, runs the backward pass, and checks one
gradient entry against a central finite difference. The same machinery
(and nothing else) powers the full training loop.
"""

import numpy as np

from nanet import ops
from nanet.losses import mse_loss
from nanet.tensor import Tensor

rng = np.random.default_rng(0)

# a 1-channel 8x8 "image" through conv -> relu -> mean, all differentiable
x = Tensor(rng.standard_normal((1, 1, 8, 8)).astype(np.float32), requires_grad=True)
w = Tensor((rng.standard_normal((2, 1, 3, 3)) * 0.5).astype(np.float32), requires_grad=True)
b = Tensor(np.zeros(2, dtype=np.float32), requires_grad=True)

y = ops.relu(ops.conv2d(x, w, b, stride=1, padding=1))
loss = mse_loss(y, Tensor(np.zeros(y.data.shape, dtype=np.float32)))
loss.backward()

print(f"loss            {float(loss.data):.6f}")
print(f"dloss/dw shape  {w.grad.shape}, mean|g| {np.abs(w.grad).mean():.6f}")

# numeric check of a single weight entry
h = 1e-3
orig = w.data[0, 0, 1, 1]

def f():
    out = ops.relu(ops.conv2d(x, w, b, stride=1, padding=1))
    return float(mse_loss(out, Tensor(np.zeros(out.data.shape, dtype=np.float32))).data)

w.data[0, 0, 1, 1] = orig + h
lp = f()
w.data[0, 0, 1, 1] = orig - h
lm = f()
w.data[0, 0, 1, 1] = orig

numeric = (lp - lm) / (2 * h)
analytic = float(w.grad[0, 0, 1, 1])
print(f"analytic grad   {analytic:.6f}")
print(f"numeric grad    {numeric:.6f}")
print(f"rel err         {abs(analytic - numeric) / max(1.0, abs(numeric)):.2e}")
