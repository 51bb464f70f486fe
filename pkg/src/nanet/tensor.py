"""Dense tensors with reverse-mode automatic differentiation.

The computation graph is implicit: every op returns a new Tensor holding
references to its parent tensors and a closure that pushes gradients to
them. ``backward()`` on a scalar topologically sorts that graph and runs
the closures in exact reverse order, accumulating into ``.grad`` slots.

Arrays are float32 by default; float64 is supported throughout so that
gradient verification can run at high precision.
"""

import numpy as np

from .errors import DisconnectedGraph, ShapeMismatch

_FLOAT_DTYPES = (np.float32, np.float64)

_GRAD_ENABLED = True


class _NoGrad:
    def __enter__(self):
        global _GRAD_ENABLED
        self._prev = _GRAD_ENABLED
        _GRAD_ENABLED = False
        return self

    def __exit__(self, *exc):
        global _GRAD_ENABLED
        _GRAD_ENABLED = self._prev
        return False


def no_grad():
    """Context manager: ops inside record no graph, so nothing is retained
    for backward. Use for inference and evaluation passes.
    """
    return _NoGrad()


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward_fn")

    def __init__(self, data, requires_grad=False, dtype=None):
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype not in _FLOAT_DTYPES:
            arr = arr.astype(np.float32)
        self.data = arr
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = ()
        self._backward_fn = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype.name}, requires_grad={self.requires_grad})"

    def zero_grad(self):
        self.grad = None

    def accumulate_grad(self, g, own=False):
        """Add `g` into the grad slot. `own=True` promises that `g` is a
        fresh array the caller will not reuse, so it can be adopted
        without a defensive copy.
        """
        if self.grad is None:
            if own and isinstance(g, np.ndarray) and g.dtype == self.data.dtype and g.base is None:
                self.grad = g
            else:
                self.grad = np.array(g, dtype=self.data.dtype, copy=True)
        else:
            self.grad += g

    def backward(self):
        """Backpropagate from this scalar through the recorded graph.

        The graph bookkeeping (parent links and closures) is released
        afterwards; ``.grad`` slots survive.
        """
        if self.data.size != 1:
            raise ShapeMismatch(f"backward needs a scalar, got shape {self.data.shape}")
        if not self.requires_grad:
            raise DisconnectedGraph("tensor has no recorded graph to backpropagate through")

        topo = []
        visited = set()
        stack = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in visited:
                    stack.append((parent, False))

        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward_fn is not None:
                node._backward_fn()
            node._parents = ()
            node._backward_fn = None

    # -- arithmetic (strict shapes: operands must match exactly or be scalars) --

    def __add__(self, other):
        if isinstance(other, Tensor):
            if self.data.shape != other.data.shape:
                raise ShapeMismatch(f"add: {self.data.shape} vs {other.data.shape}")
            out = make_node(self.data + other.data, (self, other))

            def bw():
                if self.requires_grad:
                    self.accumulate_grad(out.grad)
                if other.requires_grad:
                    other.accumulate_grad(out.grad)

            out._backward_fn = bw if out.requires_grad else None
            return out
        out = make_node(self.data + other, (self,))

        def bw_const():
            self.accumulate_grad(out.grad)

        out._backward_fn = bw_const if out.requires_grad else None
        return out

    def __mul__(self, other):
        if isinstance(other, Tensor):
            if self.data.shape != other.data.shape:
                raise ShapeMismatch(f"mul: {self.data.shape} vs {other.data.shape}")
            out = make_node(self.data * other.data, (self, other))

            def bw():
                if self.requires_grad:
                    self.accumulate_grad(out.grad * other.data)
                if other.requires_grad:
                    other.accumulate_grad(out.grad * self.data)

            out._backward_fn = bw if out.requires_grad else None
            return out
        # scalar or same-shape constant ndarray: no gradient to the constant
        const = other
        out = make_node(self.data * const, (self,))

        def bw_const():
            self.accumulate_grad(out.grad * const)

        out._backward_fn = bw_const if out.requires_grad else None
        return out

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    def sum(self):
        out = make_node(self.data.sum(), (self,))

        def bw():
            self.accumulate_grad(np.full_like(self.data, out.grad))

        out._backward_fn = bw if out.requires_grad else None
        return out

    def mean(self):
        n = self.data.size
        out = make_node(self.data.mean(), (self,))

        def bw():
            self.accumulate_grad(np.full_like(self.data, out.grad / n))

        out._backward_fn = bw if out.requires_grad else None
        return out

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        old_shape = self.data.shape
        out = make_node(self.data.reshape(shape), (self,))

        def bw():
            self.accumulate_grad(out.grad.reshape(old_shape))

        out._backward_fn = bw if out.requires_grad else None
        return out


def make_node(data, parents):
    """Wrap an op result; the caller attaches the backward closure."""
    out = Tensor(data)
    if _GRAD_ENABLED:
        live = tuple(p for p in parents if isinstance(p, Tensor) and p.requires_grad)
        if live:
            out.requires_grad = True
            out._parents = live
    return out
