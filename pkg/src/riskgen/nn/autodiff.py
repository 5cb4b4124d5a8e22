"""Reverse-mode automatic differentiation over numpy arrays (float64)."""
from __future__ import annotations

import numpy as np

from ..errors import NonScalarLoss, ShapeMismatch


def _unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and grad.shape[ax] != 1:
            grad = grad.sum(axis=ax, keepdims=True)
    return grad


def _sigmoid(x):
    # split by sign so exp never overflows
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _softplus(x):
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


class Tensor:
    """A node in the computation graph.

    Leaves created with ``requires_grad=True`` are parameters; their ``grad``
    accumulates across ``backward`` calls until ``zero_grad``.
    """

    __slots__ = ("value", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, value, requires_grad=False, parents=(), backward=None, name=None):
        self.value = np.asarray(value, dtype=float)
        self.requires_grad = requires_grad
        self.grad = np.zeros_like(self.value) if requires_grad and not parents else None
        self._parents = parents
        self._backward = backward
        self.name = name

    def __repr__(self):
        return f"Tensor(shape={self.value.shape}, name={self.name!r})"

    @property
    def shape(self):
        return self.value.shape

    @property
    def is_leaf(self):
        return not self._parents

    def zero_grad(self):
        if self.requires_grad:
            self.grad = np.zeros_like(self.value)

    # -- graph construction ------------------------------------------------
    @staticmethod
    def _wrap(x):
        return x if isinstance(x, Tensor) else Tensor(x)

    def _child(self, value, parents, backward):
        needs = any(p.requires_grad for p in parents)
        return Tensor(value, requires_grad=needs, parents=parents if needs else (), backward=backward if needs else None)

    def __add__(self, other):
        other = self._wrap(other)
        a, b = self, other

        def bw(g):
            return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

        return self._child(a.value + b.value, (a, b), bw)

    __radd__ = __add__

    def __neg__(self):
        return self._child(-self.value, (self,), lambda g: (-g,))

    def __sub__(self, other):
        return self + (-self._wrap(other))

    def __rsub__(self, other):
        return self._wrap(other) + (-self)

    def __mul__(self, other):
        other = self._wrap(other)
        a, b = self, other

        def bw(g):
            return _unbroadcast(g * b.value, a.shape), _unbroadcast(g * a.value, b.shape)

        return self._child(a.value * b.value, (a, b), bw)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._wrap(other)
        return self * other.reciprocal()

    def reciprocal(self):
        v = 1.0 / self.value
        return self._child(v, (self,), lambda g: (-g * v * v,))

    def __matmul__(self, other):
        other = self._wrap(other)
        a, b = self, other
        if a.value.ndim != 2 or b.value.ndim != 2 or a.shape[1] != b.shape[0]:
            raise ShapeMismatch(f"matmul {a.shape} @ {b.shape}")

        def bw(g):
            return g @ b.value.T, a.value.T @ g

        return self._child(a.value @ b.value, (a, b), bw)

    def __getitem__(self, idx):
        shape = self.shape

        def bw(g):
            out = np.zeros(shape)
            if _needs_add_at(idx):
                np.add.at(out, idx, g)
            else:
                out[idx] = g
            return (out,)

        return self._child(self.value[idx], (self,), bw)

    def reshape(self, *shape):
        old = self.shape
        return self._child(self.value.reshape(*shape), (self,), lambda g: (g.reshape(old),))

    def square(self):
        v = self.value
        return self._child(v * v, (self,), lambda g: (2.0 * g * v,))

    def exp(self):
        e = np.exp(self.value)
        return self._child(e, (self,), lambda g: (g * e,))

    def log(self):
        v = self.value
        return self._child(np.log(v), (self,), lambda g: (g / v,))

    def sigmoid(self):
        s = _sigmoid(self.value)
        return self._child(s, (self,), lambda g: (g * s * (1.0 - s),))

    def tanh(self):
        t = np.tanh(self.value)
        return self._child(t, (self,), lambda g: (g * (1.0 - t * t),))

    def relu(self):
        mask = self.value > 0
        return self._child(self.value * mask, (self,), lambda g: (g * mask,))

    def softplus(self):
        """``log(1 + e^x)``, overflow-safe; its derivative is the sigmoid."""
        s = _sigmoid(self.value)
        return self._child(_softplus(self.value), (self,), lambda g: (g * s,))

    def sum(self, axis=None):
        shape = self.shape

        def bw(g):
            if axis is not None:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, shape).copy(),)

        return self._child(self.value.sum(axis=axis), (self,), bw)

    def mean(self, axis=None):
        n = self.value.size if axis is None else self.shape[axis]
        return self.sum(axis) * (1.0 / n)

    # -- backward --------------------------------------------------------
    def backward(self):
        backward(self)


def _needs_add_at(idx):
    """Fancy indexing may repeat positions; basic slicing never does."""
    items = idx if isinstance(idx, tuple) else (idx,)
    return any(isinstance(i, (list, np.ndarray)) for i in items)


def concat(tensors, axis=-1) -> Tensor:
    tensors = [Tensor._wrap(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    cuts = np.cumsum(sizes)[:-1]

    def bw(g):
        return tuple(np.split(g, cuts, axis=axis))

    return tensors[0]._child(np.concatenate([t.value for t in tensors], axis=axis), tuple(tensors), bw)


def stack(tensors, axis=0) -> Tensor:
    tensors = [Tensor._wrap(t) for t in tensors]

    def bw(g):
        return tuple(np.moveaxis(g, axis, 0))

    return tensors[0]._child(np.stack([t.value for t in tensors], axis=axis), tuple(tensors), bw)


def _topo_order(root):
    order, seen = [], set()
    stack_ = [(root, False)]
    while stack_:
        node, done = stack_.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack_.append((node, True))
        for p in node._parents:
            if id(p) not in seen and p.requires_grad:
                stack_.append((p, False))
    return order


def backward(loss: Tensor):
    """Accumulate d(loss)/d(leaf) into every reachable leaf with ``requires_grad``."""
    if loss.value.size != 1:
        raise NonScalarLoss(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        return
    order = _topo_order(loss)
    # interior nodes restart from zero so repeated calls only accumulate at the leaves
    grads = {id(loss): np.ones_like(loss.value)}
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.is_leaf:
            node.grad = node.grad + g
            continue
        for parent, pg in zip(node._parents, node._backward(g)):
            if not parent.requires_grad:
                continue
            key = id(parent)
            grads[key] = grads[key] + pg if key in grads else pg
