"""Reverse-mode autodiff over numpy arrays.

Just enough of a tensor library for MLP surrogates, policy/value networks and
differentiable search: elementwise arithmetic, matmul, reductions, relu,
(log-)softmax, concat, indexing and clipping.
"""

from __future__ import annotations

import numpy as np


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def as_tensor(x) -> "Tensor":
    return x if isinstance(x, Tensor) else Tensor(x)


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")
    __array_priority__ = 100

    def __init__(self, data, requires_grad: bool = False, _parents=(), _backward=None):
        self.data = np.asarray(data, dtype=float)
        self.grad = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in _parents)
        self._parents = _parents if self.requires_grad else ()
        self._backward = _backward

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        return f"Tensor({self.data!r}, requires_grad={self.requires_grad})"

    def zero_grad(self):
        self.grad = None

    # graph --------------------------------------------------------------

    def backward(self, grad=None):
        if grad is None:
            if self.data.size != 1:
                raise ValueError("backward() without a gradient needs a scalar output")
            grad = np.ones_like(self.data)
        order, seen = [], set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))
        grads = {id(self): np.asarray(grad, dtype=float)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if not node._parents:
                node.grad = g if node.grad is None else node.grad + g
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                grads[key] = pg if key not in grads else grads[key] + pg

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    # arithmetic -----------------------------------------------------------

    def __add__(self, other):
        other = as_tensor(other)
        a, b = self.shape, other.shape
        return Tensor(self.data + other.data, _parents=(self, other),
                      _backward=lambda g: (_unbroadcast(g, a), _unbroadcast(g, b)))

    __radd__ = __add__

    def __neg__(self):
        return Tensor(-self.data, _parents=(self,), _backward=lambda g: (-g,))

    def __sub__(self, other):
        return self + (-as_tensor(other))

    def __rsub__(self, other):
        return as_tensor(other) + (-self)

    def __mul__(self, other):
        other = as_tensor(other)
        x, y = self.data, other.data
        return Tensor(x * y, _parents=(self, other),
                      _backward=lambda g: (_unbroadcast(g * y, x.shape), _unbroadcast(g * x, y.shape)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_tensor(other)
        x, y = self.data, other.data
        return Tensor(x / y, _parents=(self, other),
                      _backward=lambda g: (_unbroadcast(g / y, x.shape),
                                           _unbroadcast(-g * x / (y * y), y.shape)))

    def __rtruediv__(self, other):
        return as_tensor(other) / self

    def __pow__(self, k: float):
        x = self.data
        return Tensor(x ** k, _parents=(self,), _backward=lambda g: (g * k * x ** (k - 1),))

    def __matmul__(self, other):
        other = as_tensor(other)
        x, y = self.data, other.data
        if x.ndim != 2 or y.ndim != 2 or x.shape[1] != y.shape[0]:
            raise ValueError(f"matmul shape mismatch: {x.shape} @ {y.shape}")
        return Tensor(x @ y, _parents=(self, other), _backward=lambda g: (g @ y.T, x.T @ g))

    # elementwise ------------------------------------------------------------

    def relu(self):
        mask = self.data > 0
        return Tensor(self.data * mask, _parents=(self,), _backward=lambda g: (g * mask,))

    def exp(self):
        e = np.exp(self.data)
        return Tensor(e, _parents=(self,), _backward=lambda g: (g * e,))

    def log(self):
        x = self.data
        return Tensor(np.log(x), _parents=(self,), _backward=lambda g: (g / x,))

    def abs(self):
        s = np.sign(self.data)
        return Tensor(np.abs(self.data), _parents=(self,), _backward=lambda g: (g * s,))

    def clip(self, lo, hi):
        x = self.data
        mask = (x >= lo) & (x <= hi)
        return Tensor(np.clip(x, lo, hi), _parents=(self,), _backward=lambda g: (g * mask,))

    def minimum(self, other):
        other = as_tensor(other)
        pick = self.data <= other.data
        a, b = self.shape, other.shape
        return Tensor(np.where(pick, self.data, other.data), _parents=(self, other),
                      _backward=lambda g: (_unbroadcast(g * pick, a), _unbroadcast(g * ~pick, b)))

    def maximum(self, other):
        return -((-self).minimum(-as_tensor(other)))

    # reductions / shape ------------------------------------------------------

    def sum(self, axis=None, keepdims=False):
        shape = self.shape

        def back(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, shape).copy(),)

        return Tensor(self.data.sum(axis=axis, keepdims=keepdims), _parents=(self,), _backward=back)

    def mean(self, axis=None, keepdims=False):
        n = self.data.size if axis is None else self.data.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / n)

    def reshape(self, *shape):
        old = self.shape
        return Tensor(self.data.reshape(*shape), _parents=(self,), _backward=lambda g: (g.reshape(old),))

    def __getitem__(self, idx):
        shape = self.shape

        def back(g):
            full = np.zeros(shape)
            np.add.at(full, idx, g)
            return (full,)

        return Tensor(self.data[idx], _parents=(self,), _backward=back)

    def take_along(self, indices, axis=-1):
        """``np.take_along_axis`` with gradient; ``indices`` is an int array."""
        indices = np.asarray(indices)
        shape = self.shape

        def back(g):
            full = np.zeros(shape)
            # no accumulation: callers gather distinct indices per row
            np.put_along_axis(full, indices, g, axis=axis)
            return (full,)

        return Tensor(np.take_along_axis(self.data, indices, axis=axis), _parents=(self,), _backward=back)

    def softmax(self, axis=-1):
        z = self.data - self.data.max(axis=axis, keepdims=True)
        e = np.exp(z)
        s = e / e.sum(axis=axis, keepdims=True)
        return Tensor(s, _parents=(self,),
                      _backward=lambda g: (s * (g - (g * s).sum(axis=axis, keepdims=True)),))

    def log_softmax(self, axis=-1):
        z = self.data - self.data.max(axis=axis, keepdims=True)
        lse = np.log(np.exp(z).sum(axis=axis, keepdims=True))
        out = z - lse
        s = np.exp(out)
        return Tensor(out, _parents=(self,),
                      _backward=lambda g: (g - s * g.sum(axis=axis, keepdims=True),))


def concat(tensors, axis=-1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def back(g):
        return tuple(np.split(g, splits, axis=axis))

    return Tensor(np.concatenate([t.data for t in tensors], axis=axis), _parents=tuple(tensors), _backward=back)


def parameter(data) -> Tensor:
    return Tensor(np.array(data, dtype=float), requires_grad=True)
