"""Reverse-mode autodiff over dense numpy arrays.

Define-by-run: every op returns a new Tensor holding a backward closure.
`Tensor.backward()` walks the graph in reverse topological order. All ops
support numpy broadcasting; gradients are summed back to the leaf shape.
Non-finite values raise immediately unless disabled via `no_nan_checks`.
"""

from __future__ import annotations

import contextlib
from typing import Callable, Optional

import numpy as np

from ..errors import NonFiniteValue, ShapeMismatch

_NAN_CHECKS = True


@contextlib.contextmanager
def no_nan_checks():
    """Temporarily skip finiteness checks (hot training loops)."""
    global _NAN_CHECKS
    prev = _NAN_CHECKS
    _NAN_CHECKS = False
    try:
        yield
    finally:
        _NAN_CHECKS = prev


def _check_finite(a: np.ndarray, what: str):
    if _NAN_CHECKS and not np.all(np.isfinite(a)):
        raise NonFiniteValue(f"non-finite values in {what}")


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum `grad` down to `shape` (reverses numpy broadcasting)."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, (g, s) in enumerate(zip(grad.shape, shape)) if s == 1 and g != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """A numpy array plus gradient bookkeeping."""

    __slots__ = ("data", "grad", "requires_grad", "_backward", "_parents")

    def __init__(self, data, requires_grad: bool = False,
                 _backward: Optional[Callable] = None, _parents: tuple = ()):
        self.data = np.asarray(data, dtype=np.float64 if not isinstance(data, np.ndarray) else data.dtype)
        if self.data.dtype not in (np.float32, np.float64):
            self.data = self.data.astype(np.float64)
        _check_finite(self.data, "tensor data")
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self._backward = _backward
        self._parents = _parents

    # -- graph plumbing -------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def zero_grad(self):
        self.grad = None

    def _accum(self, g: np.ndarray):
        # copy on first write: g may be shared with another parent's grad
        if self.grad is None:
            self.grad = np.array(g, dtype=self.data.dtype, copy=True)
        else:
            self.grad += g

    def backward(self, seed: Optional[np.ndarray] = None):
        """Reverse pass seeding with ones (sum-of-outputs scalar) by default."""
        topo, seen = [], set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                topo.append(node)
                continue
            if id(node) in seen or not node.requires_grad:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                stack.append((p, False))
        self._accum(np.ones_like(self.data) if seed is None else np.asarray(seed, dtype=self.data.dtype))
        for node in reversed(topo):
            if node._backward is not None:
                node._backward(node.grad)

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False)

    # -- elementwise arithmetic -----------------------------------------

    def __add__(self, other):
        other = _as_tensor(other, self.data.dtype)
        out = Tensor(self.data + other.data,
                     self.requires_grad or other.requires_grad)
        if out.requires_grad:
            def bwd(g):
                if self.requires_grad:
                    self._accum(_unbroadcast(g, self.shape))
                if other.requires_grad:
                    other._accum(_unbroadcast(g, other.shape))
            out._backward, out._parents = bwd, (self, other)
        return out

    __radd__ = __add__

    def __neg__(self):
        out = Tensor(-self.data, self.requires_grad)
        if out.requires_grad:
            out._backward = lambda g: self._accum(-g)
            out._parents = (self,)
        return out

    def __sub__(self, other):
        return self + (-_as_tensor(other, self.data.dtype))

    def __rsub__(self, other):
        return _as_tensor(other, self.data.dtype) + (-self)

    def __mul__(self, other):
        other = _as_tensor(other, self.data.dtype)
        out = Tensor(self.data * other.data,
                     self.requires_grad or other.requires_grad)
        if out.requires_grad:
            def bwd(g):
                if self.requires_grad:
                    self._accum(_unbroadcast(g * other.data, self.shape))
                if other.requires_grad:
                    other._accum(_unbroadcast(g * self.data, other.shape))
            out._backward, out._parents = bwd, (self, other)
        return out

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _as_tensor(other, self.data.dtype)
        return self * other.power(-1.0)

    def __rtruediv__(self, other):
        return _as_tensor(other, self.data.dtype) * self.power(-1.0)

    def power(self, p: float) -> "Tensor":
        out = Tensor(self.data ** p, self.requires_grad)
        if out.requires_grad:
            def bwd(g):
                self._accum(g * p * self.data ** (p - 1.0))
            out._backward, out._parents = bwd, (self,)
        return out

    # -- matmul / shape -------------------------------------------------

    def matmul(self, other: "Tensor") -> "Tensor":
        other = _as_tensor(other, self.data.dtype)
        if self.shape[-1] != other.shape[-2 if other.ndim > 1 else 0]:
            raise ShapeMismatch(f"matmul {self.shape} @ {other.shape}")
        out = Tensor(self.data @ other.data,
                     self.requires_grad or other.requires_grad)
        if out.requires_grad:
            def bwd(g):
                if self.requires_grad:
                    ga = g @ np.swapaxes(other.data, -1, -2)
                    self._accum(_unbroadcast(ga, self.shape))
                if other.requires_grad:
                    gb = np.swapaxes(self.data, -1, -2) @ g
                    other._accum(_unbroadcast(gb, other.shape))
            out._backward, out._parents = bwd, (self, other)
        return out

    __matmul__ = matmul

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        out = Tensor(self.data.reshape(shape), self.requires_grad)
        if out.requires_grad:
            out._backward = lambda g: self._accum(g.reshape(self.shape))
            out._parents = (self,)
        return out

    def swapaxes(self, a: int, b: int) -> "Tensor":
        out = Tensor(np.swapaxes(self.data, a, b), self.requires_grad)
        if out.requires_grad:
            out._backward = lambda g: self._accum(np.swapaxes(g, a, b))
            out._parents = (self,)
        return out

    def __getitem__(self, idx) -> "Tensor":
        out = Tensor(self.data[idx], self.requires_grad)
        if out.requires_grad:
            def bwd(g):
                full = np.zeros_like(self.data)
                np.add.at(full, idx, g)
                self._accum(full)
            out._backward, out._parents = bwd, (self,)
        return out

    # -- reductions ------------------------------------------------------

    def sum(self, axis=None, keepdims=False) -> "Tensor":
        out = Tensor(self.data.sum(axis=axis, keepdims=keepdims), self.requires_grad)
        if out.requires_grad:
            def bwd(g):
                if axis is None:
                    self._accum(np.broadcast_to(g, self.shape).copy())
                else:
                    gg = g if keepdims else np.expand_dims(g, axis)
                    self._accum(np.broadcast_to(gg, self.shape).copy())
            out._backward, out._parents = bwd, (self,)
        return out

    def mean(self, axis=None, keepdims=False) -> "Tensor":
        n = self.data.size if axis is None else np.prod(
            [self.shape[a] for a in (axis if isinstance(axis, tuple) else (axis,))])
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / float(n))

    # -- nonlinearities ---------------------------------------------------

    def exp(self) -> "Tensor":
        out = Tensor(np.exp(self.data), self.requires_grad)
        if out.requires_grad:
            out._backward = lambda g: self._accum(g * out.data)
            out._parents = (self,)
        return out

    def log(self) -> "Tensor":
        out = Tensor(np.log(self.data), self.requires_grad)
        if out.requires_grad:
            out._backward = lambda g: self._accum(g / self.data)
            out._parents = (self,)
        return out

    def tanh(self) -> "Tensor":
        out = Tensor(np.tanh(self.data), self.requires_grad)
        if out.requires_grad:
            out._backward = lambda g: self._accum(g * (1.0 - out.data ** 2))
            out._parents = (self,)
        return out

    def sigmoid(self) -> "Tensor":
        y = np.where(self.data >= 0, 1.0 / (1.0 + np.exp(-np.abs(self.data))),
                     np.exp(-np.abs(self.data)) / (1.0 + np.exp(-np.abs(self.data))))
        out = Tensor(y, self.requires_grad)
        if out.requires_grad:
            out._backward = lambda g: self._accum(g * out.data * (1.0 - out.data))
            out._parents = (self,)
        return out

    def softplus(self) -> "Tensor":
        """log(1 + exp(x)), overflow-safe."""
        y = np.maximum(self.data, 0.0) + np.log1p(np.exp(-np.abs(self.data)))
        out = Tensor(y, self.requires_grad)
        if out.requires_grad:
            sig = 1.0 / (1.0 + np.exp(-np.clip(self.data, -500, 500)))
            out._backward = lambda g: self._accum(g * sig)
            out._parents = (self,)
        return out

    def abs(self) -> "Tensor":
        out = Tensor(np.abs(self.data), self.requires_grad)
        if out.requires_grad:
            out._backward = lambda g: self._accum(g * np.sign(self.data))
            out._parents = (self,)
        return out

    # -- composites --------------------------------------------------------

    def softmax(self, axis: int = -1) -> "Tensor":
        shifted = self - Tensor(self.data.max(axis=axis, keepdims=True))
        e = shifted.exp()
        return e / e.sum(axis=axis, keepdims=True)

    def log_softmax(self, axis: int = -1) -> "Tensor":
        shifted = self - Tensor(self.data.max(axis=axis, keepdims=True))
        return shifted - shifted.exp().sum(axis=axis, keepdims=True).log()

    def item(self) -> float:
        return float(self.data)


def _as_tensor(x, dtype) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=dtype))


def concat(tensors, axis: int = 0) -> Tensor:
    """Concatenate along `axis`, splitting gradients back."""
    datas = [t.data for t in tensors]
    out = Tensor(np.concatenate(datas, axis=axis),
                 any(t.requires_grad for t in tensors))
    if out.requires_grad:
        sizes = [d.shape[axis] for d in datas]
        offs = np.cumsum([0] + sizes)

        def bwd(g):
            for t, a, b in zip(tensors, offs[:-1], offs[1:]):
                if t.requires_grad:
                    sl = [slice(None)] * g.ndim
                    sl[axis] = slice(a, b)
                    t._accum(g[tuple(sl)])
        out._backward, out._parents = bwd, tuple(tensors)
    return out


def gather_rows(t: Tensor, indices) -> Tensor:
    """Select rows along axis 0 (embedding lookup); duplicates accumulate."""
    idx = np.asarray(indices, dtype=np.intp)
    out = Tensor(t.data[idx], t.requires_grad)
    if out.requires_grad:
        def bwd(g):
            full = np.zeros_like(t.data)
            np.add.at(full, idx, g)
            t._accum(full)
        out._backward, out._parents = bwd, (t,)
    return out
