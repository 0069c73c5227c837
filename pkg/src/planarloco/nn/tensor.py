"""Minimal dense-tensor reverse-mode autodiff on numpy.

Supports exactly the ops the training stack needs: matmul (optionally
stacked over leading axes), elementwise arithmetic and activations,
reductions, softmax, layer-norm, reshape/transpose, concat and clip.
Gradients accumulate over fan-out. No general broadcasting beyond
bias-add and scalars.
"""
from __future__ import annotations

import numpy as np

_default_dtype = np.float64


def set_default_dtype(dtype) -> None:
    global _default_dtype
    dtype = np.dtype(dtype)
    if dtype not in (np.dtype(np.float32), np.dtype(np.float64)):
        raise ValueError(f"unsupported tensor dtype {dtype}")
    _default_dtype = dtype.type


def get_default_dtype():
    return _default_dtype


class ShapeError(ValueError):
    """Raised at graph build time when operand shapes do not line up."""


class Tensor:
    """A node in the op graph: values, optional grad, backward closure."""

    __slots__ = ("values", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, values, requires_grad=False, _parents=(), _backward=None):
        self.values = np.asarray(values, dtype=_default_dtype)
        self.grad = None
        self.requires_grad = bool(requires_grad) or any(p.requires_grad for p in _parents)
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self):
        return self.values.shape

    @property
    def ndim(self):
        return self.values.ndim

    def __repr__(self):
        return f"Tensor(shape={self.values.shape}, grad={'yes' if self.requires_grad else 'no'})"

    # -- graph mechanics ---------------------------------------------------

    def backward(self, grad=None):
        """Reverse-mode sweep from this node; accumulates into .grad."""
        if grad is None:
            if self.values.size != 1:
                raise ShapeError("backward() without grad requires a scalar output")
            grad = np.ones_like(self.values)
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if id(node) in seen:
                continue
            if expanded:
                seen.add(id(node))
                topo.append(node)
                continue
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen and p.requires_grad:
                    stack.append((p, False))
        self.grad = np.asarray(grad, dtype=self.values.dtype)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def zero_grad(self):
        self.grad = None

    def _accum(self, g):
        if self.grad is None:
            self.grad = np.array(g, dtype=self.values.dtype)
        else:
            self.grad += g

    # -- operators ---------------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, mul(other, -1.0))

    def __rsub__(self, other):
        return add(mul(self, -1.0), other)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            return mul(self, power(other, -1.0))
        return mul(self, 1.0 / float(other))

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return tmean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        return reshape(self, shape)

    def transpose(self, axes):
        return transpose(self, axes)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def constant(x) -> Tensor:
    return Tensor(np.asarray(x, dtype=_default_dtype))


def _unbroadcast_bias(grad, shape):
    # reduce grad of a bias that was broadcast over leading axes
    g = grad
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape and a.ndim != 0 and b.ndim != 0:
        # only bias-style broadcast: trailing axes must match
        if a.shape[-min(a.ndim, b.ndim):] != b.shape[-min(a.ndim, b.ndim):]:
            raise ShapeError(f"add shape mismatch {a.shape} vs {b.shape}")
    out = Tensor(a.values + b.values, _parents=(a, b))

    def _bw(g):
        if a.requires_grad:
            a._accum(_unbroadcast_bias(g, a.shape))
        if b.requires_grad:
            b._accum(_unbroadcast_bias(g, b.shape))

    out._backward = _bw
    return out


def mul(a, b) -> Tensor:
    if not isinstance(b, Tensor) and np.isscalar(b):
        a = as_tensor(a)
        s = float(b)
        out = Tensor(a.values * s, _parents=(a,))
        out._backward = lambda g: a._accum(g * s) if a.requires_grad else None
        return out
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape and a.ndim != 0 and b.ndim != 0:
        if a.shape[-min(a.ndim, b.ndim):] != b.shape[-min(a.ndim, b.ndim):]:
            raise ShapeError(f"mul shape mismatch {a.shape} vs {b.shape}")
    out = Tensor(a.values * b.values, _parents=(a, b))

    def _bw(g):
        if a.requires_grad:
            a._accum(_unbroadcast_bias(g * b.values, a.shape))
        if b.requires_grad:
            b._accum(_unbroadcast_bias(g * a.values, b.shape))

    out._backward = _bw
    return out


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape[-1] != b.shape[-2 if b.ndim > 1 else 0]:
        raise ShapeError(f"matmul shape mismatch {a.shape} @ {b.shape}")
    out = Tensor(np.matmul(a.values, b.values), _parents=(a, b))

    def _bw(g):
        if a.requires_grad:
            ga = np.matmul(g, np.swapaxes(b.values, -1, -2))
            while ga.ndim > a.ndim:
                ga = ga.sum(axis=0)
            a._accum(ga)
        if b.requires_grad:
            gb = np.matmul(np.swapaxes(a.values, -1, -2), g)
            while gb.ndim > b.ndim:
                gb = gb.sum(axis=0)
            b._accum(gb)

    out._backward = _bw
    return out


def power(a, p: float) -> Tensor:
    a = as_tensor(a)
    out = Tensor(a.values ** p, _parents=(a,))
    out._backward = lambda g: a._accum(g * p * a.values ** (p - 1.0)) if a.requires_grad else None
    return out


def square(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(a.values * a.values, _parents=(a,))
    out._backward = lambda g: a._accum(g * 2.0 * a.values) if a.requires_grad else None
    return out


def sqrt(a) -> Tensor:
    a = as_tensor(a)
    v = np.sqrt(a.values)
    out = Tensor(v, _parents=(a,))
    out._backward = lambda g: a._accum(g * 0.5 / v) if a.requires_grad else None
    return out


def exp(a) -> Tensor:
    a = as_tensor(a)
    v = np.exp(a.values)
    out = Tensor(v, _parents=(a,))
    out._backward = lambda g: a._accum(g * v) if a.requires_grad else None
    return out


def log(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(np.log(a.values), _parents=(a,))
    out._backward = lambda g: a._accum(g / a.values) if a.requires_grad else None
    return out


def tanh(a) -> Tensor:
    a = as_tensor(a)
    v = np.tanh(a.values)
    out = Tensor(v, _parents=(a,))
    out._backward = lambda g: a._accum(g * (1.0 - v * v)) if a.requires_grad else None
    return out


def relu(a) -> Tensor:
    a = as_tensor(a)
    mask = a.values > 0
    out = Tensor(np.where(mask, a.values, 0.0), _parents=(a,))
    out._backward = lambda g: a._accum(g * mask) if a.requires_grad else None
    return out


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    v = 1.0 / (1.0 + np.exp(-a.values))
    out = Tensor(v, _parents=(a,))
    out._backward = lambda g: a._accum(g * v * (1.0 - v)) if a.requires_grad else None
    return out


def clip(a, lo: float, hi: float) -> Tensor:
    a = as_tensor(a)
    mask = (a.values > lo) & (a.values < hi)
    out = Tensor(np.clip(a.values, lo, hi), _parents=(a,))
    out._backward = lambda g: a._accum(g * mask) if a.requires_grad else None
    return out


def minimum(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    take_a = a.values <= b.values
    out = Tensor(np.where(take_a, a.values, b.values), _parents=(a, b))

    def _bw(g):
        if a.requires_grad:
            a._accum(g * take_a)
        if b.requires_grad:
            b._accum(g * ~take_a)

    out._backward = _bw
    return out


def maximum(a, b) -> Tensor:
    return mul(minimum(mul(a, -1.0), mul(b, -1.0)), -1.0)


def tsum(a, axis=None, keepdims=False) -> Tensor:
    a = as_tensor(a)
    out = Tensor(a.values.sum(axis=axis, keepdims=keepdims), _parents=(a,))

    def _bw(g):
        if not a.requires_grad:
            return
        if axis is None:
            a._accum(np.broadcast_to(g, a.shape).copy())
            return
        if not keepdims:
            g = np.expand_dims(g, axis)
        a._accum(np.broadcast_to(g, a.shape).copy())

    out._backward = _bw
    return out


def tmean(a, axis=None, keepdims=False) -> Tensor:
    a = as_tensor(a)
    n = a.values.size if axis is None else a.shape[axis]
    return mul(tsum(a, axis=axis, keepdims=keepdims), 1.0 / float(n))


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    out = Tensor(a.values.reshape(shape), _parents=(a,))
    out._backward = lambda g: a._accum(g.reshape(a.shape)) if a.requires_grad else None
    return out


def transpose(a, axes) -> Tensor:
    a = as_tensor(a)
    inv = np.argsort(axes)
    out = Tensor(a.values.transpose(axes), _parents=(a,))
    out._backward = lambda g: a._accum(g.transpose(inv)) if a.requires_grad else None
    return out


def concat(tensors, axis=-1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    out = Tensor(np.concatenate([t.values for t in tensors], axis=axis), _parents=tuple(tensors))
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def _bw(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(lo, hi)
                t._accum(g[tuple(idx)])

    out._backward = _bw
    return out


def softmax(a, axis=-1) -> Tensor:
    a = as_tensor(a)
    shifted = a.values - a.values.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=axis, keepdims=True)
    out = Tensor(s, _parents=(a,))

    def _bw(g):
        if a.requires_grad:
            a._accum(s * (g - (g * s).sum(axis=axis, keepdims=True)))

    out._backward = _bw
    return out


def layer_norm(a, gamma, beta, eps: float = 1e-5) -> Tensor:
    """Normalize over the last axis, then scale and shift."""
    a, gamma, beta = as_tensor(a), as_tensor(gamma), as_tensor(beta)
    x = a.values
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    out = Tensor(xhat * gamma.values + beta.values, _parents=(a, gamma, beta))
    n = x.shape[-1]

    def _bw(g):
        if gamma.requires_grad:
            gamma._accum(_unbroadcast_bias(g * xhat, gamma.shape))
        if beta.requires_grad:
            beta._accum(_unbroadcast_bias(g, beta.shape))
        if a.requires_grad:
            gx = g * gamma.values
            a._accum(inv * (gx - gx.mean(axis=-1, keepdims=True)
                            - xhat * (gx * xhat).mean(axis=-1, keepdims=True)))

    out._backward = _bw
    return out


def attention(q, k, v) -> Tensor:
    """Scaled dot-product attention over (..., T, D) operands."""
    q, k, v = as_tensor(q), as_tensor(k), as_tensor(v)
    d = q.shape[-1]
    scores = mul(matmul(q, transpose(k, tuple(range(k.ndim - 2)) + (k.ndim - 1, k.ndim - 2))),
                 1.0 / np.sqrt(float(d)))
    return matmul(softmax(scores, axis=-1), v)
