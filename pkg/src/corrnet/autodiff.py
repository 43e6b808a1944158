"""Minimal reverse-mode automatic differentiation on dense numpy arrays.

A ``Tensor`` wraps a float64 ndarray together with the closures needed to
push gradients back to its parents.  Calling :func:`backward` on a scalar
root walks the graph in reverse topological order and accumulates ``.grad``
on every reachable tensor that requires gradients.

Everything here is single-threaded and deterministic: identical inputs
produce bit-identical gradients.
"""

from __future__ import annotations

import numpy as np

_EPS_LOG = 1e-300


class Tensor:
    """Node in the computation graph: a value plus local-gradient closures."""

    __slots__ = ("data", "grad", "requires_grad", "parents", "name", "_backward_done")

    def __init__(self, data, requires_grad=False, parents=(), name=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        # parents: tuple of (Tensor, grad_fn) where grad_fn maps the incoming
        # gradient to this parent's gradient contribution.
        self.parents = tuple(parents)
        self.name = name
        self._backward_done = False

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def zero_grad(self):
        self.grad = None
        self._backward_done = False

    def detach(self):
        return Tensor(self.data, requires_grad=False)

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad}{tag})"

    # -- operator sugar --------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return getitem(self, key)

    # -- method sugar -----------------------------------------------------
    def reshape(self, *shape):
        return reshape(self, shape if len(shape) > 1 or isinstance(shape[0], int) else shape[0])

    def transpose(self, axes):
        return transpose(self, axes)

    def swapaxes(self, a, b):
        axes = list(range(self.ndim))
        axes[a], axes[b] = axes[b], axes[a]
        return transpose(self, tuple(axes))

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return tmean(self, axis=axis, keepdims=keepdims)


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def constant(x):
    """Tensor that never receives gradients."""
    return Tensor(x, requires_grad=False)


def _needs_grad(*tensors):
    return any(t.requires_grad for t in tensors)


def _unbroadcast(grad, shape):
    """Sum `grad` down to `shape`, undoing numpy broadcasting."""
    g = grad
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


# ---------------------------------------------------------------------------
# primitives
# ---------------------------------------------------------------------------

def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data + b.data, _needs_grad(a, b),
                 parents=((a, lambda g: _unbroadcast(g, a.shape)),
                          (b, lambda g: _unbroadcast(g, b.shape))))
    return out


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return Tensor(a.data - b.data, _needs_grad(a, b),
                  parents=((a, lambda g: _unbroadcast(g, a.shape)),
                           (b, lambda g: _unbroadcast(-g, b.shape))))


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return Tensor(a.data * b.data, _needs_grad(a, b),
                  parents=((a, lambda g: _unbroadcast(g * b.data, a.shape)),
                           (b, lambda g: _unbroadcast(g * a.data, b.shape))))


def div(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return Tensor(a.data / b.data, _needs_grad(a, b),
                  parents=((a, lambda g: _unbroadcast(g / b.data, a.shape)),
                           (b, lambda g: _unbroadcast(-g * a.data / (b.data ** 2), b.shape))))


def neg(a):
    a = as_tensor(a)
    return Tensor(-a.data, a.requires_grad, parents=((a, lambda g: -g),))


def pow_const(a, p):
    a = as_tensor(a)
    return Tensor(a.data ** p, a.requires_grad,
                  parents=((a, lambda g: g * p * a.data ** (p - 1)),))


def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out_data = np.matmul(a.data, b.data)

    def ga(g):
        return _unbroadcast(np.matmul(g, np.swapaxes(b.data, -1, -2)), a.shape)

    def gb(g):
        return _unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), g), b.shape)

    return Tensor(out_data, _needs_grad(a, b), parents=((a, ga), (b, gb)))


def transpose(a, axes):
    a = as_tensor(a)
    inv = np.argsort(axes)
    return Tensor(np.transpose(a.data, axes), a.requires_grad,
                  parents=((a, lambda g: np.transpose(g, inv)),))


def reshape(a, shape):
    a = as_tensor(a)
    orig = a.shape
    return Tensor(a.data.reshape(shape), a.requires_grad,
                  parents=((a, lambda g: g.reshape(orig)),))


def getitem(a, key):
    a = as_tensor(a)

    def ga(g):
        full = np.zeros(a.shape, dtype=np.float64)
        np.add.at(full, key, g)
        return full

    return Tensor(a.data[key], a.requires_grad, parents=((a, ga),))


def concat(parts, axis=0):
    parts = [as_tensor(p) for p in parts]
    sizes = [p.shape[axis] for p in parts]
    offsets = np.cumsum([0] + sizes)
    out_data = np.concatenate([p.data for p in parts], axis=axis)

    def make_grad(i):
        sl = [slice(None)] * out_data.ndim
        sl[axis] = slice(offsets[i], offsets[i + 1])
        sl = tuple(sl)
        return lambda g: g[sl]

    parents = tuple((p, make_grad(i)) for i, p in enumerate(parts))
    return Tensor(out_data, _needs_grad(*parts), parents=parents)


def tsum(a, axis=None, keepdims=False):
    a = as_tensor(a)

    def ga(g):
        if axis is None:
            return np.broadcast_to(g, a.shape).copy()
        g2 = g if keepdims else np.expand_dims(g, axis)
        return np.broadcast_to(g2, a.shape).copy()

    return Tensor(a.data.sum(axis=axis, keepdims=keepdims), a.requires_grad,
                  parents=((a, ga),))


def tmean(a, axis=None, keepdims=False):
    a = as_tensor(a)
    if axis is None:
        n = a.size
    else:
        n = np.prod([a.shape[i] for i in np.atleast_1d(axis)])

    def ga(g):
        if axis is None:
            return np.broadcast_to(g / n, a.shape).copy()
        g2 = g if keepdims else np.expand_dims(g, axis)
        return np.broadcast_to(g2 / n, a.shape).copy()

    return Tensor(a.data.mean(axis=axis, keepdims=keepdims), a.requires_grad,
                  parents=((a, ga),))


def exp(a):
    a = as_tensor(a)
    out_data = np.exp(a.data)
    return Tensor(out_data, a.requires_grad, parents=((a, lambda g: g * out_data),))


def log(a):
    a = as_tensor(a)
    return Tensor(np.log(a.data), a.requires_grad,
                  parents=((a, lambda g: g / np.maximum(a.data, _EPS_LOG)),))


def sqrt(a):
    a = as_tensor(a)
    out_data = np.sqrt(a.data)
    return Tensor(out_data, a.requires_grad,
                  parents=((a, lambda g: g * 0.5 / out_data),))


def tanh(a):
    a = as_tensor(a)
    out_data = np.tanh(a.data)
    return Tensor(out_data, a.requires_grad,
                  parents=((a, lambda g: g * (1.0 - out_data ** 2)),))


def tabs(a):
    a = as_tensor(a)
    return Tensor(np.abs(a.data), a.requires_grad,
                  parents=((a, lambda g: g * np.sign(a.data)),))


def leaky_relu(a, slope=0.2):
    a = as_tensor(a)
    factor = np.where(a.data > 0, 1.0, slope)
    return Tensor(a.data * factor, a.requires_grad,
                  parents=((a, lambda g: g * factor),))


def where(mask, a, b):
    """Select elementwise by a constant boolean mask (not differentiated)."""
    a, b = as_tensor(a), as_tensor(b)
    mask = np.asarray(mask, dtype=bool)
    return Tensor(np.where(mask, a.data, b.data), _needs_grad(a, b),
                  parents=((a, lambda g: _unbroadcast(np.where(mask, g, 0.0), a.shape)),
                           (b, lambda g: _unbroadcast(np.where(mask, 0.0, g), b.shape))))


def softmax(a, axis=-1):
    a = as_tensor(a)
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out_data = e / e.sum(axis=axis, keepdims=True)

    def ga(g):
        dot = (g * out_data).sum(axis=axis, keepdims=True)
        return out_data * (g - dot)

    return Tensor(out_data, a.requires_grad, parents=((a, ga),))


def gather(a, idx):
    """Select rows along axis 0; backward scatters with accumulation."""
    a = as_tensor(a)
    idx = np.asarray(idx, dtype=np.intp)

    def ga(g):
        full = np.zeros(a.shape, dtype=np.float64)
        np.add.at(full, idx, g)
        return full

    return Tensor(a.data[idx], a.requires_grad, parents=((a, ga),))


def segment_sum(a, seg_ids, num_segments):
    """Sum rows of `a` into `num_segments` buckets given by `seg_ids`."""
    a = as_tensor(a)
    seg_ids = np.asarray(seg_ids, dtype=np.intp)
    out_shape = (num_segments,) + a.shape[1:]
    out_data = np.zeros(out_shape, dtype=np.float64)
    np.add.at(out_data, seg_ids, a.data)
    return Tensor(out_data, a.requires_grad, parents=((a, lambda g: g[seg_ids]),))


def segment_softmax(scores, seg_ids, num_segments):
    """Softmax of `scores` within each segment (e.g. a node's in-neighborhood).

    The per-segment max shift is treated as a constant, which leaves the
    softmax value and its gradient unchanged.
    """
    scores = as_tensor(scores)
    seg_ids = np.asarray(seg_ids, dtype=np.intp)
    seg_max = np.full((num_segments,) + scores.shape[1:], -np.inf)
    np.maximum.at(seg_max, seg_ids, scores.data)
    seg_max = np.where(np.isfinite(seg_max), seg_max, 0.0)
    shifted = sub(scores, constant(seg_max[seg_ids]))
    e = exp(shifted)
    denom = segment_sum(e, seg_ids, num_segments)
    return div(e, gather(denom, seg_ids))


def dropout(a, rate, rng, training):
    """Inverted dropout; identity when not training or rate == 0."""
    if not training or rate <= 0.0:
        return as_tensor(a)
    a = as_tensor(a)
    keep = (rng.random(a.shape) >= rate) / (1.0 - rate)
    return mul(a, constant(keep))


# ---------------------------------------------------------------------------
# backward pass
# ---------------------------------------------------------------------------

def _toposort(root):
    order, visited = [], set()
    stack = [(root, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent, _ in node.parents:
            if id(parent) not in visited:
                stack.append((parent, False))
    return order


def backward(root):
    """Accumulate gradients of the scalar `root` into every reachable tensor.

    Raises if `root` is not scalar or if backward already ran on this root.
    """
    if root.data.size != 1:
        raise ValueError(f"backward requires a scalar root, got shape {root.shape}")
    if root._backward_done:
        raise RuntimeError("backward already called on this root; rebuild the graph or zero_grad first")
    root._backward_done = True

    grads = {id(root): np.ones_like(root.data)}
    for node in reversed(_toposort(root)):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.requires_grad:
            node.grad = g if node.grad is None else node.grad + g
        for parent, grad_fn in node.parents:
            if not parent.requires_grad and not parent.parents:
                continue
            contrib = grad_fn(g)
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + contrib
            else:
                grads[key] = contrib


def grad_of(t):
    """Gradient array of `t`, zeros if it never received one (disconnected)."""
    return np.zeros_like(t.data) if t.grad is None else t.grad
