"""Dense N-D tensors with reverse-mode automatic differentiation.

A :class:`Tensor` wraps a contiguous numpy float array and records the
operations applied to it. Calling :meth:`Tensor.backward` on a scalar
result replays the recorded graph in reverse topological order and
accumulates gradients into every leaf that has ``requires_grad`` set.

The engine is deliberately small: it supports exactly the operations the
scene network needs (dense affine maps, stride-2 convolutions, softmax
attention, outer products, reductions and the usual elementwise
functions), all on CPU via numpy. Graphs are per-forward-pass and are
released once the output tensors go out of scope.
"""

from __future__ import annotations

import numpy as np

DEFAULT_DTYPE = np.float32

_grad_enabled = True


class no_grad:
    """Context manager that disables graph recording inside its block."""

    def __enter__(self):
        global _grad_enabled
        self._prev = _grad_enabled
        _grad_enabled = False
        return self

    def __exit__(self, *exc):
        global _grad_enabled
        _grad_enabled = self._prev
        return False


def grad_enabled() -> bool:
    return _grad_enabled


class Tensor:
    """A dense float array that participates in the autodiff tape.

    Attributes:
        data: numpy array holding the values (float32 or float64).
        grad: numpy array of the same shape, populated for leaves by
            ``backward``; ``None`` until a gradient has been accumulated.
        requires_grad: True if the tensor is a trainable leaf or sits on
            a differentiable path to one.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data)
        if dtype is not None:
            arr = arr.astype(dtype, copy=False)
        elif arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(DEFAULT_DTYPE)
        self.data = arr
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple = ()
        self._backward = None

    # ------------------------------------------------------------------
    # basic introspection

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def numpy(self) -> np.ndarray:
        """The raw value array (shared, do not mutate)."""
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, requires_grad={self.requires_grad})"

    def zero_grad(self):
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False)

    # ------------------------------------------------------------------
    # backward

    def backward(self):
        """Accumulate d(self)/d(leaf) into every reachable leaf's grad.

        self must be a scalar (one element). Repeated calls without
        clearing leaf grads accumulate, matching the usual autograd
        contract for gradient accumulation across micro-batches.
        """
        if self.data.size != 1:
            raise ValueError(f"backward() requires a scalar loss, got shape {self.data.shape}")
        tape = Tape(self)
        grads: dict[int, np.ndarray] = {id(self): np.ones_like(self.data)}
        for node in reversed(tape.nodes):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                if node.requires_grad:
                    node.grad = g if node.grad is None else node.grad + g
                continue
            for parent, pg in node._backward(g):
                if not parent.requires_grad:
                    continue
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + pg
                else:
                    grads[key] = pg


class Tape:
    """Topologically ordered record of the graph reaching one output.

    ``nodes`` lists every tensor on the path, parents strictly before
    children, so a single reverse sweep visits each node exactly once.
    """

    def __init__(self, root: Tensor):
        nodes: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                nodes.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in visited:
                    stack.append((p, False))
        self.nodes = nodes

    def __len__(self):
        return len(self.nodes)


# ----------------------------------------------------------------------
# construction helpers

def as_tensor(x, dtype=None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(x, dtype=dtype)


def zeros(shape, dtype=DEFAULT_DTYPE, requires_grad=False) -> Tensor:
    return Tensor(np.zeros(shape, dtype=dtype), requires_grad=requires_grad)


def ones(shape, dtype=DEFAULT_DTYPE, requires_grad=False) -> Tensor:
    return Tensor(np.ones(shape, dtype=dtype), requires_grad=requires_grad)


def _result(data, parents, backward_fn) -> Tensor:
    """Wrap an op result, recording the edge only when grads are live."""
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward_fn
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


# ----------------------------------------------------------------------
# elementwise arithmetic

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = a.data + b.data

    def backward(g):
        return ((a, _unbroadcast(g, a.shape)), (b, _unbroadcast(g, b.shape)))

    return _result(data, (a, b), backward)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = a.data - b.data

    def backward(g):
        return ((a, _unbroadcast(g, a.shape)), (b, _unbroadcast(-g, b.shape)))

    return _result(data, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = a.data * b.data

    def backward(g):
        return (
            (a, _unbroadcast(g * b.data, a.shape)),
            (b, _unbroadcast(g * a.data, b.shape)),
        )

    return _result(data, (a, b), backward)


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = a.data / b.data

    def backward(g):
        return (
            (a, _unbroadcast(g / b.data, a.shape)),
            (b, _unbroadcast(-g * a.data / (b.data * b.data), b.shape)),
        )

    return _result(data, (a, b), backward)


def neg(a) -> Tensor:
    a = as_tensor(a)

    def backward(g):
        return ((a, -g),)

    return _result(-a.data, (a,), backward)


def power(a, p: float) -> Tensor:
    a = as_tensor(a)
    data = a.data ** p

    def backward(g):
        return ((a, g * p * a.data ** (p - 1)),)

    return _result(data, (a,), backward)


# ----------------------------------------------------------------------
# elementwise functions

def relu(a) -> Tensor:
    a = as_tensor(a)
    data = np.maximum(a.data, 0)

    def backward(g):
        return ((a, g * (a.data > 0)),)

    return _result(data, (a,), backward)


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    s = 1.0 / (1.0 + np.exp(-a.data))

    def backward(g):
        return ((a, g * s * (1.0 - s)),)

    return _result(s, (a,), backward)


def exp(a) -> Tensor:
    a = as_tensor(a)
    e = np.exp(a.data)

    def backward(g):
        return ((a, g * e),)

    return _result(e, (a,), backward)


def log(a) -> Tensor:
    a = as_tensor(a)

    def backward(g):
        return ((a, g / a.data),)

    return _result(np.log(a.data), (a,), backward)


def sqrt(a) -> Tensor:
    a = as_tensor(a)
    r = np.sqrt(a.data)

    def backward(g):
        return ((a, g / (2.0 * r)),)

    return _result(r, (a,), backward)


def absolute(a) -> Tensor:
    """|x| with subgradient sign(x) (0 at the kink)."""
    a = as_tensor(a)

    def backward(g):
        return ((a, g * np.sign(a.data)),)

    return _result(np.abs(a.data), (a,), backward)


# ----------------------------------------------------------------------
# reductions

def sum_(a, axis=None, keepdims=False) -> Tensor:
    a = as_tensor(a)
    data = a.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is None:
            return ((a, np.broadcast_to(g, a.shape).copy()),)
        gg = g if keepdims else np.expand_dims(g, axis)
        return ((a, np.broadcast_to(gg, a.shape).copy()),)

    return _result(data, (a,), backward)


def mean(a, axis=None, keepdims=False) -> Tensor:
    a = as_tensor(a)
    if axis is not None and not -a.ndim <= axis < a.ndim:
        raise ValueError(f"mean axis {axis} out of range for rank {a.ndim}")
    data = a.data.mean(axis=axis, keepdims=keepdims)
    count = a.data.size if axis is None else a.shape[axis]

    def backward(g):
        if axis is None:
            return ((a, np.broadcast_to(g / count, a.shape).copy()),)
        gg = g if keepdims else np.expand_dims(g, axis)
        return ((a, np.broadcast_to(gg / count, a.shape).copy()),)

    return _result(data, (a,), backward)


def reduce_mean(a, axis: int) -> Tensor:
    """Arithmetic mean along one axis; output rank drops by one."""
    return mean(a, axis=axis, keepdims=False)


# ----------------------------------------------------------------------
# softmax

def softmax(a, axis: int = -1) -> Tensor:
    """Numerically stable softmax along ``axis``.

    Raises FloatingPointError on non-finite input, since a silent NaN
    here poisons every attention weight downstream.
    """
    a = as_tensor(a)
    if not np.isfinite(a.data).all():
        raise FloatingPointError("softmax input contains NaN or Inf")
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        dot = (g * s).sum(axis=axis, keepdims=True)
        return ((a, s * (g - dot)),)

    return _result(s, (a,), backward)


# ----------------------------------------------------------------------
# shape manipulation

def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    orig = a.shape

    def backward(g):
        return ((a, g.reshape(orig)),)

    return _result(a.data.reshape(shape), (a,), backward)


def transpose(a, axes=None) -> Tensor:
    a = as_tensor(a)
    if axes is None:
        axes = tuple(reversed(range(a.ndim)))
    inverse = np.argsort(axes)

    def backward(g):
        return ((a, g.transpose(inverse)),)

    return _result(a.data.transpose(axes), (a,), backward)


def concat(tensors, axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        out = []
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            idx = [slice(None)] * g.ndim
            idx[axis] = slice(lo, hi)
            out.append((t, g[tuple(idx)]))
        return tuple(out)

    return _result(data, tensors, backward)


def stack(tensors, axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    data = np.stack([t.data for t in tensors], axis=axis)

    def backward(g):
        parts = np.moveaxis(g, axis, 0)
        return tuple((t, parts[i]) for i, t in enumerate(tensors))

    return _result(data, tensors, backward)


def take(a, indices, axis: int = 0) -> Tensor:
    """Gather rows along ``axis`` (integer-array indexing)."""
    a = as_tensor(a)
    indices = np.asarray(indices)
    data = np.take(a.data, indices, axis=axis)

    def backward(g):
        acc = np.zeros_like(a.data)
        np.add.at(np.moveaxis(acc, axis, 0), indices, np.moveaxis(g, axis, 0))
        return ((a, acc),)

    return _result(data, (a,), backward)


def slice_(a, key) -> Tensor:
    """Basic slicing; gradients scatter back into the sliced region."""
    a = as_tensor(a)
    data = a.data[key]

    def backward(g):
        acc = np.zeros_like(a.data)
        acc[key] = g
        return ((a, acc),)

    return _result(data, (a,), backward)


# ----------------------------------------------------------------------
# linear algebra

def matmul(a, b) -> Tensor:
    """Matrix product, batched over leading axes like ``np.matmul``."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ValueError(f"matmul needs rank >= 2 operands, got {a.shape} x {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ValueError(f"matmul inner dimensions differ: {a.shape} x {b.shape}")
    data = a.data @ b.data

    def backward(g):
        ga = g @ b.data.swapaxes(-1, -2)
        gb = a.data.swapaxes(-1, -2) @ g
        return ((a, _unbroadcast(ga, a.shape)), (b, _unbroadcast(gb, b.shape)))

    return _result(data, (a, b), backward)


def outer(u, v) -> Tensor:
    """out[..., i, j] = u[..., i] * v[..., j].

    Rank-1 inputs give the classic outer product; higher ranks map over
    matching leading axes.
    """
    u, v = as_tensor(u), as_tensor(v)
    if u.ndim == 0 or v.ndim == 0:
        raise ValueError("outer requires rank >= 1 inputs")
    if u.shape[:-1] != v.shape[:-1]:
        raise ValueError(f"outer leading axes differ: {u.shape} vs {v.shape}")
    uu = reshape(u, u.shape + (1,))
    vv = reshape(v, v.shape[:-1] + (1, v.shape[-1]))
    return mul(uu, vv)


# ----------------------------------------------------------------------
# convolution

def conv2d(x, w, b=None, stride: int = 1, pad: int = 0) -> Tensor:
    """2-D convolution over channels-last images.

    Args:
        x: input of shape [N, H, W, Cin].
        w: filters of shape [kh, kw, Cin, Cout].
        b: optional bias of shape [Cout].
        stride: step between filter applications.
        pad: symmetric zero padding applied to H and W.
    """
    x, w = as_tensor(x), as_tensor(w)
    if x.ndim != 4 or w.ndim != 4:
        raise ValueError(f"conv2d expects x[N,H,W,C] and w[kh,kw,Cin,Cout], got {x.shape}, {w.shape}")
    n, h, ww_in, cin = x.shape
    kh, kw, wcin, cout = w.shape
    if cin != wcin:
        raise ValueError(f"conv2d channel mismatch: input {cin} vs filter {wcin}")
    ho = (h + 2 * pad - kh) // stride + 1
    wo = (ww_in + 2 * pad - kw) // stride + 1
    if ho <= 0 or wo <= 0:
        raise ValueError(f"conv2d output would be empty for input {x.shape} with kernel {kh} stride {stride} pad {pad}")

    xp = np.pad(x.data, ((0, 0), (pad, pad), (pad, pad), (0, 0))) if pad else x.data
    cols = np.empty((n, ho, wo, kh, kw, cin), dtype=x.dtype)
    for i in range(kh):
        for j in range(kw):
            cols[:, :, :, i, j, :] = xp[:, i:i + ho * stride:stride, j:j + wo * stride:stride, :]
    cols_flat = cols.reshape(n * ho * wo, kh * kw * cin)
    w_flat = w.data.reshape(kh * kw * cin, cout)
    out = (cols_flat @ w_flat).reshape(n, ho, wo, cout)
    if b is not None:
        b = as_tensor(b)
        out = out + b.data

    def backward(g):
        g_flat = g.reshape(n * ho * wo, cout)
        grad_w = (cols_flat.T @ g_flat).reshape(w.shape)
        g_cols = (g_flat @ w_flat.T).reshape(n, ho, wo, kh, kw, cin)
        gxp = np.zeros_like(xp)
        for i in range(kh):
            for j in range(kw):
                gxp[:, i:i + ho * stride:stride, j:j + wo * stride:stride, :] += g_cols[:, :, :, i, j, :]
        gx = gxp[:, pad:pad + h, pad:pad + ww_in, :] if pad else gxp
        grads = [(x, gx), (w, grad_w)]
        if b is not None:
            grads.append((b, g.sum(axis=(0, 1, 2))))
        return tuple(grads)

    parents = (x, w) if b is None else (x, w, b)
    return _result(out, parents, backward)


# ----------------------------------------------------------------------
# operator sugar on Tensor

Tensor.__add__ = lambda self, other: add(self, other)
Tensor.__radd__ = lambda self, other: add(other, self)
Tensor.__sub__ = lambda self, other: sub(self, other)
Tensor.__rsub__ = lambda self, other: sub(other, self)
Tensor.__mul__ = lambda self, other: mul(self, other)
Tensor.__rmul__ = lambda self, other: mul(other, self)
Tensor.__truediv__ = lambda self, other: div(self, other)
Tensor.__rtruediv__ = lambda self, other: div(other, self)
Tensor.__neg__ = lambda self: neg(self)
Tensor.__pow__ = lambda self, p: power(self, p)
Tensor.__matmul__ = lambda self, other: matmul(self, other)
Tensor.__getitem__ = lambda self, key: slice_(self, key)
Tensor.sum = lambda self, axis=None, keepdims=False: sum_(self, axis, keepdims)
Tensor.mean = lambda self, axis=None, keepdims=False: mean(self, axis, keepdims)
Tensor.reshape = lambda self, *shape: reshape(self, shape[0] if len(shape) == 1 and isinstance(shape[0], (tuple, list)) else shape)
Tensor.transpose = lambda self, *axes: transpose(self, axes if axes else None)
Tensor.flatten = lambda self: reshape(self, (self.size,))
