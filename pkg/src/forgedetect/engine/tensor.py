"""Dense float64 tensors with reverse-mode automatic differentiation.

Small tape-based engine: every op records its parents and a backward
closure, ``backward(loss)`` runs a deterministic reverse topological sweep.
Gradients accumulate additively at fan-out.  All math is float64 so that
finite-difference gradient checks stay meaningful.
"""

import itertools

import numpy as np

from . import kernels


class ShapeError(ValueError):
    pass


class GraphError(RuntimeError):
    pass


_UID = itertools.count()


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_uid")

    def __init__(self, data, requires_grad=False):
        arr = np.asarray(data, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise ValueError("tensor values must be finite")
        self.data = arr
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = ()
        self._backward = None
        self._uid = next(_UID)

    @classmethod
    def _result(cls, data, parents, backward_fn):
        t = cls.__new__(cls)
        t.data = data
        t.grad = None
        t.requires_grad = any(p.requires_grad for p in parents)
        t._parents = tuple(parents) if t.requires_grad else ()
        t._backward = backward_fn if t.requires_grad else None
        t._uid = next(_UID)
        return t

    @property
    def shape(self):
        return self.data.shape

    def item(self):
        return float(self.data)

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


def _accumulate(t, g):
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def topo_order(out):
    """Deterministic topological order of the graph below ``out``."""
    order = []
    seen = set()
    stack = [(out, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if node._uid in seen:
            continue
        seen.add(node._uid)
        stack.append((node, True))
        for p in reversed(node._parents):
            if p._uid not in seen:
                stack.append((p, False))
    return order


def backward(out):
    """Reverse-mode sweep from a scalar output."""
    if out.data.shape != ():
        raise GraphError("backward requires a scalar output")
    order = topo_order(out)
    out.grad = np.ones(())
    for node in reversed(order):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)


def zero_grads(params):
    for p in params:
        p.zero_grad()


def _unbroadcast(g, shape):
    """Sum ``g`` down to ``shape`` (adjoint of numpy broadcasting)."""
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# elementwise / linear algebra primitives


def add(a, b):
    out_data = a.data + b.data

    def bwd(g):
        _accumulate(a, _unbroadcast(g, a.data.shape))
        _accumulate(b, _unbroadcast(g, b.data.shape))

    return Tensor._result(out_data, (a, b), bwd)


def sub(a, b):
    out_data = a.data - b.data

    def bwd(g):
        _accumulate(a, _unbroadcast(g, a.data.shape))
        _accumulate(b, -_unbroadcast(g, b.data.shape))

    return Tensor._result(out_data, (a, b), bwd)


def mul(a, b):
    out_data = a.data * b.data

    def bwd(g):
        _accumulate(a, _unbroadcast(g * b.data, a.data.shape))
        _accumulate(b, _unbroadcast(g * a.data, b.data.shape))

    return Tensor._result(out_data, (a, b), bwd)


def scale(x, s):
    s = float(s)

    def bwd(g):
        _accumulate(x, g * s)

    return Tensor._result(x.data * s, (x,), bwd)


def matmul(a, b):
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise ShapeError(f"matmul shapes {a.data.shape} x {b.data.shape}")
    out_data = a.data @ b.data

    def bwd(g):
        _accumulate(a, g @ b.data.T)
        _accumulate(b, a.data.T @ g)

    return Tensor._result(out_data, (a, b), bwd)


def relu(x):
    mask = x.data > 0.0
    out_data = np.where(mask, x.data, 0.0)

    def bwd(g):
        _accumulate(x, g * mask)

    return Tensor._result(out_data, (x,), bwd)


def sigmoid(x):
    out_data = np.empty_like(x.data)
    pos = x.data >= 0
    out_data[pos] = 1.0 / (1.0 + np.exp(-x.data[pos]))
    ex = np.exp(x.data[~pos])
    out_data[~pos] = ex / (1.0 + ex)

    def bwd(g):
        _accumulate(x, g * out_data * (1.0 - out_data))

    return Tensor._result(out_data, (x,), bwd)


def softmax(x):
    """Softmax over the last axis, max-shifted for stability."""
    z = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(z)
    out_data = e / e.sum(axis=-1, keepdims=True)

    def bwd(g):
        dot = (g * out_data).sum(axis=-1, keepdims=True)
        _accumulate(x, out_data * (g - dot))

    return Tensor._result(out_data, (x,), bwd)


def layer_norm(x, gain, bias, eps=1e-5):
    """Normalize the last axis to zero mean / unit population variance."""
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    out_data = gain.data * xhat + bias.data

    def bwd(g):
        n = x.data.shape[-1]
        gg = g * gain.data
        dx = inv * (
            gg
            - gg.mean(axis=-1, keepdims=True)
            - xhat * (gg * xhat).mean(axis=-1, keepdims=True)
        )
        _accumulate(x, dx)
        red = tuple(range(g.ndim - 1))
        _accumulate(gain, (g * xhat).sum(axis=red) if red else g * xhat)
        _accumulate(bias, g.sum(axis=red) if red else g)

    return Tensor._result(out_data, (x, gain, bias), bwd)


def reshape(x, shape):
    out_data = x.data.reshape(shape)

    def bwd(g):
        _accumulate(x, g.reshape(x.data.shape))

    return Tensor._result(out_data, (x,), bwd)


def transpose2d(x):
    if x.data.ndim != 2:
        raise ShapeError("transpose2d expects a matrix")
    out_data = np.ascontiguousarray(x.data.T)

    def bwd(g):
        _accumulate(x, g.T)

    return Tensor._result(out_data, (x,), bwd)


def narrow(x, axis, start, length):
    """Contiguous slice along one axis."""
    idx = [slice(None)] * x.data.ndim
    idx[axis] = slice(start, start + length)
    idx = tuple(idx)
    out_data = np.ascontiguousarray(x.data[idx])

    def bwd(g):
        full = np.zeros_like(x.data)
        full[idx] = g
        _accumulate(x, full)

    return Tensor._result(out_data, (x,), bwd)


def concat(tensors, axis=0):
    tensors = list(tensors)
    out_data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]

    def bwd(g):
        offset = 0
        for t, n in zip(tensors, sizes):
            idx = [slice(None)] * g.ndim
            idx[axis] = slice(offset, offset + n)
            _accumulate(t, g[tuple(idx)])
            offset += n

    return Tensor._result(out_data, tuple(tensors), bwd)


def sum_all(x):
    def bwd(g):
        _accumulate(x, np.full(x.data.shape, float(g)))

    return Tensor._result(np.asarray(x.data.sum()), (x,), bwd)


def mean_all(x):
    n = x.data.size

    def bwd(g):
        _accumulate(x, np.full(x.data.shape, float(g) / n))

    return Tensor._result(np.asarray(x.data.mean()), (x,), bwd)


# ---------------------------------------------------------------------------
# convolution / pooling


def conv2d(x, w, b=None, stride=1, pad=0):
    """Cross-correlation of (B,C,H,W) with kernels (F,C,k,k)."""
    if x.data.ndim != 4 or w.data.ndim != 4 or x.data.shape[1] != w.data.shape[1]:
        raise ShapeError(f"conv2d shapes {x.data.shape} x {w.data.shape}")
    bsz, c, h, wid = x.data.shape
    f, _, k, k2 = w.data.shape
    if k != k2:
        raise ShapeError("conv2d kernels must be square")
    if k > h + 2 * pad or k > wid + 2 * pad:
        raise ShapeError(f"kernel {k} larger than padded input {(h + 2 * pad, wid + 2 * pad)}")
    if stride < 1:
        raise ShapeError("stride must be >= 1")
    oh = kernels.conv_out_size(h, k, stride, pad)
    ow = kernels.conv_out_size(wid, k, stride, pad)
    cols = kernels.im2col(x.data, k, stride, pad)
    wmat = w.data.reshape(f, -1)
    out_mat = cols @ wmat.T
    if b is not None:
        out_mat = out_mat + b.data
    out_data = out_mat.reshape(bsz, oh, ow, f).transpose(0, 3, 1, 2)
    out_data = np.ascontiguousarray(out_data)
    parents = (x, w) if b is None else (x, w, b)

    def bwd(g):
        gmat = g.transpose(0, 2, 3, 1).reshape(-1, f)
        _accumulate(w, (gmat.T @ cols).reshape(w.data.shape))
        if b is not None:
            _accumulate(b, gmat.sum(axis=0))
        if x.requires_grad:
            dcols = gmat @ wmat
            _accumulate(x, kernels.col2im(dcols, x.data.shape, k, stride, pad))

    return Tensor._result(out_data, parents, bwd)


def avg_pool2d(x, k):
    """Non-overlapping k x k average pooling."""
    bsz, c, h, w = x.data.shape
    if h % k or w % k:
        raise ShapeError(f"avg_pool2d: {h}x{w} not divisible by {k}")
    oh, ow = h // k, w // k
    blocks = x.data.reshape(bsz, c, oh, k, ow, k)
    out_data = blocks.mean(axis=(3, 5))

    def bwd(g):
        gx = np.repeat(np.repeat(g, k, axis=2), k, axis=3) / (k * k)
        _accumulate(x, gx)

    return Tensor._result(out_data, (x,), bwd)


def global_avg_pool(x):
    """(B,C,H,W) -> (B,C) spatial mean."""
    bsz, c, h, w = x.data.shape
    out_data = x.data.mean(axis=(2, 3))

    def bwd(g):
        _accumulate(x, np.broadcast_to(g[:, :, None, None] / (h * w), x.data.shape).copy())

    return Tensor._result(out_data, (x,), bwd)


# ---------------------------------------------------------------------------
# losses (mean-reduced over all supplied entries)


def bce(p, y, clamp=1e-7):
    """Binary cross-entropy of probabilities ``p`` against 0/1 targets."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != p.data.shape:
        raise ShapeError(f"bce target shape {y.shape} != {p.data.shape}")
    pc = np.clip(p.data, clamp, 1.0 - clamp)
    n = max(pc.size, 1)
    loss = -(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc)).sum() / n
    inside = (p.data > clamp) & (p.data < 1.0 - clamp)

    def bwd(g):
        dp = float(g) * (pc - y) / (pc * (1.0 - pc)) / n
        _accumulate(p, np.where(inside, dp, 0.0))

    return Tensor._result(np.asarray(loss), (p,), bwd)


def cross_entropy(probs, labels, clamp=1e-7):
    """Multi-class cross-entropy of probability rows against class indices."""
    labels = np.asarray(labels, dtype=np.int64)
    if probs.data.ndim != 2 or labels.shape != (probs.data.shape[0],):
        raise ShapeError("cross_entropy expects (B,M) probs and (B,) labels")
    n = probs.data.shape[0]
    rows = np.arange(n)
    ptrue = probs.data[rows, labels]
    pc = np.clip(ptrue, clamp, 1.0)
    loss = -np.log(pc).sum() / n
    inside = ptrue > clamp

    def bwd(g):
        dp = np.zeros_like(probs.data)
        dp[rows, labels] = np.where(inside, -float(g) / (pc * n), 0.0)
        _accumulate(probs, dp)

    return Tensor._result(np.asarray(loss), (probs,), bwd)
