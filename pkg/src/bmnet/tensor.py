"""Dense float64 arrays with a dynamically recorded reverse-mode tape.

Every operation returns a :class:`GradNode` whose ``backward_rule`` maps the
gradient of the output to one gradient per parent. :func:`backward` walks the
recorded graph once in reverse topological order and accumulates into
``grad``. Values are plain ``numpy.ndarray`` objects in row-major order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigError, ContractError, DegenerateBatchError, ShapeError

DTYPE = np.float64

BackwardRule = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


def rng_from_seed(seed: int) -> np.random.Generator:
    """Return a PCG64 generator; identical seeds give identical streams everywhere."""
    if seed < 0:
        raise ConfigError(f"seed must be non-negative, got {seed}")
    return np.random.Generator(np.random.PCG64(int(seed)))


class GradNode:
    """A value in the computation graph together with its accumulated gradient."""

    __slots__ = ("value", "grad", "parents", "backward_rule", "requires_grad", "name")

    def __init__(
        self,
        value,
        parents: Sequence["GradNode"] = (),
        backward_rule: Optional[BackwardRule] = None,
        requires_grad: bool = True,
        name: Optional[str] = None,
    ):
        self.value = np.array(value, dtype=DTYPE)
        self.grad = np.zeros_like(self.value)
        self.parents = tuple(parents)
        self.backward_rule = backward_rule
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self) -> tuple:
        return self.value.shape

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.value)

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"GradNode{label}(shape={self.shape})"

    def __add__(self, other):
        return add(self, _as_node(other))

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, _as_node(other))

    def __rsub__(self, other):
        return sub(_as_node(other), self)

    def __mul__(self, other):
        if np.isscalar(other):
            return scalar_mul(self, float(other))
        return mul(self, _as_node(other))

    __rmul__ = __mul__

    def __neg__(self):
        return scalar_mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


def constant(value, name: Optional[str] = None) -> GradNode:
    """Leaf that never receives a gradient (inputs, targets)."""
    return GradNode(value, requires_grad=False, name=name)


def _as_node(x) -> GradNode:
    return x if isinstance(x, GradNode) else constant(x)


def _make(value, parents, rule) -> GradNode:
    needs = any(p.requires_grad for p in parents)
    return GradNode(value, parents, rule if needs else None, requires_grad=needs)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(a: GradNode, b: GradNode, op: str) -> tuple:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: cannot broadcast shapes {a.shape} and {b.shape}") from None


# ---------------------------------------------------------------------------
# elementwise and reductions


def add(a: GradNode, b: GradNode) -> GradNode:
    _broadcast_shape(a, b, "add")
    sa, sb = a.shape, b.shape
    return _make(a.value + b.value, (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def sub(a: GradNode, b: GradNode) -> GradNode:
    _broadcast_shape(a, b, "sub")
    sa, sb = a.shape, b.shape
    return _make(a.value - b.value, (a, b), lambda g: (_unbroadcast(g, sa), -_unbroadcast(g, sb)))


def mul(a: GradNode, b: GradNode) -> GradNode:
    """Elementwise (Hadamard) product with numpy broadcasting."""
    _broadcast_shape(a, b, "mul")
    av, bv = a.value, b.value
    return _make(
        av * bv,
        (a, b),
        lambda g: (_unbroadcast(g * bv, av.shape), _unbroadcast(g * av, bv.shape)),
    )


mul_elementwise = mul


def scalar_mul(a: GradNode, c: float) -> GradNode:
    c = float(c)
    return _make(a.value * c, (a,), lambda g: (g * c,))


def relu(a: GradNode) -> GradNode:
    mask = a.value > 0
    return _make(np.where(mask, a.value, 0.0), (a,), lambda g: (g * mask,))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def sigmoid(a: GradNode) -> GradNode:
    s = _sigmoid(a.value)
    return _make(s, (a,), lambda g: (g * s * (1.0 - s),))


def softplus(a: GradNode) -> GradNode:
    """log(1 + exp(a)), overflow-free; derivative is sigmoid(a)."""
    x = a.value
    return _make(np.logaddexp(0.0, x), (a,), lambda g: (g * _sigmoid(x),))


def sqrt(a: GradNode) -> GradNode:
    """Square root of a non-negative input; the derivative at 0 is taken as 0."""
    r = np.sqrt(np.maximum(a.value, 0.0))
    safe = np.where(r > 0, r, 1.0)

    def rule(g):
        return (np.where(r > 0, g / (2.0 * safe), 0.0),)

    return _make(r, (a,), rule)


def square(a: GradNode) -> GradNode:
    x = a.value
    return _make(x * x, (a,), lambda g: (2.0 * g * x,))


def sum(a: GradNode, axis=None) -> GradNode:  # noqa: A001 - mirrors numpy naming
    shape = a.shape

    def rule(g):
        if axis is not None:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape).copy(),)

    return _make(np.sum(a.value, axis=axis), (a,), rule)


def mean(a: GradNode, axis=None) -> GradNode:
    count = a.value.size if axis is None else np.prod([a.shape[i] for i in np.atleast_1d(axis)])
    return scalar_mul(sum(a, axis=axis), 1.0 / count)


def reshape(a: GradNode, shape) -> GradNode:
    old = a.shape
    return _make(a.value.reshape(shape), (a,), lambda g: (g.reshape(old),))


def flatten(a: GradNode) -> GradNode:
    """Collapse every axis after the leading batch axis."""
    return reshape(a, (a.shape[0], -1))


def take_rows(a: GradNode, index) -> GradNode:
    """Gather rows ``a[index]``; repeated indices accumulate in the backward pass."""
    index = np.asarray(index, dtype=np.intp)
    shape = a.shape

    def rule(g):
        out = np.zeros(shape, dtype=DTYPE)
        np.add.at(out, index, g)
        return (out,)

    return _make(a.value[index], (a,), rule)


def mean_pool1d(x: GradNode, window: int) -> GradNode:
    """Non-overlapping average pooling over the last axis.

    The stride equals ``window``; trailing elements that do not fill a whole
    window are dropped, so the output length is ``L // window``.
    """
    length = x.shape[-1]
    if window < 1 or window > length:
        raise ConfigError(f"pool window {window} invalid for input length {length}")
    n_out = length // window
    used = n_out * window
    lead = x.shape[:-1]
    blocks = x.value[..., :used].reshape(*lead, n_out, window)

    def rule(g):
        out = np.zeros(x.shape, dtype=DTYPE)
        out[..., :used] = np.repeat(g / window, window, axis=-1)
        return (out,)

    return _make(blocks.mean(axis=-1), (x,), rule)


# ---------------------------------------------------------------------------
# linear algebra


def matmul(a: GradNode, b: GradNode) -> GradNode:
    if a.value.ndim != 2 or b.value.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    av, bv = a.value, b.value
    return _make(av @ bv, (a, b), lambda g: (g @ bv.T, av.T @ g))


def conv1d(x: GradNode, w: GradNode, b: GradNode) -> GradNode:
    """Same-length 1-D cross-correlation with zero padding ``(K - 1) / 2``.

    ``x`` is ``[C_in, L]`` or batched ``[N, C_in, L]``; ``w`` is
    ``[C_out, C_in, K]`` and ``b`` is ``[C_out]``.
    """
    if w.value.ndim != 3:
        raise ShapeError(f"conv1d: weight must be [C_out, C_in, K], got {w.shape}")
    c_out, c_in, k = w.shape
    if k % 2 == 0:
        raise ConfigError(f"conv1d: kernel size must be odd, got {k}")
    if b.shape != (c_out,):
        raise ShapeError(f"conv1d: bias shape {b.shape} does not match C_out={c_out}")
    unbatched = x.value.ndim == 2
    xv = x.value[None] if unbatched else x.value
    if xv.ndim != 3 or xv.shape[1] != c_in:
        raise ShapeError(f"conv1d: input {x.shape} incompatible with weight {w.shape}")
    n, _, length = xv.shape
    pad = (k - 1) // 2
    xp = np.pad(xv, ((0, 0), (0, 0), (pad, pad)))
    cols = np.lib.stride_tricks.sliding_window_view(xp, k, axis=2)  # [N, C_in, L, K]
    wv = w.value
    out = np.tensordot(cols, wv, axes=([1, 3], [1, 2])).transpose(0, 2, 1) + b.value[None, :, None]

    def rule(g):
        g3 = g[None] if unbatched else g
        gw = np.tensordot(g3, cols, axes=([0, 2], [0, 2]))  # [C_out, C_in, K]
        gb = g3.sum(axis=(0, 2))
        gcols = np.tensordot(g3, wv, axes=([1], [0]))  # [N, L, C_in, K]
        gxp = np.zeros((n, c_in, length + 2 * pad), dtype=DTYPE)
        for j in range(k):
            gxp[:, :, j : j + length] += gcols[:, :, :, j].transpose(0, 2, 1)
        gx = gxp[:, :, pad : pad + length]
        return (gx[0] if unbatched else gx, gw, gb)

    return _make(out[0] if unbatched else out, (x, w, b), rule)


# ---------------------------------------------------------------------------
# batch normalization


@dataclass
class BatchNormStats:
    """Per-channel running statistics used in eval mode."""

    mean: np.ndarray
    var: np.ndarray
    momentum: float = 0.1
    eps: float = 1e-5

    @classmethod
    def fresh(cls, channels: int, momentum: float = 0.1, eps: float = 1e-5) -> "BatchNormStats":
        return cls(np.zeros(channels), np.ones(channels), momentum, eps)

    def copy(self) -> "BatchNormStats":
        return BatchNormStats(self.mean.copy(), self.var.copy(), self.momentum, self.eps)


def batchnorm(
    x: GradNode,
    gamma: GradNode,
    beta: GradNode,
    mode: str,
    running: BatchNormStats,
) -> GradNode:
    """Normalize ``[N, C, L]`` (or ``[N, C]``) per channel.

    Train mode uses the biased batch variance for normalization and folds the
    unbiased variance into ``running`` with its momentum. Eval mode is an
    affine map built from ``running``.
    """
    xv = x.value
    if xv.ndim not in (2, 3):
        raise ShapeError(f"batchnorm: expected [N, C] or [N, C, L], got {x.shape}")
    channels = xv.shape[1]
    if gamma.shape != (channels,) or beta.shape != (channels,):
        raise ShapeError(f"batchnorm: gamma {gamma.shape} / beta {beta.shape} vs C={channels}")
    axes = (0,) if xv.ndim == 2 else (0, 2)
    bshape = (1, channels) if xv.ndim == 2 else (1, channels, 1)
    count = xv.size // channels
    gv = gamma.value.reshape(bshape)

    if mode == "train":
        if count < 2:
            raise DegenerateBatchError(f"batchnorm: need N*L >= 2 in train mode, got {count}")
        mu = xv.mean(axis=axes, keepdims=True)
        centered = xv - mu
        var = (centered**2).mean(axis=axes, keepdims=True)
        inv_std = 1.0 / np.sqrt(var + running.eps)
        xhat = centered * inv_std
        m = running.momentum
        running.mean = (1.0 - m) * running.mean + m * mu.reshape(channels)
        running.var = (1.0 - m) * running.var + m * var.reshape(channels) * count / (count - 1)

        def rule(g):
            dxhat = g * gv
            dx = (inv_std / count) * (
                count * dxhat
                - dxhat.sum(axis=axes, keepdims=True)
                - xhat * (dxhat * xhat).sum(axis=axes, keepdims=True)
            )
            return (dx, (g * xhat).sum(axis=axes), g.sum(axis=axes))

    elif mode == "eval":
        inv_std = (1.0 / np.sqrt(running.var + running.eps)).reshape(bshape)
        xhat = (xv - running.mean.reshape(bshape)) * inv_std

        def rule(g):
            return (g * gv * inv_std, (g * xhat).sum(axis=axes), g.sum(axis=axes))

    else:
        raise ConfigError(f"batchnorm: mode must be 'train' or 'eval', got {mode!r}")

    out = gv * xhat + beta.value.reshape(bshape)
    return _make(out, (x, gamma, beta), rule)


# ---------------------------------------------------------------------------
# reverse pass


def _topological_order(root: GradNode) -> list:
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node.parents:
            if parent.requires_grad and id(parent) not in seen:
                stack.append((parent, False))
    return order


def backward(root: GradNode) -> None:
    """Accumulate d(root)/d(node) into ``grad`` of every node reachable from ``root``.

    Leaf gradients accumulate across calls; interior gradients are reset so a
    second call on a fresh graph sees no stale values.
    """
    if root.value.size != 1 or root.value.ndim > 1:
        raise ContractError(f"backward: root must be a scalar, got shape {root.shape}")
    if not root.requires_grad:
        return
    order = _topological_order(root)
    for node in order:
        if node.backward_rule is not None:
            node.grad = np.zeros_like(node.value)
    root.grad = root.grad + np.ones_like(root.value)
    for node in reversed(order):
        if node.backward_rule is None:
            continue
        grads = node.backward_rule(node.grad)
        for parent, g in zip(node.parents, grads):
            if parent.requires_grad and g is not None:
                parent.grad = parent.grad + g
