"""Dense float64 tensors with reverse-mode automatic differentiation.

Every value flowing through the learned pipeline is a `Tensor` node in a
computation graph.  Ops record a backward closure; `backward()` on a scalar
loss walks the graph in reverse topological order and accumulates exact
gradients into `.grad` slots.

Graph construction and backward are single-threaded per model instance.
Only the broadcasting the pipeline needs is supported (numpy-style
elementwise broadcasting, matmul of ND stacks against 2-D weights).
"""

from __future__ import annotations

import numpy as np


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce `grad` back to `shape` by summing broadcast axes."""
    if grad.shape == shape:
        return grad
    # sum away leading axes added by broadcasting
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    # sum axes that were stretched from size 1
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


class Tensor:
    """A float64 array plus an optional gradient slot.

    `data` always has dtype float64; `grad` is populated (same shape) by
    `backward()` for every node with `requires_grad=True` that the loss
    reaches.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._backward = None

    # ---- basic introspection -------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    # ---- graph plumbing --------------------------------------------------------

    @staticmethod
    def _lift(x) -> "Tensor":
        return x if isinstance(x, Tensor) else Tensor(x)

    def _make(self, data, parents, backward) -> "Tensor":
        out = Tensor(data)
        if any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = tuple(parents)
            out._backward = backward
        return out

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def _accum(self, grad: np.ndarray):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += grad

    def backward(self):
        """Populate gradients of every reachable `requires_grad` node.

        The receiver must be a scalar (size-1) tensor.
        """
        if self.data.size != 1:
            raise ValueError(f"backward() needs a scalar loss, got shape {self.shape}")
        # iterative topological order (graphs can be thousands of nodes deep)
        topo, visited, stack = [], set(), [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in visited:
                    stack.append((p, False))
        self._accum(np.ones_like(self.data))
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # ---- elementwise arithmetic -------------------------------------------------

    def __add__(self, other):
        a, b = self, Tensor._lift(other)
        out_data = a.data + b.data

        def bw(g):
            if a.requires_grad:
                a._accum(_unbroadcast(g, a.shape))
            if b.requires_grad:
                b._accum(_unbroadcast(g, b.shape))

        return self._make(out_data, (a, b), bw)

    __radd__ = __add__

    def __neg__(self):
        a = self

        def bw(g):
            a._accum(-g)

        return self._make(-a.data, (a,), bw)

    def __sub__(self, other):
        return self + (-Tensor._lift(other))

    def __rsub__(self, other):
        return Tensor._lift(other) + (-self)

    def __mul__(self, other):
        a, b = self, Tensor._lift(other)
        out_data = a.data * b.data

        def bw(g):
            if a.requires_grad:
                a._accum(_unbroadcast(g * b.data, a.shape))
            if b.requires_grad:
                b._accum(_unbroadcast(g * a.data, b.shape))

        return self._make(out_data, (a, b), bw)

    __rmul__ = __mul__

    def __truediv__(self, other):
        a, b = self, Tensor._lift(other)
        out_data = a.data / b.data

        def bw(g):
            if a.requires_grad:
                a._accum(_unbroadcast(g / b.data, a.shape))
            if b.requires_grad:
                b._accum(_unbroadcast(-g * a.data / (b.data * b.data), b.shape))

        return self._make(out_data, (a, b), bw)

    def __rtruediv__(self, other):
        return Tensor._lift(other) / self

    def __pow__(self, p):
        if not np.isscalar(p):
            raise TypeError("only scalar exponents are supported")
        a = self
        out_data = a.data ** p

        def bw(g):
            a._accum(g * p * a.data ** (p - 1))

        return self._make(out_data, (a,), bw)

    def __matmul__(self, other):
        a, b = self, Tensor._lift(other)
        if b.ndim != 2 or a.ndim < 2:
            raise ValueError("matmul supports (..., m, k) @ (k, n) only")
        out_data = a.data @ b.data

        def bw(g):
            if a.requires_grad:
                a._accum(g @ b.data.T)
            if b.requires_grad:
                k = a.shape[-1]
                n = b.shape[-1]
                b._accum(a.data.reshape(-1, k).T @ g.reshape(-1, n))

        return self._make(out_data, (a, b), bw)

    # ---- unary math ---------------------------------------------------------

    def exp(self):
        a = self
        e = np.exp(a.data)

        def bw(g):
            a._accum(g * e)

        return self._make(e, (a,), bw)

    def log(self):
        a = self

        def bw(g):
            a._accum(g / a.data)

        return self._make(np.log(a.data), (a,), bw)

    def sqrt(self):
        a = self
        s = np.sqrt(a.data)

        def bw(g):
            a._accum(g * 0.5 / s)

        return self._make(s, (a,), bw)

    def tanh(self):
        a = self
        t = np.tanh(a.data)

        def bw(g):
            a._accum(g * (1.0 - t * t))

        return self._make(t, (a,), bw)

    def relu(self):
        a = self
        mask = a.data > 0

        def bw(g):
            a._accum(g * mask)

        return self._make(a.data * mask, (a,), bw)

    def abs(self):
        a = self
        s = np.sign(a.data)

        def bw(g):
            a._accum(g * s)

        return self._make(np.abs(a.data), (a,), bw)

    # ---- reductions ----------------------------------------------------------

    def sum(self, axis=None, keepdims: bool = False):
        a = self
        out_data = a.data.sum(axis=axis, keepdims=keepdims)

        def bw(g):
            gg = g if (axis is None or keepdims) else np.expand_dims(g, axis)
            a._accum(np.broadcast_to(gg, a.shape).copy())

        return self._make(out_data, (a,), bw)

    def mean(self, axis=None, keepdims: bool = False):
        n = self.data.size if axis is None else (
            np.prod([self.shape[i] for i in np.atleast_1d(axis)]))
        return self.sum(axis=axis, keepdims=keepdims) / float(n)

    def max(self, axis: int, keepdims: bool = False):
        """Per-slice maximum; backward routes gradient to the lowest-index
        element among ties (np.argmax picks the first occurrence)."""
        a = self
        idx = np.argmax(a.data, axis=axis)
        out_data = np.max(a.data, axis=axis, keepdims=keepdims)

        def bw(g):
            gg = g if keepdims else np.expand_dims(g, axis)
            routed = np.zeros_like(a.data)
            np.put_along_axis(routed, np.expand_dims(idx, axis), gg, axis=axis)
            a._accum(routed)

        return self._make(out_data, (a,), bw)

    def softmax(self, axis: int = -1, temperature: float = 1.0):
        """Temperature softmax along `axis`; rows sum to 1.

        temperature > 0 controls the steepness of the distribution.
        """
        if temperature <= 0:
            raise ValueError(f"softmax temperature must be > 0, got {temperature}")
        a = self
        z = a.data / temperature
        z = z - z.max(axis=axis, keepdims=True)  # shift-invariant, exact gradient
        e = np.exp(z)
        s = e / e.sum(axis=axis, keepdims=True)

        def bw(g):
            inner = (g * s).sum(axis=axis, keepdims=True)
            a._accum(s * (g - inner) / temperature)

        return self._make(s, (a,), bw)

    # ---- shape ops -----------------------------------------------------------

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        a = self
        old = a.shape

        def bw(g):
            a._accum(g.reshape(old))

        return self._make(a.data.reshape(shape), (a,), bw)

    def transpose(self, *axes):
        a = self
        axes = axes or tuple(reversed(range(a.ndim)))
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        inv = np.argsort(axes)

        def bw(g):
            a._accum(g.transpose(inv))

        return self._make(a.data.transpose(axes), (a,), bw)

    @property
    def T(self):
        return self.transpose()

    def __getitem__(self, key):
        a = self

        def bw(g):
            gx = np.zeros_like(a.data)
            gx[key] = g  # basic (slice/int) indexing: disjoint, assignment is exact
            a._accum(gx)

        return self._make(a.data[key], (a,), bw)


def concat(tensors, axis: int = 0) -> Tensor:
    """Concatenate along `axis`; backward splits the gradient."""
    tensors = [Tensor._lift(t) for t in tensors]
    out_data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def bw(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                sl = [slice(None)] * g.ndim
                sl[axis] = slice(lo, hi)
                t._accum(g[tuple(sl)])

    return tensors[0]._make(out_data, tensors, bw)


def take_rows(x: Tensor, idx: np.ndarray) -> Tensor:
    """Gather rows of `x` (leading axis) by an integer index array.

    Output shape is idx.shape + x.shape[1:]; backward scatter-adds into the
    gathered rows, so repeated indices accumulate.
    """
    x = Tensor._lift(x)
    idx = np.asarray(idx)

    def bw(g):
        gx = np.zeros_like(x.data)
        np.add.at(gx, idx, g)
        x._accum(gx)

    return x._make(x.data[idx], (x,), bw)


def stack(tensors, axis: int = 0) -> Tensor:
    tensors = [Tensor._lift(t) for t in tensors]
    out_data = np.stack([t.data for t in tensors], axis=axis)

    def bw(g):
        for i, t in enumerate(tensors):
            if t.requires_grad:
                t._accum(np.take(g, i, axis=axis))

    return tensors[0]._make(out_data, tensors, bw)


def as_tensor(x) -> Tensor:
    """Wrap arrays/scalars as a constant (non-differentiable) Tensor."""
    return x if isinstance(x, Tensor) else Tensor(x)
