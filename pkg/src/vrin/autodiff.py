"""Reverse-mode automatic differentiation over dense numpy arrays.

A ``Tape`` records every differentiable operation as an append-only node
list; node ids grow monotonically, so the graph is acyclic by construction
and ``Tape.backward`` propagates gradients by a single reverse sweep.
Operations executed outside an active tape (or on inputs that do not
require gradients) run forward-only.

All arrays are 64-bit floats by default; every forward output is checked
for NaN/Inf and a :class:`NumericError` is raised on the first non-finite
value, naming the offending operation.
"""

from __future__ import annotations

import threading
from typing import Callable, Iterable, Sequence

import numpy as np

DEFAULT_DTYPE = np.float64

# Finite checks on every forward op; can be switched off for speed.
CHECK_FINITE = True


class ShapeError(ValueError):
    """Operand shapes do not conform for the requested operation."""


class NumericError(ArithmeticError):
    """A forward operation produced NaN or Inf."""


_STATE = threading.local()


def _tape_stack() -> list:
    stack = getattr(_STATE, "tapes", None)
    if stack is None:
        stack = []
        _STATE.tapes = stack
    return stack


def active_tape() -> "Tape | None":
    stack = _tape_stack()
    return stack[-1] if stack else None


class Tensor:
    """Dense real array with an optional gradient slot.

    Leaf tensors created with ``requires_grad=True`` accumulate gradients
    in ``.grad`` during :meth:`Tape.backward`. Tensors produced by ops
    inside an active tape inherit ``requires_grad`` from their inputs.
    """

    __slots__ = ("_data", "requires_grad", "grad")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data, dtype=dtype if dtype is not None else DEFAULT_DTYPE)
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(DEFAULT_DTYPE)
        self._data = arr
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None

    @property
    def data(self) -> np.ndarray:
        return self._data

    @data.setter
    def data(self, value) -> None:
        # numpy collapses 0-d array arithmetic to immutable scalars; keep
        # parameters as true ndarrays so in-place writes stay visible
        self._data = np.asarray(value)

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    def accumulate_grad(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    # Arithmetic sugar; the module-level functions do the work.
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return multiply(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return negate(self)

    def __sub__(self, other):
        return subtract(self, other)

    def __rsub__(self, other):
        return subtract(other, self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return take(self, idx)


def as_tensor(value, dtype=None) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value, requires_grad=False, dtype=dtype)


def constant(value, dtype=None) -> Tensor:
    return Tensor(value, requires_grad=False, dtype=dtype)


def parameter(value, dtype=None) -> Tensor:
    t = Tensor(value, requires_grad=True, dtype=dtype)
    t.zero_grad()
    return t


class _Node:
    __slots__ = ("op", "output", "backward_fn")

    def __init__(self, op: str, output: Tensor, backward_fn: Callable[[np.ndarray], None]):
        self.op = op
        self.output = output
        self.backward_fn = backward_fn


class Tape:
    """Append-only record of differentiable operations.

    Usable as a context manager; the innermost active tape receives all
    recorded nodes. A tape and the tensors it references are confined to
    the thread that created them.
    """

    def __init__(self):
        self.nodes: list[_Node] = []

    def __enter__(self) -> "Tape":
        _tape_stack().append(self)
        return self

    def __exit__(self, *exc) -> None:
        _tape_stack().pop()

    def append(self, op: str, output: Tensor, backward_fn) -> None:
        self.nodes.append(_Node(op, output, backward_fn))

    def backward(self, loss: Tensor) -> None:
        """Populate ``.grad`` of every reachable requires-grad tensor.

        Visits nodes exactly once in reverse id order. Nodes whose output
        never received a gradient are off the loss path and contribute
        nothing.
        """
        if loss.size != 1:
            raise ShapeError(f"backward requires a scalar loss, got shape {loss.shape}")
        loss.grad = np.ones_like(loss.data)
        for node in reversed(self.nodes):
            g = node.output.grad
            if g is None:
                continue
            node.backward_fn(g)


def record() -> Tape:
    return Tape()


def _check_finite(op: str, out: np.ndarray) -> None:
    if CHECK_FINITE and not np.all(np.isfinite(out)):
        raise NumericError(f"non-finite values in output of '{op}'")


def _finish(op: str, out_data: np.ndarray, inputs: Sequence[Tensor],
            backward_fn: Callable[[np.ndarray], None]) -> Tensor:
    _check_finite(op, out_data)
    out = Tensor(out_data, dtype=out_data.dtype)
    tape = active_tape()
    if tape is not None and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        tape.append(op, out, backward_fn)
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce a broadcast gradient back to the original operand shape."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _broadcastable(a: np.ndarray, b: np.ndarray, op: str) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"'{op}' operands have incompatible shapes {a.shape} and {b.shape}") from None


# ---------------------------------------------------------------------------
# elementwise binary ops


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcastable(a.data, b.data, "add")
    out = a.data + b.data

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(g, b.shape))

    return _finish("add", out, (a, b), backward)


def subtract(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcastable(a.data, b.data, "subtract")
    out = a.data - b.data

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(-g, b.shape))

    return _finish("subtract", out, (a, b), backward)


def multiply(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcastable(a.data, b.data, "multiply")
    out = a.data * b.data

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g * b.data, a.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(g * a.data, b.shape))

    return _finish("multiply", out, (a, b), backward)


def negate(a) -> Tensor:
    a = as_tensor(a)
    out = -a.data

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(-g)

    return _finish("negate", out, (a,), backward)


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim == 0 or b.ndim == 0 or a.ndim > 2 or b.ndim > 2:
        raise ShapeError(f"'matmul' supports 1-D/2-D operands, got {a.shape} and {b.shape}")
    inner_a = a.shape[-1]
    inner_b = b.shape[0] if b.ndim >= 1 else None
    if inner_a != inner_b:
        raise ShapeError(f"'matmul' inner dimensions differ: {a.shape} and {b.shape}")
    out = a.data @ b.data

    def backward(g):
        # Promote to 2-D so one set of formulas covers the vector cases.
        a2 = a.data if a.ndim == 2 else a.data.reshape(1, -1)
        b2 = b.data if b.ndim == 2 else b.data.reshape(-1, 1)
        g2 = g.reshape(a2.shape[0], b2.shape[1])
        if a.requires_grad:
            a.accumulate_grad((g2 @ b2.T).reshape(a.shape))
        if b.requires_grad:
            b.accumulate_grad((a2.T @ g2).reshape(b.shape))

    return _finish("matmul", out, (a, b), backward)


# ---------------------------------------------------------------------------
# elementwise unary ops


def tanh(a) -> Tensor:
    a = as_tensor(a)
    y = np.tanh(a.data)

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(g * (1.0 - y * y))

    return _finish("tanh", y, (a,), backward)


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    x = a.data
    y = np.empty_like(x)
    pos = x >= 0
    y[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    y[~pos] = ex / (1.0 + ex)

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(g * y * (1.0 - y))

    return _finish("sigmoid", y, (a,), backward)


def exp(a) -> Tensor:
    a = as_tensor(a)
    with np.errstate(over="ignore"):
        y = np.exp(a.data)

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(g * y)

    return _finish("exp", y, (a,), backward)


def log(a) -> Tensor:
    a = as_tensor(a)
    with np.errstate(divide="ignore", invalid="ignore"):
        y = np.log(a.data)

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(g / a.data)

    return _finish("log", y, (a,), backward)


def relu(a) -> Tensor:
    a = as_tensor(a)
    y = np.maximum(0.0, a.data)

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(g * (a.data > 0))

    return _finish("relu", y, (a,), backward)


def softplus(a) -> Tensor:
    """log(1 + exp(x)) computed without overflow; gradient is sigmoid(x)."""
    a = as_tensor(a)
    x = a.data
    y = np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))

    def backward(g):
        if a.requires_grad:
            s = np.empty_like(x)
            pos = x >= 0
            s[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
            ex = np.exp(x[~pos])
            s[~pos] = ex / (1.0 + ex)
            a.accumulate_grad(g * s)

    return _finish("softplus", y, (a,), backward)


def absolute(a) -> Tensor:
    """|x| with subgradient sign(x); exactly 0 at x == 0."""
    a = as_tensor(a)
    y = np.abs(a.data)

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(g * np.sign(a.data))

    return _finish("absolute", y, (a,), backward)


def square(a) -> Tensor:
    a = as_tensor(a)
    y = a.data * a.data

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(g * 2.0 * a.data)

    return _finish("square", y, (a,), backward)


def clip(a, lo: float, hi: float) -> Tensor:
    """Clamp to [lo, hi]; gradient passes only where the input was in range."""
    a = as_tensor(a)
    y = np.clip(a.data, lo, hi)

    def backward(g):
        if a.requires_grad:
            inside = (a.data >= lo) & (a.data <= hi)
            a.accumulate_grad(g * inside)

    return _finish("clip", y, (a,), backward)


# ---------------------------------------------------------------------------
# reductions and structure


def sum_(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    y = a.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if a.requires_grad:
            gg = np.asarray(g)
            if axis is not None and not keepdims:
                gg = np.expand_dims(gg, axis)
            a.accumulate_grad(np.broadcast_to(gg, a.shape).copy())

    return _finish("sum", np.asarray(y), (a,), backward)


def mean_(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    y = a.data.mean(axis=axis, keepdims=keepdims)
    count = a.data.size if axis is None else a.data.shape[axis]

    def backward(g):
        if a.requires_grad:
            gg = np.asarray(g)
            if axis is not None and not keepdims:
                gg = np.expand_dims(gg, axis)
            a.accumulate_grad(np.broadcast_to(gg, a.shape).copy() / count)

    return _finish("mean", np.asarray(y), (a,), backward)


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    y = a.data.reshape(shape)

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(g.reshape(a.shape))

    return _finish("reshape", y, (a,), backward)


def concat(tensors: Iterable, axis: int = -1) -> Tensor:
    parts = [as_tensor(t) for t in tensors]
    y = np.concatenate([p.data for p in parts], axis=axis)
    sizes = [p.shape[axis] for p in parts]

    def backward(g):
        offset = 0
        for p, s in zip(parts, sizes):
            if p.requires_grad:
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(offset, offset + s)
                p.accumulate_grad(g[tuple(idx)])
            offset += s

    return _finish("concat", y, parts, backward)


def take(a, idx) -> Tensor:
    """Basic/advanced indexing with scatter-add gradient."""
    a = as_tensor(a)
    y = a.data[idx]
    if not isinstance(y, np.ndarray):
        y = np.asarray(y)

    def backward(g):
        if a.requires_grad:
            buf = np.zeros_like(a.data)
            np.add.at(buf, idx, g)
            a.accumulate_grad(buf)

    return _finish("take", y.copy(), (a,), backward)


def flip(a, axis: int) -> Tensor:
    a = as_tensor(a)
    y = np.flip(a.data, axis=axis).copy()

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(np.flip(g, axis=axis))

    return _finish("flip", y, (a,), backward)


def dropout(a, drop_rate: float, rng: np.random.Generator, training: bool) -> Tensor:
    """Inverted dropout: train-mode output has E[out] == input; eval is identity."""
    a = as_tensor(a)
    if not training or drop_rate <= 0.0:
        return a
    if not 0.0 <= drop_rate < 1.0:
        raise ValueError(f"drop_rate must be in [0, 1), got {drop_rate}")
    keep = 1.0 - drop_rate
    mask = (rng.random(a.shape) < keep).astype(a.dtype) / keep
    out = a.data * mask

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(g * mask)

    return _finish("dropout", out, (a,), backward)


def zero_diagonal(w) -> Tensor:
    """Multiply a square matrix by (1 - I), forcing a zero diagonal.

    Gradients to diagonal entries are zero by construction, so a
    zero-initialized diagonal stays exactly zero through training.
    """
    w = as_tensor(w)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ShapeError(f"'zero_diagonal' needs a square matrix, got {w.shape}")
    mask = constant(1.0 - np.eye(w.shape[0], dtype=w.dtype))
    return multiply(w, mask)


# ---------------------------------------------------------------------------
# verification oracle


def grad_check(fn: Callable[[], Tensor], params: Sequence[Tensor], eps: float = 1e-6) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``fn`` must be a deterministic scalar-valued closure over ``params``
    (dropout and sampling frozen). Relative error is
    |analytic - fd| / max(1, |analytic|, |fd|), maximized over every
    parameter entry.
    """
    if not 0.0 < eps <= 1e-2:
        raise ValueError(f"eps must be in (0, 1e-2], got {eps}")
    for p in params:
        p.zero_grad()
    with record() as tape:
        loss = fn()
    tape.backward(loss)
    analytic = [p.grad.copy() if p.grad is not None else np.zeros_like(p.data) for p in params]

    worst = 0.0
    for p, ga in zip(params, analytic):
        flat = p.data.flat
        gflat = ga.reshape(-1)
        for i in range(p.data.size):
            orig = flat[i]
            flat[i] = orig + eps
            f_plus = float(fn().data)
            flat[i] = orig - eps
            f_minus = float(fn().data)
            flat[i] = orig
            fd = (f_plus - f_minus) / (2.0 * eps)
            err = abs(gflat[i] - fd) / max(1.0, abs(gflat[i]), abs(fd))
            worst = max(worst, err)
    return worst
