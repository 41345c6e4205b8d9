"""Reverse-mode autodiff over 2-D double-precision matrices.

Every value is a row-major (rows, cols) float64 array.  Ops record a
backward closure mapping the output gradient to per-parent
contributions; ``backward`` on a 1x1 loss walks the tape with
sweep-local gradients and accumulates into leaf ``.grad`` buffers, so
repeating a backward pass without a reset doubles leaf gradients.
"""

from __future__ import annotations

import numpy as np

from ..errors import GraphCycle, ShapeMismatch


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, parents=(), backward=None):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        elif arr.ndim == 1:
            arr = arr.reshape(1, -1)
        elif arr.ndim != 2:
            raise ShapeMismatch(f"tensors are 2-D, got shape {arr.shape}")
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents = parents
        self._backward = backward

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeMismatch(f"item() needs a 1x1 tensor, got {self.shape}")
        return float(self.data[0, 0])

    def accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def zero_grad(self) -> None:
        if self.grad is not None:
            self.grad[...] = 0.0

    def backward(self) -> None:
        backward(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


def tensor(data, requires_grad: bool = False) -> Tensor:
    return Tensor(data, requires_grad=requires_grad)


def _result(data, parents, backward_fn) -> Tensor:
    needs = any(p.requires_grad for p in parents)
    return Tensor(data, requires_grad=needs, parents=tuple(parents) if needs else (),
                  backward=backward_fn if needs else None)


def _unbroadcast(g: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Reduce a gradient back to the shape of a broadcast operand."""
    if g.shape == shape:
        return g
    out = g
    if shape[0] == 1 and g.shape[0] != 1:
        out = out.sum(axis=0, keepdims=True)
    if shape[1] == 1 and g.shape[1] != 1:
        out = out.sum(axis=1, keepdims=True)
    if out.shape != shape:
        raise ShapeMismatch(f"cannot reduce gradient {g.shape} to {shape}")
    return out


def _check_broadcast(a: Tensor, b: Tensor, op: str) -> None:
    ar, ac = a.shape
    br, bc = b.shape
    if (ar != br and 1 not in (ar, br)) or (ac != bc and 1 not in (ac, bc)):
        raise ShapeMismatch(f"{op}: shapes {a.shape} and {b.shape} do not broadcast")


# --- arithmetic -------------------------------------------------------

def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.cols != b.rows:
        raise ShapeMismatch(f"matmul: {a.shape} @ {b.shape}")

    def bw(g):
        out = []
        if a.requires_grad:
            out.append((a, g @ b.data.T))
        if b.requires_grad:
            out.append((b, a.data.T @ g))
        return out

    return _result(a.data @ b.data, (a, b), bw)


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_broadcast(a, b, "add")

    def bw(g):
        out = []
        if a.requires_grad:
            out.append((a, _unbroadcast(g, a.shape)))
        if b.requires_grad:
            out.append((b, _unbroadcast(g, b.shape)))
        return out

    return _result(a.data + b.data, (a, b), bw)


def sub(a: Tensor, b: Tensor) -> Tensor:
    _check_broadcast(a, b, "sub")

    def bw(g):
        out = []
        if a.requires_grad:
            out.append((a, _unbroadcast(g, a.shape)))
        if b.requires_grad:
            out.append((b, -_unbroadcast(g, b.shape)))
        return out

    return _result(a.data - b.data, (a, b), bw)


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check_broadcast(a, b, "mul")

    def bw(g):
        out = []
        if a.requires_grad:
            out.append((a, _unbroadcast(g * b.data, a.shape)))
        if b.requires_grad:
            out.append((b, _unbroadcast(g * a.data, b.shape)))
        return out

    return _result(a.data * b.data, (a, b), bw)


def scale(a: Tensor, s: float) -> Tensor:
    return _result(a.data * s, (a,), lambda g: [(a, g * s)])


def add_const(a: Tensor, c) -> Tensor:
    """Add a non-differentiable constant (used for masks and targets)."""
    return _result(a.data + c, (a,), lambda g: [(a, g)])


# --- nonlinearities ---------------------------------------------------

def sigmoid(a: Tensor) -> Tensor:
    x = a.data
    out_data = np.where(
        x >= 0,
        1.0 / (1.0 + np.exp(-np.clip(x, 0, None))),
        np.exp(np.clip(x, None, 0)) / (1.0 + np.exp(np.clip(x, None, 0))),
    )
    return _result(out_data, (a,), lambda g: [(a, g * out_data * (1.0 - out_data))])


def tanh(a: Tensor) -> Tensor:
    out_data = np.tanh(a.data)
    return _result(out_data, (a,), lambda g: [(a, g * (1.0 - out_data * out_data))])


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0
    return _result(a.data * mask, (a,), lambda g: [(a, g * mask)])


def exp(a: Tensor) -> Tensor:
    out_data = np.exp(a.data)
    return _result(out_data, (a,), lambda g: [(a, g * out_data)])


def log(a: Tensor) -> Tensor:
    return _result(np.log(a.data), (a,), lambda g: [(a, g / a.data)])


# --- reductions -------------------------------------------------------

def sum_all(a: Tensor) -> Tensor:
    return _result(a.data.sum(), (a,), lambda g: [(a, np.full_like(a.data, g[0, 0]))])


def mean_all(a: Tensor) -> Tensor:
    n = a.data.size
    return _result(a.data.mean(), (a,), lambda g: [(a, np.full_like(a.data, g[0, 0] / n))])


# --- softmax family ---------------------------------------------------

def softmax_rows(a: Tensor) -> Tensor:
    """Row-wise softmax, stabilized by row-max subtraction."""
    shifted = a.data - a.data.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    out_data = e / e.sum(axis=1, keepdims=True)

    def bw(g):
        dot = (g * out_data).sum(axis=1, keepdims=True)
        return [(a, out_data * (g - dot))]

    return _result(out_data, (a,), bw)


def log_softmax_rows(a: Tensor) -> Tensor:
    shifted = a.data - a.data.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    out_data = shifted - lse
    soft = np.exp(out_data)

    def bw(g):
        return [(a, g - soft * g.sum(axis=1, keepdims=True))]

    return _result(out_data, (a,), bw)


# --- structure --------------------------------------------------------

def transpose(a: Tensor) -> Tensor:
    return _result(a.data.T, (a,), lambda g: [(a, g.T)])


def concat_cols(parts: list[Tensor]) -> Tensor:
    if not parts:
        raise ShapeMismatch("concat_cols of zero tensors")
    rows = parts[0].rows
    for p in parts:
        if p.rows != rows:
            raise ShapeMismatch("concat_cols: row counts differ")
    offsets = np.cumsum([0] + [p.cols for p in parts])

    def bw(g):
        return [
            (p, g[:, lo:hi])
            for p, lo, hi in zip(parts, offsets[:-1], offsets[1:])
            if p.requires_grad
        ]

    return _result(np.concatenate([p.data for p in parts], axis=1), tuple(parts), bw)


def concat_rows(parts: list[Tensor]) -> Tensor:
    if not parts:
        raise ShapeMismatch("concat_rows of zero tensors")
    cols = parts[0].cols
    for p in parts:
        if p.cols != cols:
            raise ShapeMismatch("concat_rows: column counts differ")
    offsets = np.cumsum([0] + [p.rows for p in parts])

    def bw(g):
        return [
            (p, g[lo:hi, :])
            for p, lo, hi in zip(parts, offsets[:-1], offsets[1:])
            if p.requires_grad
        ]

    return _result(np.concatenate([p.data for p in parts], axis=0), tuple(parts), bw)


def slice_cols(a: Tensor, lo: int, hi: int) -> Tensor:
    if not 0 <= lo < hi <= a.cols:
        raise ShapeMismatch(f"slice_cols [{lo}:{hi}] of {a.shape}")

    def bw(g):
        full = np.zeros_like(a.data)
        full[:, lo:hi] = g
        return [(a, full)]

    return _result(a.data[:, lo:hi].copy(), (a,), bw)


def slice_rows(a: Tensor, lo: int, hi: int) -> Tensor:
    if not 0 <= lo < hi <= a.rows:
        raise ShapeMismatch(f"slice_rows [{lo}:{hi}] of {a.shape}")

    def bw(g):
        full = np.zeros_like(a.data)
        full[lo:hi, :] = g
        return [(a, full)]

    return _result(a.data[lo:hi, :].copy(), (a,), bw)


def gather_rows(table: Tensor, ids: list[int]) -> Tensor:
    """Embedding lookup: stacks ``table`` rows by index."""
    idx = np.asarray(ids, dtype=np.int64)
    if idx.size == 0:
        raise ShapeMismatch("gather_rows with no indices")
    if idx.min() < 0 or idx.max() >= table.rows:
        raise ShapeMismatch(f"gather index outside 0..{table.rows - 1}")

    def bw(g):
        full = np.zeros_like(table.data)
        np.add.at(full, idx, g)
        return [(table, full)]

    return _result(table.data[idx], (table,), bw)


def layer_norm(a: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Row-wise layer normalization with learnable gain and bias."""
    if gamma.shape != (1, a.cols) or beta.shape != (1, a.cols):
        raise ShapeMismatch(f"layer_norm affine params must be 1x{a.cols}")
    mu = a.data.mean(axis=1, keepdims=True)
    var = a.data.var(axis=1, keepdims=True)
    std = np.sqrt(var + eps)
    xhat = (a.data - mu) / std

    def bw(g):
        out = []
        if gamma.requires_grad:
            out.append((gamma, (g * xhat).sum(axis=0, keepdims=True)))
        if beta.requires_grad:
            out.append((beta, g.sum(axis=0, keepdims=True)))
        if a.requires_grad:
            dxhat = g * gamma.data
            m1 = dxhat.mean(axis=1, keepdims=True)
            m2 = (dxhat * xhat).mean(axis=1, keepdims=True)
            out.append((a, (dxhat - m1 - xhat * m2) / std))
        return out

    return _result(xhat * gamma.data + beta.data, (a, gamma, beta), bw)


# --- tape walking -----------------------------------------------------

def _topo_order(loss: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    visited: set[int] = set()
    in_stack: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            in_stack.discard(id(node))
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        in_stack.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if not p.requires_grad:
                continue
            if id(p) in in_stack:
                raise GraphCycle("cycle detected in autodiff graph")
            if id(p) not in visited:
                stack.append((p, False))
    return order


def backward(loss: Tensor) -> None:
    """Reverse-mode sweep from a 1x1 loss node.

    Intermediate gradients are sweep-local; only leaf tensors (no
    parents) receive persistent ``.grad`` accumulation.
    """
    if loss.data.size != 1:
        raise ShapeMismatch(f"backward needs a scalar loss, got {loss.shape}")
    order = _topo_order(loss)
    sweep: dict[int, np.ndarray] = {id(loss): np.ones((1, 1))}
    for node in reversed(order):
        g = sweep.pop(id(node), None)
        if g is None:
            continue
        if node._backward is not None:
            for parent, contribution in node._backward(g):
                key = id(parent)
                if key in sweep:
                    sweep[key] += contribution
                else:
                    sweep[key] = np.array(contribution)
        elif node.requires_grad:
            node.accumulate(g)
