"""Composite network layers: attention, gated fusion, FFN, LSTM.

Parameter bundles are thin views over tensors living in a ParamStore,
so tests can substitute hand-built values (identity projections, zero
gates) without touching the layer code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import EmptyMemory, EmptySequence, HeadsDivisibility, ShapeMismatch
from .params import ParamStore
from .tensor import (
    Tensor,
    add,
    add_const,
    concat_cols,
    concat_rows,
    layer_norm,
    matmul,
    mul,
    relu,
    scale,
    sigmoid,
    slice_cols,
    slice_rows,
    softmax_rows,
    sub,
    tanh,
    transpose,
)

MASK_NEG = -1e30


def linear(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    """x @ w + b with the bias row broadcast over rows."""
    out = matmul(x, w)
    if b is not None:
        if b.shape != (1, w.cols):
            raise ShapeMismatch(f"bias must be 1x{w.cols}, got {b.shape}")
        out = add(out, b)
    return out


# --- multi-head attention ----------------------------------------------

@dataclass
class AttentionParams:
    wq: Tensor
    bq: Tensor
    wk: Tensor
    bk: Tensor
    wv: Tensor
    bv: Tensor
    wo: Tensor
    bo: Tensor


def attention_params(store: ParamStore, prefix: str, d_model: int) -> AttentionParams:
    return AttentionParams(
        wq=store.new(f"{prefix}.wq", d_model, d_model),
        bq=store.new(f"{prefix}.bq", 1, d_model, init="zeros"),
        wk=store.new(f"{prefix}.wk", d_model, d_model),
        bk=store.new(f"{prefix}.bk", 1, d_model, init="zeros"),
        wv=store.new(f"{prefix}.wv", d_model, d_model),
        bv=store.new(f"{prefix}.bv", 1, d_model, init="zeros"),
        wo=store.new(f"{prefix}.wo", d_model, d_model),
        bo=store.new(f"{prefix}.bo", 1, d_model, init="zeros"),
    )


def identity_attention_params(d_model: int) -> AttentionParams:
    """Identity projections and zero biases, for closed-form checks."""
    eye = lambda: Tensor(np.eye(d_model))
    zero = lambda: Tensor(np.zeros((1, d_model)))
    return AttentionParams(eye(), zero(), eye(), zero(), eye(), zero(), eye(), zero())


def causal_mask(n: int) -> np.ndarray:
    """Additive mask forbidding attention to positions right of the query."""
    return np.triu(np.full((n, n), MASK_NEG), k=1)


def mh_attention(
    q: Tensor,
    k: Tensor,
    v: Tensor,
    heads: int,
    p: AttentionParams,
    mask: np.ndarray | None = None,
) -> Tensor:
    """Multi-head scaled dot-product attention with learned projections."""
    d_model = q.cols
    if k.cols != d_model or v.cols != d_model:
        raise ShapeMismatch(f"attention inputs disagree on width: {q.shape}, {k.shape}, {v.shape}")
    if k.rows != v.rows:
        raise ShapeMismatch(f"key/value row counts differ: {k.shape} vs {v.shape}")
    if heads < 1 or d_model % heads != 0:
        raise HeadsDivisibility(f"width {d_model} not divisible into {heads} heads")
    if mask is not None and mask.shape != (q.rows, k.rows):
        raise ShapeMismatch(f"mask shape {mask.shape} != ({q.rows}, {k.rows})")

    d_head = d_model // heads
    qp = linear(q, p.wq, p.bq)
    kp = linear(k, p.wk, p.bk)
    vp = linear(v, p.wv, p.bv)

    outs = []
    for h in range(heads):
        lo, hi = h * d_head, (h + 1) * d_head
        qh = slice_cols(qp, lo, hi)
        kh = slice_cols(kp, lo, hi)
        vh = slice_cols(vp, lo, hi)
        scores = scale(matmul(qh, transpose(kh)), 1.0 / math.sqrt(d_head))
        if mask is not None:
            scores = add_const(scores, mask)
        outs.append(matmul(softmax_rows(scores), vh))
    return linear(concat_cols(outs), p.wo, p.bo)


def masked_self_attention(x: Tensor, heads: int, p: AttentionParams) -> Tensor:
    """Self-attention where position i attends only to positions <= i."""
    return mh_attention(x, x, x, heads, p, mask=causal_mask(x.rows))


# --- gated fusion -------------------------------------------------------

@dataclass
class GateParams:
    w: Tensor  # (2d, d)
    b: Tensor  # (1, d)


def gate_params(store: ParamStore, prefix: str, d_model: int) -> GateParams:
    return GateParams(
        w=store.new(f"{prefix}.w", 2 * d_model, d_model),
        b=store.new(f"{prefix}.b", 1, d_model, init="zeros"),
    )


def gate_fusion(hhat: Tensor, uhat: Tensor, p: GateParams) -> Tensor:
    """Sigmoid-gated convex combination of two same-shape inputs."""
    if hhat.shape != uhat.shape:
        raise ShapeMismatch(f"fusion inputs differ: {hhat.shape} vs {uhat.shape}")
    gate_in = concat_cols([hhat, uhat])
    mu = sigmoid(linear(gate_in, p.w, p.b))
    # mu*h + (1-mu)*u, written as u + mu*(h-u)
    return add(uhat, mul(mu, sub(hhat, uhat)))


# --- feed-forward block --------------------------------------------------

@dataclass
class FfnParams:
    w1: Tensor
    b1: Tensor
    w2: Tensor
    b2: Tensor
    gamma: Tensor
    beta: Tensor


def ffn_params(store: ParamStore, prefix: str, d_model: int, d_hidden: int | None = None) -> FfnParams:
    d_hidden = d_hidden or 2 * d_model
    return FfnParams(
        w1=store.new(f"{prefix}.w1", d_model, d_hidden),
        b1=store.new(f"{prefix}.b1", 1, d_hidden, init="zeros"),
        w2=store.new(f"{prefix}.w2", d_hidden, d_model),
        b2=store.new(f"{prefix}.b2", 1, d_model, init="zeros"),
        gamma=store.new(f"{prefix}.gamma", 1, d_model, init="ones"),
        beta=store.new(f"{prefix}.beta", 1, d_model, init="zeros"),
    )


def ffn_block(x: Tensor, p: FfnParams) -> Tensor:
    """Two-layer FFN with residual connection and layer normalization."""
    hidden = relu(linear(x, p.w1, p.b1))
    return layer_norm(add(x, linear(hidden, p.w2, p.b2)), p.gamma, p.beta)


# --- LSTM ----------------------------------------------------------------

@dataclass
class LstmParams:
    wx: Tensor  # (d_in, 4h), gate order [input, forget, cell, output]
    wh: Tensor  # (h, 4h)
    b: Tensor   # (1, 4h)


def lstm_params(store: ParamStore, prefix: str, d_in: int, d_hidden: int) -> LstmParams:
    return LstmParams(
        wx=store.new(f"{prefix}.wx", d_in, 4 * d_hidden),
        wh=store.new(f"{prefix}.wh", d_hidden, 4 * d_hidden),
        b=store.new(f"{prefix}.b", 1, 4 * d_hidden, init="zeros"),
    )


def lstm_forward(xs: Tensor, p: LstmParams) -> Tensor:
    """Standard LSTM over the rows of ``xs``; one hidden state per row."""
    if xs.rows == 0:
        raise EmptySequence("LSTM input has no timesteps")
    d_hidden = p.wh.rows
    if p.wx.cols != 4 * d_hidden or p.b.cols != 4 * d_hidden:
        raise ShapeMismatch("LSTM parameter widths disagree")
    if xs.cols != p.wx.rows:
        raise ShapeMismatch(f"LSTM input width {xs.cols} != {p.wx.rows}")

    h = Tensor(np.zeros((1, d_hidden)))
    c = Tensor(np.zeros((1, d_hidden)))
    hiddens = []
    for t in range(xs.rows):
        x_t = slice_rows(xs, t, t + 1)
        z = add(add(matmul(x_t, p.wx), matmul(h, p.wh)), p.b)
        i = sigmoid(slice_cols(z, 0, d_hidden))
        f = sigmoid(slice_cols(z, d_hidden, 2 * d_hidden))
        g = tanh(slice_cols(z, 2 * d_hidden, 3 * d_hidden))
        o = sigmoid(slice_cols(z, 3 * d_hidden, 4 * d_hidden))
        c = add(mul(f, c), mul(i, g))
        h = mul(o, tanh(c))
        hiddens.append(h)
    return concat_rows(hiddens)


# --- bilinear (Luong-style) attention -------------------------------------

def luong_attention(q: Tensor, memory: Tensor, w_a: Tensor) -> tuple[Tensor, Tensor]:
    """Bilinear attention of a 1-row query over memory rows.

    Scores are ``memory @ w_a @ q.T``; returns (weights 1xm on the
    simplex, context 1xd as the weighted sum of memory rows).
    """
    if memory.rows == 0:
        raise EmptyMemory("attention memory has no rows")
    if q.rows != 1:
        raise ShapeMismatch(f"query must be a single row, got {q.shape}")
    if w_a.shape != (memory.cols, q.cols):
        raise ShapeMismatch(f"w_a must be {memory.cols}x{q.cols}, got {w_a.shape}")
    scores = transpose(matmul(matmul(memory, w_a), transpose(q)))
    weights = softmax_rows(scores)
    context = matmul(weights, memory)
    return weights, context
