"""Gradient-check case builders shared by unit and acceptance tests.

Each builder returns (store, loss_fn) where loss_fn rebuilds the
scalar loss from the store's current parameter values.
"""

from __future__ import annotations

import numpy as np

from foresight import nn


def scalarize(out, seed=0):
    coeff = np.random.default_rng(seed).normal(size=out.shape)
    return nn.sum_all(nn.mul(out, nn.Tensor(coeff)))


def op_cases(seed: int):
    rng = np.random.default_rng(seed)

    def linear_case():
        store = nn.ParamStore(seed=seed)
        store.new("w", 3, 2)
        store.new("b", 1, 2, init="zeros")
        x = nn.Tensor(rng.normal(size=(4, 3)))
        return store, lambda: scalarize(nn.linear(x, store["w"], store["b"]), seed)

    def softmax_case():
        store = nn.ParamStore(seed=seed)
        store.new("w", 2, 5)
        x = nn.Tensor(rng.normal(size=(3, 2)))
        return store, lambda: scalarize(nn.softmax_rows(nn.matmul(x, store["w"])), seed)

    def log_softmax_case():
        store = nn.ParamStore(seed=seed)
        store.new("w", 2, 5)
        x = nn.Tensor(rng.normal(size=(3, 2)))
        return store, lambda: scalarize(nn.log_softmax_rows(nn.matmul(x, store["w"])), seed)

    def attention_case():
        d = 4
        store = nn.ParamStore(seed=seed)
        nn.attention_params(store, "a", d)
        q = nn.Tensor(rng.normal(size=(2, d)))
        kv = nn.Tensor(rng.normal(size=(3, d)))

        def f():
            p = nn.AttentionParams(*(store[f"a.{n}"] for n in
                                     ("wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo")))
            return scalarize(nn.mh_attention(q, kv, kv, heads=2, p=p), seed)

        return store, f

    def masked_attention_case():
        d = 4
        store = nn.ParamStore(seed=seed)
        nn.attention_params(store, "a", d)
        x = nn.Tensor(rng.normal(size=(3, d)))

        def f():
            p = nn.AttentionParams(*(store[f"a.{n}"] for n in
                                     ("wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo")))
            return scalarize(nn.masked_self_attention(x, heads=2, p=p), seed)

        return store, f

    def gate_case():
        d = 3
        store = nn.ParamStore(seed=seed)
        nn.gate_params(store, "g", d)
        h = nn.Tensor(rng.normal(size=(2, d)))
        u = nn.Tensor(rng.normal(size=(2, d)))
        return store, lambda: scalarize(
            nn.gate_fusion(h, u, nn.GateParams(store["g.w"], store["g.b"])), seed
        )

    def ffn_case():
        d = 3
        store = nn.ParamStore(seed=seed)
        nn.ffn_params(store, "f", d)
        x = nn.Tensor(rng.normal(size=(2, d)))

        def f():
            p = nn.FfnParams(*(store[f"f.{n}"] for n in ("w1", "b1", "w2", "b2", "gamma", "beta")))
            return scalarize(nn.ffn_block(x, p), seed)

        return store, f

    def lstm_case():
        store = nn.ParamStore(seed=seed)
        nn.lstm_params(store, "l", 3, 4)
        x = nn.Tensor(rng.normal(size=(3, 3)))

        def f():
            p = nn.LstmParams(store["l.wx"], store["l.wh"], store["l.b"])
            return scalarize(nn.lstm_forward(x, p), seed)

        return store, f

    def luong_case():
        store = nn.ParamStore(seed=seed)
        store.new("wa", 3, 3)
        q = nn.Tensor(rng.normal(size=(1, 3)))
        mem = nn.Tensor(rng.normal(size=(4, 3)))

        def f():
            _, context = nn.luong_attention(q, mem, store["wa"])
            return scalarize(context, seed)

        return store, f

    def layernorm_case():
        store = nn.ParamStore(seed=seed)
        store.new("w", 3, 4)
        store.new("gamma", 1, 4, init="ones")
        store.new("beta", 1, 4, init="zeros")
        x = nn.Tensor(rng.normal(size=(2, 3)))
        return store, lambda: scalarize(
            nn.layer_norm(nn.matmul(x, store["w"]), store["gamma"], store["beta"]), seed
        )

    return [
        ("linear", linear_case),
        ("softmax_rows", softmax_case),
        ("log_softmax_rows", log_softmax_case),
        ("mh_attention", attention_case),
        ("masked_self_attention", masked_attention_case),
        ("gate_fusion", gate_case),
        ("ffn_block", ffn_case),
        ("lstm_forward", lstm_case),
        ("luong_attention", luong_case),
        ("layer_norm", layernorm_case),
    ]
