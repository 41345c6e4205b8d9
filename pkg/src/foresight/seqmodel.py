"""Strategy-sequence models: Pr(next strategy | prefix, context).

Two interchangeable backends satisfy the same contract: a smoothed
Markov model over (context bucket, recent strategies) counts, and a
decoder-style neural model with masked self-attention over the plan
prefix, cross-attention over dialogue tokens and user states, gated
fusion, and a feed-forward block.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Protocol, Sequence

import numpy as np

from . import nn
from .corpus import PlanContext, PlanningExample
from .errors import Corrupt, DivergedLoss, EmptyTraining, PrefixTooLong, VersionMismatch
from .strategies import N_PLANABLE, PLANABLE, Strategy

CHECKPOINT_FORMAT = "foresight-model"
CHECKPOINT_VERSION = 1

#: Probabilities below this floor score as LOG_FLOOR so orderings stay total.
PROB_FLOOR = 1e-300
LOG_FLOOR = -1e9


def log_guard(p: float) -> float:
    return math.log(p) if p > PROB_FLOOR else LOG_FLOOR


class SequenceModel(Protocol):
    kind: str
    l_max: int

    def next_dist(self, ctx: PlanContext, prefix: Sequence[Strategy]) -> np.ndarray:
        """Distribution over the 7 planable strategies; sums to 1."""
        ...


def next_dist(model: SequenceModel, ctx: PlanContext, prefix: Sequence[Strategy]) -> np.ndarray:
    return model.next_dist(ctx, prefix)


def sequence_logprob(
    model: SequenceModel, ctx: PlanContext, first: Strategy, future: Sequence[Strategy]
) -> float:
    """Chain-rule log-probability of ``future`` given the plan opener."""
    prefix: list[Strategy] = [first]
    total = 0.0
    for s in future:
        probs = model.next_dist(ctx, prefix)
        total = total + log_guard(float(probs[int(s)]))
        prefix.append(s)
    return total


# ----------------------------------------------------------------------
# Context bucketing shared by the Markov backend
# ----------------------------------------------------------------------

def default_stage(history_len: int) -> int:
    """Plan-time stage estimate assuming a typical ~15-round dialogue."""
    return min(5, 1 + history_len // 3)


def emotion_bin(ctx: PlanContext) -> int:
    """Coarse valence bin (0 none, 1..3 low/mid/high) of the latest state."""
    latest = ctx.states.latest()
    if latest is None:
        return 0
    mean_valence = float(latest.vector[-2])
    return 1 + min(2, int(max(0.0, min(1.0, mean_valence)) * 3))


def context_bucket(ctx: PlanContext) -> tuple[int, int]:
    stage = ctx.stage if ctx.stage is not None else default_stage(len(ctx.strategy_history))
    return (stage, emotion_bin(ctx))


class MarkovSequenceModel:
    """Add-alpha smoothed conditional counts over bucketed contexts.

    The key is (stage quintile, valence bin, last ``order`` strategies
    of history + consumed prefix); unseen keys fall back to the uniform
    distribution when the total smoothed mass is zero.
    """

    kind = "markov"

    def __init__(self, order: int, alpha: float, l_max: int = 8):
        if order < 0:
            raise EmptyTraining(f"order must be >= 0, got {order}")
        if alpha < 0:
            raise EmptyTraining(f"alpha must be >= 0, got {alpha}")
        self.order = order
        self.alpha = alpha
        self.l_max = l_max
        self.counts: dict[tuple, np.ndarray] = {}

    def key(self, ctx: PlanContext, prefix: Sequence[Strategy]) -> tuple:
        seq = tuple(int(s) for s in ctx.strategy_history) + tuple(int(s) for s in prefix)
        recent = seq[-self.order:] if self.order else ()
        stage, emo = context_bucket(ctx)
        return (stage, emo, recent)

    def observe(self, ctx: PlanContext, prefix: Sequence[Strategy], target: Strategy) -> None:
        key = self.key(ctx, prefix)
        if key not in self.counts:
            self.counts[key] = np.zeros(N_PLANABLE, dtype=np.float64)
        self.counts[key][int(target)] += 1.0

    def next_dist(self, ctx: PlanContext, prefix: Sequence[Strategy]) -> np.ndarray:
        if len(prefix) >= self.l_max:
            raise PrefixTooLong(f"prefix length {len(prefix)} >= l_max {self.l_max}")
        counts = self.counts.get(self.key(ctx, prefix))
        if counts is None:
            counts = np.zeros(N_PLANABLE, dtype=np.float64)
        total = counts.sum() + self.alpha * N_PLANABLE
        if total <= 0.0:
            return np.full(N_PLANABLE, 1.0 / N_PLANABLE)
        return (counts + self.alpha) / total


def train_markov(
    examples: Sequence[PlanningExample], order: int, alpha: float, l_max: int = 8
) -> MarkovSequenceModel:
    """Count next-strategy transitions along every example's target chain."""
    if not examples:
        raise EmptyTraining("no planning examples")
    model = MarkovSequenceModel(order=order, alpha=alpha, l_max=l_max)
    for ex in examples:
        ctx = _training_context(ex)
        prefix: list[Strategy] = []
        for target in ex.target_sequence:
            model.observe(ctx, prefix, target)
            prefix.append(target)
    return model


def _training_context(ex: PlanningExample) -> PlanContext:
    from .user_state import UserStateSequence

    return PlanContext(
        strategy_history=ex.strategy_history,
        window_tokens=ex.window_tokens,
        window_emotion_ids=ex.window_emotion_ids,
        states=UserStateSequence(ex.states or ()),
        stage=ex.stage,
    )


# ----------------------------------------------------------------------
# Neural backend
# ----------------------------------------------------------------------

@dataclass
class NeuralSsgConfig:
    d_emb: int = 64
    heads: int = 4
    layers: int = 2
    l_max: int = 8
    window: int = 128
    max_states: int = 64
    n_emotion_ids: int = 65
    d_state: int = 69
    vocab_size: int = 2000
    oov_emotion_mode: str = "special"  # or "average"
    seed: int = 0

    def validate(self) -> None:
        if self.d_emb % self.heads != 0:
            raise DivergedLoss(f"d_emb {self.d_emb} not divisible by heads {self.heads}")
        if self.oov_emotion_mode not in ("special", "average"):
            raise DivergedLoss(f"unknown oov_emotion_mode {self.oov_emotion_mode!r}")


PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
BOS_ROW = 0  # decoder-input row for the distinguished plan start token


def build_vocab(examples: Iterable[PlanningExample], max_size: int) -> dict[str, int]:
    from collections import Counter

    counter: Counter[str] = Counter()
    for ex in examples:
        counter.update(ex.window_tokens)
    vocab = {PAD_TOKEN: 0, UNK_TOKEN: 1}
    for token, _ in sorted(counter.items(), key=lambda kv: (-kv[1], kv[0])):
        if len(vocab) >= max_size:
            break
        vocab[token] = len(vocab)
    return vocab


class NeuralSequenceModel:
    """Decoder-only planner head over embedded dialogue and state memories.

    Per layer: masked multi-head self-attention over the plan prefix
    (add + norm), cross-attention into the dialogue-token memory and
    the user-state memory, a sigmoid-gated fusion of the two read
    results, and a feed-forward block with residual and layer norm.
    A linear + softmax head yields the next-strategy distribution.
    """

    kind = "neural"

    def __init__(self, config: NeuralSsgConfig, vocab: dict[str, int], store: nn.ParamStore | None = None):
        config.validate()
        self.config = config
        self.vocab = vocab
        self.l_max = config.l_max
        self.store = store if store is not None else self._init_store()
        self._bind()

    def _init_store(self) -> nn.ParamStore:
        c = self.config
        store = nn.ParamStore(seed=c.seed)
        d = c.d_emb
        store.new("emb.strategy", 1 + N_PLANABLE, d)
        store.new("emb.dec_pos", c.l_max, d)
        store.new("emb.word", max(len(self.vocab), 2), d)
        store.new("emb.emotion", c.n_emotion_ids, d)
        store.new("emb.ctx_pos", c.window, d)
        store.new("emb.state_pos", c.max_states, d)
        store.new("proj.state", c.d_state, d)
        store.new("null.ctx", 1, d)
        store.new("null.state", 1, d)
        for layer in range(c.layers):
            p = f"layer{layer}"
            nn.attention_params(store, f"{p}.self", d)
            store.new(f"{p}.ln1.gamma", 1, d, init="ones")
            store.new(f"{p}.ln1.beta", 1, d, init="zeros")
            nn.attention_params(store, f"{p}.cross_h", d)
            nn.attention_params(store, f"{p}.cross_u", d)
            nn.gate_params(store, f"{p}.gate", d)
            store.new(f"{p}.ln2.gamma", 1, d, init="ones")
            store.new(f"{p}.ln2.beta", 1, d, init="zeros")
            nn.ffn_params(store, f"{p}.ffn", d)
        store.new("head.w", d, N_PLANABLE)
        store.new("head.b", 1, N_PLANABLE, init="zeros")
        return store

    def _bind(self) -> None:
        s = self.store
        c = self.config
        self._layers = []
        for layer in range(c.layers):
            p = f"layer{layer}"
            self._layers.append(
                {
                    "self": nn.AttentionParams(*(s[f"{p}.self.{n}"] for n in
                                                 ("wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo"))),
                    "ln1": (s[f"{p}.ln1.gamma"], s[f"{p}.ln1.beta"]),
                    "cross_h": nn.AttentionParams(*(s[f"{p}.cross_h.{n}"] for n in
                                                    ("wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo"))),
                    "cross_u": nn.AttentionParams(*(s[f"{p}.cross_u.{n}"] for n in
                                                    ("wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo"))),
                    "gate": nn.GateParams(s[f"{p}.gate.w"], s[f"{p}.gate.b"]),
                    "ln2": (s[f"{p}.ln2.gamma"], s[f"{p}.ln2.beta"]),
                    "ffn": nn.FfnParams(*(s[f"{p}.ffn.{n}"] for n in
                                          ("w1", "b1", "w2", "b2", "gamma", "beta"))),
                }
            )

    def _emotion_table(self) -> nn.Tensor:
        table = self.store["emb.emotion"]
        if self.config.oov_emotion_mode == "special":
            return table
        # Replace the out-of-lexicon row with the mean of the subspace rows.
        n_sub = self.config.n_emotion_ids - 1
        sub = nn.slice_rows(table, 0, n_sub)
        avg = nn.matmul(nn.Tensor(np.full((1, n_sub), 1.0 / n_sub)), sub)
        return nn.concat_rows([sub, avg])

    def _dialogue_memory(self, ctx: PlanContext) -> nn.Tensor:
        c = self.config
        tokens = list(ctx.window_tokens)[-c.window:]
        if not tokens:
            return self.store["null.ctx"]
        unk = self.vocab[UNK_TOKEN]
        word_ids = [self.vocab.get(t, unk) for t in tokens]
        emo_src = ctx.window_emotion_ids
        if emo_src is None:
            emo_ids = [c.n_emotion_ids - 1] * len(tokens)
        else:
            emo_ids = list(emo_src)[-c.window:]
        words = nn.gather_rows(self.store["emb.word"], word_ids)
        emos = nn.gather_rows(self._emotion_table(), emo_ids)
        pos = nn.gather_rows(self.store["emb.ctx_pos"], list(range(len(tokens))))
        return nn.add(nn.add(words, emos), pos)

    def _state_memory(self, ctx: PlanContext) -> nn.Tensor:
        c = self.config
        states = list(ctx.states)[-c.max_states:]
        if not states:
            return self.store["null.state"]
        mat = np.stack([s.vector for s in states])
        if mat.shape[1] != c.d_state:
            raise Corrupt(f"user-state dim {mat.shape[1]} != model d_state {c.d_state}")
        proj = nn.matmul(nn.Tensor(mat), self.store["proj.state"])
        pos = nn.gather_rows(self.store["emb.state_pos"], list(range(len(states))))
        return nn.add(proj, pos)

    def _decode(self, ctx: PlanContext, prefix: Sequence[Strategy]) -> nn.Tensor:
        """Logit rows for each decoding position (len(prefix) + 1 rows)."""
        if len(prefix) >= self.l_max:
            raise PrefixTooLong(f"prefix length {len(prefix)} >= l_max {self.l_max}")
        c = self.config
        dec_ids = [BOS_ROW] + [1 + int(s) for s in prefix]
        x = nn.add(
            nn.gather_rows(self.store["emb.strategy"], dec_ids),
            nn.gather_rows(self.store["emb.dec_pos"], list(range(len(dec_ids)))),
        )
        h_mem = self._dialogue_memory(ctx)
        u_mem = self._state_memory(ctx)
        for layer in self._layers:
            attended = nn.masked_self_attention(x, c.heads, layer["self"])
            x = nn.layer_norm(nn.add(x, attended), *layer["ln1"])
            h_hat = nn.mh_attention(x, h_mem, h_mem, c.heads, layer["cross_h"])
            u_hat = nn.mh_attention(x, u_mem, u_mem, c.heads, layer["cross_u"])
            fused = nn.gate_fusion(h_hat, u_hat, layer["gate"])
            x = nn.layer_norm(nn.add(x, fused), *layer["ln2"])
            x = nn.ffn_block(x, layer["ffn"])
        return nn.linear(x, self.store["head.w"], self.store["head.b"])

    def next_dist(self, ctx: PlanContext, prefix: Sequence[Strategy]) -> np.ndarray:
        logits = self._decode(ctx, prefix)
        row = logits.data[-1]
        shifted = row - row.max()
        e = np.exp(shifted)
        return e / e.sum()

    def example_nll(self, ex: PlanningExample) -> nn.Tensor:
        """Mean negative log-likelihood over one example's target steps."""
        ctx = _training_context(ex)
        target = list(ex.target_sequence)[: self.l_max]
        logits = self._decode(ctx, target[:-1])
        logp = nn.log_softmax_rows(logits)
        picks = []
        for row, s in enumerate(target):
            picks.append(nn.slice_cols(nn.slice_rows(logp, row, row + 1), int(s), int(s) + 1))
        stacked = nn.concat_cols(picks) if len(picks) > 1 else picks[0]
        return nn.scale(nn.mean_all(stacked), -1.0)


def train_neural_ssg(
    examples: Sequence[PlanningExample],
    config: NeuralSsgConfig,
    epochs: int,
    lr: float = 1e-2,
    batch_size: int = 16,
    weight_decay: float = 0.0,
) -> tuple[NeuralSequenceModel, list[tuple[int, float]]]:
    """Train the neural backend; returns (model, per-epoch mean NLL log).

    Epoch 0 in the log is the pre-training loss under the random
    initialization.
    """
    if not examples:
        raise EmptyTraining("no planning examples")
    vocab = build_vocab(examples, config.vocab_size)
    model = NeuralSequenceModel(config, vocab)
    opt = nn.AdamW(model.store, lr=lr, weight_decay=weight_decay)
    rng = np.random.default_rng(config.seed)

    def epoch_nll() -> float:
        return float(np.mean([model.example_nll(ex).item() for ex in examples]))

    log: list[tuple[int, float]] = [(0, epoch_nll())]
    order = np.arange(len(examples))
    for epoch in range(1, epochs + 1):
        rng.shuffle(order)
        losses = []
        for start in range(0, len(order), batch_size):
            batch = [examples[i] for i in order[start:start + batch_size]]
            model.store.zero_grad()
            terms = [model.example_nll(ex) for ex in batch]
            loss = nn.scale(_sum_tensors(terms), 1.0 / len(terms))
            value = loss.item()
            if not math.isfinite(value):
                raise DivergedLoss(f"NLL became {value} at epoch {epoch}")
            losses.append(value)
            nn.backward(loss)
            opt.step()
        log.append((epoch, float(np.mean(losses))))
    return model, log


def _sum_tensors(terms: list[nn.Tensor]) -> nn.Tensor:
    total = terms[0]
    for t in terms[1:]:
        total = nn.add(total, t)
    return total


# ----------------------------------------------------------------------
# Checkpoints
# ----------------------------------------------------------------------

def save(model) -> bytes:
    """Serialize either backend to versioned JSON bytes."""
    if isinstance(model, MarkovSequenceModel):
        body = {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "family": "seqmodel",
            "kind": "markov",
            "order": model.order,
            "alpha": model.alpha,
            "l_max": model.l_max,
            "counts": [
                {"stage": k[0], "emo": k[1], "prefix": list(k[2]), "counts": list(v)}
                for k, v in sorted(model.counts.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2]))
            ],
        }
    elif isinstance(model, NeuralSequenceModel):
        body = {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "family": "seqmodel",
            "kind": "neural",
            "config": model.config.__dict__,
            "vocab": model.vocab,
            "params": model.store.to_payload(),
        }
    else:
        raise Corrupt(f"cannot serialize model of type {type(model).__name__}")
    return json.dumps(body, sort_keys=True, separators=(",", ":")).encode("utf-8")


def load(blob: bytes):
    try:
        body = json.loads(blob.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise Corrupt(f"unreadable checkpoint: {e}") from e
    if not isinstance(body, dict) or body.get("format") != CHECKPOINT_FORMAT:
        raise Corrupt("not a model checkpoint")
    if body.get("version") != CHECKPOINT_VERSION:
        raise VersionMismatch(f"checkpoint version {body.get('version')!r}")
    if body.get("family") != "seqmodel":
        raise Corrupt(f"checkpoint family {body.get('family')!r} is not a sequence model")
    kind = body.get("kind")
    if kind == "markov":
        model = MarkovSequenceModel(order=body["order"], alpha=body["alpha"], l_max=body["l_max"])
        for entry in body["counts"]:
            key = (entry["stage"], entry["emo"], tuple(entry["prefix"]))
            model.counts[key] = np.asarray(entry["counts"], dtype=np.float64)
        return model
    if kind == "neural":
        config = NeuralSsgConfig(**body["config"])
        store = nn.ParamStore.from_payload(body["params"], seed=config.seed)
        return NeuralSequenceModel(config, body["vocab"], store=store)
    raise Corrupt(f"unknown model kind {kind!r}")
