"""User-feedback prediction: f(strategy sequence, user states) in [1, 5].

Two backends: a closed-form ridge regression over unigram/bigram
sequence indicators plus the latest user state, and a neural model
that encodes the strategy sequence with self-attention, runs the user
states through an LSTM, reads them with bilinear attention from the
[CLS] position, and applies a scalar head.  Predictions are clamped
to the Likert range at inference; training targets stay raw.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import nn
from .corpus import FeedbackExample
from .errors import (
    Corrupt,
    DivergedLoss,
    EmptySequence,
    EmptyTraining,
    SequenceTooLong,
    VersionMismatch,
)
from .strategies import N_PLANABLE, PLANABLE, Strategy

CHECKPOINT_FORMAT = "foresight-model"
CHECKPOINT_VERSION = 1

FEEDBACK_MIN = 1.0
FEEDBACK_MAX = 5.0


def clamp_score(value: float) -> float:
    return float(min(FEEDBACK_MAX, max(FEEDBACK_MIN, value)))


def _latest_state_vector(states, d_state: int) -> np.ndarray:
    seq = list(states) if states is not None else []
    if not seq:
        return np.zeros(d_state)
    vec = np.asarray(seq[-1].vector, dtype=np.float64)
    if vec.shape[0] != d_state:
        raise Corrupt(f"user-state dim {vec.shape[0]} != model d_state {d_state}")
    return vec


def featurize_sequence(seq: Sequence[Strategy], states, d_state: int) -> np.ndarray:
    """Unigram/bigram presence indicators, length, and the latest state."""
    if not seq:
        raise EmptySequence("cannot featurize an empty strategy sequence")
    uni = np.zeros(N_PLANABLE)
    bi = np.zeros(N_PLANABLE * N_PLANABLE)
    for s in seq:
        uni[int(s)] = 1.0
    for a, b in zip(seq, seq[1:]):
        bi[int(a) * N_PLANABLE + int(b)] = 1.0
    return np.concatenate([uni, bi, [float(len(seq))], _latest_state_vector(states, d_state)])


def feature_dim(d_state: int) -> int:
    return N_PLANABLE + N_PLANABLE * N_PLANABLE + 1 + d_state


class LinearFeedbackModel:
    """Ridge-regressed linear scorer; the intercept is the last weight."""

    kind = "linear"

    def __init__(self, weights: np.ndarray, d_state: int, l_max: int):
        self.weights = np.asarray(weights, dtype=np.float64)
        self.d_state = d_state
        self.l_max = l_max
        if self.weights.shape != (feature_dim(d_state) + 1,):
            raise Corrupt(
                f"weight vector length {self.weights.shape} != {feature_dim(d_state) + 1}"
            )

    def raw_score(self, seq: Sequence[Strategy], states) -> float:
        phi = featurize_sequence(seq, states, self.d_state)
        return float(phi @ self.weights[:-1] + self.weights[-1])


def predict(model, seq: Sequence[Strategy], states) -> float:
    """Clamped feedback prediction for a 1..l_max strategy sequence."""
    if not seq:
        raise EmptySequence("prediction needs at least one strategy")
    if len(seq) > model.l_max:
        raise SequenceTooLong(f"sequence length {len(seq)} > l_max {model.l_max}")
    return clamp_score(model.raw_score(seq, states))


def _example_states(ex: FeedbackExample):
    return ex.states or ()


def train_linear(
    examples: Sequence[FeedbackExample],
    ridge: float = 1e-8,
    l_max: int = 8,
    d_state: int | None = None,
) -> LinearFeedbackModel:
    """Closed-form ridge solution of the MSE objective.

    The design matrix is the sequence featurization plus an intercept
    column; the solution satisfies the regularized normal equations.
    """
    if not examples:
        raise EmptyTraining("no feedback examples")
    if d_state is None:
        d_state = 0
        for ex in examples:
            if ex.states:
                d_state = ex.states[-1].vector.shape[0]
                break
    rows = []
    targets = []
    for ex in examples:
        phi = featurize_sequence(ex.strategy_sequence, _example_states(ex), d_state)
        rows.append(np.concatenate([phi, [1.0]]))
        targets.append(ex.score)
    phi_mat = np.stack(rows)
    y = np.asarray(targets)
    gram = phi_mat.T @ phi_mat + ridge * np.eye(phi_mat.shape[1])
    weights = np.linalg.solve(gram, phi_mat.T @ y)
    return LinearFeedbackModel(weights, d_state=d_state, l_max=l_max)


# ----------------------------------------------------------------------
# Neural backend
# ----------------------------------------------------------------------

@dataclass
class NeuralUfpConfig:
    d_emb: int = 32
    heads: int = 4
    layers: int = 1
    l_max: int = 8
    d_state: int = 69
    seed: int = 0

    def validate(self) -> None:
        if self.d_emb % self.heads != 0:
            raise DivergedLoss(f"d_emb {self.d_emb} not divisible by heads {self.heads}")


class NeuralFeedbackModel:
    """Sequence encoder + state LSTM + bilinear read + scalar head.

    When no user states are available the LSTM runs over a single
    zero-vector placeholder row so the read side stays well-defined.
    """

    kind = "neural"

    def __init__(self, config: NeuralUfpConfig, store: nn.ParamStore | None = None):
        config.validate()
        self.config = config
        self.l_max = config.l_max
        self.d_state = config.d_state
        self.store = store if store is not None else self._init_store()
        self._bind()

    def _init_store(self) -> nn.ParamStore:
        c = self.config
        store = nn.ParamStore(seed=c.seed)
        d = c.d_emb
        store.new("emb.cls", 1, d)
        store.new("emb.strategy", N_PLANABLE, d)
        store.new("emb.pos", c.l_max + 1, d)
        for layer in range(c.layers):
            p = f"layer{layer}"
            nn.attention_params(store, f"{p}.self", d)
            store.new(f"{p}.ln1.gamma", 1, d, init="ones")
            store.new(f"{p}.ln1.beta", 1, d, init="zeros")
            nn.ffn_params(store, f"{p}.ffn", d)
        nn.lstm_params(store, "lstm", c.d_state, d)
        store.new("attn.wa", d, d)
        store.new("head.w", d, 1)
        store.new("head.b", 1, 1, init="zeros")
        return store

    def _bind(self) -> None:
        s = self.store
        self._layers = []
        for layer in range(self.config.layers):
            p = f"layer{layer}"
            self._layers.append(
                {
                    "self": nn.AttentionParams(*(s[f"{p}.self.{n}"] for n in
                                                 ("wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo"))),
                    "ln1": (s[f"{p}.ln1.gamma"], s[f"{p}.ln1.beta"]),
                    "ffn": nn.FfnParams(*(s[f"{p}.ffn.{n}"] for n in
                                          ("w1", "b1", "w2", "b2", "gamma", "beta"))),
                }
            )
        self._lstm = nn.LstmParams(s["lstm.wx"], s["lstm.wh"], s["lstm.b"])

    def _forward(self, seq: Sequence[Strategy], states) -> nn.Tensor:
        if not seq:
            raise EmptySequence("cannot score an empty strategy sequence")
        c = self.config
        ids = [int(s) for s in seq][: c.l_max]
        x = nn.concat_rows([self.store["emb.cls"], nn.gather_rows(self.store["emb.strategy"], ids)])
        x = nn.add(x, nn.gather_rows(self.store["emb.pos"], list(range(len(ids) + 1))))
        for layer in self._layers:
            attended = nn.mh_attention(x, x, x, c.heads, layer["self"])
            x = nn.layer_norm(nn.add(x, attended), *layer["ln1"])
            x = nn.ffn_block(x, layer["ffn"])
        q = nn.slice_rows(x, 0, 1)

        seq_states = list(states) if states is not None else []
        if seq_states:
            mat = np.stack([s.vector for s in seq_states])
            if mat.shape[1] != c.d_state:
                raise Corrupt(f"user-state dim {mat.shape[1]} != model d_state {c.d_state}")
        else:
            mat = np.zeros((1, c.d_state))
        hidden = nn.lstm_forward(nn.Tensor(mat), self._lstm)
        _, context = nn.luong_attention(q, hidden, self.store["attn.wa"])
        return nn.linear(context, self.store["head.w"], self.store["head.b"])

    def raw_score(self, seq: Sequence[Strategy], states) -> float:
        return self._forward(seq, states).item()

    def example_loss(self, ex: FeedbackExample) -> nn.Tensor:
        out = self._forward(ex.strategy_sequence, _example_states(ex))
        diff = nn.add_const(out, -ex.score)
        return nn.mul(diff, diff)


def train_neural(
    examples: Sequence[FeedbackExample],
    config: NeuralUfpConfig,
    epochs: int,
    lr: float = 1e-2,
    batch_size: int = 16,
    weight_decay: float = 0.0,
) -> tuple[NeuralFeedbackModel, list[tuple[int, float]]]:
    """Train the neural backend on MSE; returns (model, per-epoch log)."""
    if not examples:
        raise EmptyTraining("no feedback examples")
    for ex in examples:
        if len(ex.strategy_sequence) > config.l_max:
            raise SequenceTooLong(
                f"training sequence length {len(ex.strategy_sequence)} > l_max {config.l_max}"
            )
    model = NeuralFeedbackModel(config)
    opt = nn.AdamW(model.store, lr=lr, weight_decay=weight_decay)
    rng = np.random.default_rng(config.seed)

    def epoch_mse() -> float:
        return float(np.mean([model.example_loss(ex).item() for ex in examples]))

    log: list[tuple[int, float]] = [(0, epoch_mse())]
    order = np.arange(len(examples))
    for epoch in range(1, epochs + 1):
        rng.shuffle(order)
        losses = []
        for start in range(0, len(order), batch_size):
            batch = [examples[i] for i in order[start:start + batch_size]]
            model.store.zero_grad()
            terms = [model.example_loss(ex) for ex in batch]
            loss = terms[0]
            for t in terms[1:]:
                loss = nn.add(loss, t)
            loss = nn.scale(loss, 1.0 / len(terms))
            value = loss.item()
            if not math.isfinite(value):
                raise DivergedLoss(f"MSE became {value} at epoch {epoch}")
            losses.append(value)
            nn.backward(loss)
            opt.step()
        log.append((epoch, float(np.mean(losses))))
    return model, log


# ----------------------------------------------------------------------
# Training-data augmentation
# ----------------------------------------------------------------------

def augment(
    examples: Sequence[FeedbackExample], count: int, seed: int, l_max: int = 8
) -> list[FeedbackExample]:
    """Append ``count`` random low-feedback sequences (score 1).

    Each synthetic sequence draws strategies uniformly, a length
    uniform in 1..l_max, and borrows the user-state prefix of a real
    example so augmented rows are not separable by a missing-states cue.
    """
    out = list(examples)
    if count <= 0:
        return out
    rng = np.random.default_rng(seed)
    donors = [ex for ex in examples if not ex.is_augmented]
    for i in range(count):
        length = int(rng.integers(1, l_max + 1))
        seq = tuple(PLANABLE[int(rng.integers(0, N_PLANABLE))] for _ in range(length))
        if donors:
            donor = donors[int(rng.integers(0, len(donors)))]
            state_rounds, states = donor.user_state_rounds, donor.states
        else:
            state_rounds, states = (), ()
        out.append(
            FeedbackExample(
                dialogue_id=f"augmented-{i:05d}",
                strategy_sequence=seq,
                user_state_rounds=state_rounds,
                score=1.0,
                is_augmented=True,
                states=states,
            )
        )
    return out


# ----------------------------------------------------------------------
# Checkpoints
# ----------------------------------------------------------------------

def save(model) -> bytes:
    if isinstance(model, LinearFeedbackModel):
        body = {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "family": "feedback",
            "kind": "linear",
            "weights": [float(w) for w in model.weights],
            "d_state": model.d_state,
            "l_max": model.l_max,
        }
    elif isinstance(model, NeuralFeedbackModel):
        body = {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "family": "feedback",
            "kind": "neural",
            "config": model.config.__dict__,
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
    if body.get("family") != "feedback":
        raise Corrupt(f"checkpoint family {body.get('family')!r} is not a feedback model")
    kind = body.get("kind")
    if kind == "linear":
        return LinearFeedbackModel(
            np.asarray(body["weights"], dtype=np.float64),
            d_state=body["d_state"],
            l_max=body["l_max"],
        )
    if kind == "neural":
        config = NeuralUfpConfig(**body["config"])
        store = nn.ParamStore.from_payload(body["params"], seed=config.seed)
        return NeuralFeedbackModel(config, store=store)
    raise Corrupt(f"unknown feedback model kind {kind!r}")
