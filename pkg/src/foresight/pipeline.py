"""Command-level orchestration shared by the CLI and the service.

Every command is deterministic given its configuration (seeded
splitting, training, and augmentation) and stamps its JSON artifacts
with the configuration fingerprint.
"""

from __future__ import annotations

import json
import os
from typing import Sequence

import numpy as np

from . import corpus as corpus_mod
from . import evaluation as eval_mod
from . import feedback as feedback_mod
from . import seqmodel as seqmodel_mod
from .config import RunConfig
from .corpus import Dialogue, PlanContext
from .errors import ConfigError, EmptyDecisions
from .lexicon import VadLexicon
from .planner import PlannerConfig, audit_record, select_strategy
from .strategies import REFERENCE_STRATEGY_DISTRIBUTION, Strategy
from .user_state import UserStateSequence, dialogue_states, state_dim


def _require(cfg: RunConfig, *names: str) -> None:
    for name in names:
        if getattr(cfg, name) in (None, ""):
            raise ConfigError(f"configuration field {name!r} is required for this command")


def _dump_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n")


def _open_bytes(path: str, what: str) -> bytes:
    try:
        with open(path, "rb") as f:
            return f.read()
    except OSError as e:
        raise ConfigError(f"cannot read {what} at {path}: {e}") from e


def load_lexicon(cfg: RunConfig) -> VadLexicon:
    _require(cfg, "lexicon")
    from .lexicon import load_vad

    return load_vad(_open_bytes(cfg.lexicon, "lexicon"), n_v=cfg.n_v, n_a=cfg.n_a)


def planner_config(cfg: RunConfig) -> PlannerConfig:
    return PlannerConfig(lambda_=cfg.lambda_, L=cfg.L, k=cfg.k, renormalize_topk=cfg.renormalize)


# ----------------------------------------------------------------------
# ingest
# ----------------------------------------------------------------------

def ingest(cfg: RunConfig) -> dict:
    """Parse the corpus, split it, and write example files plus a report."""
    _require(cfg, "corpus", "lexicon")
    lexicon = load_lexicon(cfg)
    dialogues = corpus_mod.parse_esconv(_open_bytes(cfg.corpus, "corpus"))

    counts = corpus_mod.strategy_distribution(dialogues)
    total = sum(counts.values()) or 1
    distribution = {
        s.name: {
            "count": counts[s],
            "proportion": counts[s] / total,
            "reference_proportion": REFERENCE_STRATEGY_DISTRIBUTION[s] / 100.0,
        }
        for s in Strategy
    }

    splits = corpus_mod.split_corpus(dialogues, seed=cfg.seed)
    os.makedirs(cfg.out, exist_ok=True)
    fingerprint = cfg.fingerprint()

    planning, planning_splits = [], []
    fb, fb_splits = [], []
    for split_name in ("train", "validation", "test"):
        for d in splits[split_name]:
            for ex in corpus_mod.make_planning_examples(d, cfg.L, window=cfg.window):
                planning.append(ex)
                planning_splits.append(split_name)
            for ex in corpus_mod.make_feedback_examples(d, cfg.L):
                fb.append(ex)
                fb_splits.append(split_name)
    planning = corpus_mod.resolve_states(planning, dialogues, lexicon)
    fb = corpus_mod.resolve_states(fb, dialogues, lexicon)

    corpus_mod.write_planning_examples(
        os.path.join(cfg.out, "planning.jsonl"), planning, fingerprint, planning_splits
    )
    corpus_mod.write_feedback_examples(
        os.path.join(cfg.out, "feedback.jsonl"), fb, fingerprint, fb_splits
    )
    _dump_json(
        os.path.join(cfg.out, "splits.json"),
        {
            "fingerprint": fingerprint,
            "seed": cfg.seed,
            "splits": {name: [d.id for d in ds] for name, ds in splits.items()},
        },
    )
    report = {
        "fingerprint": fingerprint,
        "n_dialogues": len(dialogues),
        "split_sizes": {name: len(ds) for name, ds in splits.items()},
        "n_planning_examples": len(planning),
        "n_feedback_examples": len(fb),
        "strategy_distribution": distribution,
        "state_dim": state_dim(lexicon),
    }
    _dump_json(os.path.join(cfg.out, "report.json"), report)
    return report


# ----------------------------------------------------------------------
# training
# ----------------------------------------------------------------------

def _write_log_csv(path: str, header: str, log: Sequence[tuple[int, float]]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"epoch,{header}\n")
        for epoch, value in log:
            f.write(f"{epoch},{value!r}\n")


def train_ssg(cfg: RunConfig) -> dict:
    """Train the configured sequence-model backend from ingested files."""
    path = os.path.join(cfg.out, "planning.jsonl")
    examples = _read_examples(path, corpus_mod.read_planning_examples, "train")
    if cfg.ssg_backend == "markov":
        model = seqmodel_mod.train_markov(
            examples, order=cfg.markov_order, alpha=cfg.markov_alpha, l_max=cfg.l_max
        )
        final_loss = _markov_train_nll(model, examples)
        log = []
    else:
        lexicon = load_lexicon(cfg)
        config = seqmodel_mod.NeuralSsgConfig(
            d_emb=cfg.d_emb,
            heads=cfg.heads,
            layers=cfg.layers,
            l_max=cfg.l_max,
            window=cfg.window,
            max_states=cfg.max_states,
            n_emotion_ids=lexicon.n_ids,
            d_state=state_dim(lexicon),
            vocab_size=cfg.vocab_size,
            oov_emotion_mode=cfg.oov_emotion_mode,
            seed=cfg.seed + 1,
        )
        model, log = seqmodel_mod.train_neural_ssg(
            examples,
            config,
            epochs=cfg.epochs,
            lr=cfg.lr,
            batch_size=cfg.batch_size,
            weight_decay=cfg.weight_decay,
        )
        final_loss = log[-1][1]
        _write_log_csv(os.path.join(cfg.out, "ssg_train_log.csv"), "nll", log)

    blob = seqmodel_mod.save(model)
    with open(os.path.join(cfg.out, "ssg.json"), "wb") as f:
        f.write(blob)
    return {
        "kind": model.kind,
        "final_loss": final_loss,
        "n_examples": len(examples),
        "checksum": eval_mod.model_checksum(blob),
        "fingerprint": cfg.fingerprint(),
    }


def _markov_train_nll(model, examples) -> float:
    import math

    total, steps = 0.0, 0
    for ex in examples:
        ctx = ex.context()
        prefix: list[Strategy] = []
        for target in ex.target_sequence:
            probs = model.next_dist(ctx, prefix)
            total -= seqmodel_mod.log_guard(float(probs[int(target)]))
            prefix.append(target)
            steps += 1
    return total / steps if steps else math.nan


def train_ufp(cfg: RunConfig) -> dict:
    """Train the configured feedback backend, with optional augmentation."""
    path = os.path.join(cfg.out, "feedback.jsonl")
    examples = _read_examples(path, corpus_mod.read_feedback_examples, "train")
    examples = feedback_mod.augment(examples, cfg.augment_count, seed=cfg.seed + 3, l_max=cfg.l_max)
    n_augmented = sum(1 for ex in examples if ex.is_augmented)

    if cfg.ufp_backend == "linear":
        model = feedback_mod.train_linear(examples, ridge=cfg.ridge, l_max=cfg.l_max)
        residuals = [
            model.raw_score(ex.strategy_sequence, ex.states or ()) - ex.score for ex in examples
        ]
        final_loss = float(np.mean(np.square(residuals)))
        log = []
    else:
        d_state = 0
        for ex in examples:
            if ex.states:
                d_state = ex.states[-1].vector.shape[0]
                break
        config = feedback_mod.NeuralUfpConfig(
            d_emb=cfg.d_emb,
            heads=cfg.heads,
            layers=max(1, cfg.layers - 1),
            l_max=cfg.l_max,
            d_state=d_state,
            seed=cfg.seed + 2,
        )
        model, log = feedback_mod.train_neural(
            examples,
            config,
            epochs=cfg.epochs,
            lr=cfg.lr,
            batch_size=cfg.batch_size,
            weight_decay=cfg.weight_decay,
        )
        final_loss = log[-1][1]
        _write_log_csv(os.path.join(cfg.out, "ufp_train_log.csv"), "mse", log)

    blob = feedback_mod.save(model)
    with open(os.path.join(cfg.out, "ufp.json"), "wb") as f:
        f.write(blob)
    return {
        "kind": model.kind,
        "final_loss": final_loss,
        "n_examples": len(examples),
        "augmented": n_augmented,
        "checksum": eval_mod.model_checksum(blob),
        "fingerprint": cfg.fingerprint(),
    }


def _read_examples(path: str, reader, split: str):
    try:
        return reader(path, split=split)
    except OSError as e:
        raise ConfigError(f"cannot read example file {path}: {e} (run ingest first)") from e


def load_models(cfg: RunConfig):
    ssg = seqmodel_mod.load(_open_bytes(os.path.join(cfg.out, "ssg.json"), "ssg checkpoint"))
    ufp = feedback_mod.load(_open_bytes(os.path.join(cfg.out, "ufp.json"), "ufp checkpoint"))
    return ssg, ufp


# ----------------------------------------------------------------------
# plan
# ----------------------------------------------------------------------

def dialogue_from_turn_payload(turns: Sequence[dict]) -> Dialogue:
    """Build a Dialogue from service/CLI turn payloads."""
    doc = [{"dialog_id": "context", "dialog": [
        {
            "speaker": t["speaker"],
            "content": t.get("text", ""),
            "annotation": {
                k: v
                for k, v in (("strategy", t.get("strategy")), ("feedback", t.get("feedback")))
                if v is not None
            },
            **({"cause": t["cause"]} if t.get("cause") else {}),
        }
        for t in turns
    ]}]
    return corpus_mod.parse_esconv(json.dumps(doc))[0]


def context_from_dialogue(dialogue: Dialogue, lexicon: VadLexicon, window: int) -> PlanContext:
    """Plan context for the round following the given turns."""
    rnds = corpus_mod.rounds(dialogue)
    t = len(rnds) + 1
    states = dialogue_states(dialogue, lexicon)
    history = tuple(
        r.supporter.strategy for r in rnds if r.supporter is not None and r.supporter.strategy is not None
    )
    tokens: list[str] = []
    for r in rnds:
        if r.supporter is not None:
            if r.supporter.strategy is not None:
                tokens.append(corpus_mod.strategy_marker(r.supporter.strategy))
            tokens.extend(r.supporter.text)
        if r.seeker is not None:
            tokens.extend(r.seeker.text)
    window_tokens = tuple(tokens[-window:])
    return PlanContext(
        strategy_history=history,
        window_tokens=window_tokens,
        states=UserStateSequence(states[: t - 1]),
        stage=None,
        window_emotion_ids=tuple(lexicon.emotion_ids(window_tokens)),
    )


def plan(cfg: RunConfig, turns: Sequence[dict], overrides: PlannerConfig | None = None) -> dict:
    """Score all candidates for the next round and dump the audit record."""
    lexicon = load_lexicon(cfg)
    ssg, ufp = load_models(cfg)
    dialogue = dialogue_from_turn_payload(turns) if turns else None
    if dialogue is None:
        ctx = PlanContext(
            strategy_history=(),
            window_tokens=(),
            states=UserStateSequence(()),
            window_emotion_ids=(),
        )
    else:
        ctx = context_from_dialogue(dialogue, lexicon, cfg.window)
    config = overrides or planner_config(cfg)
    chosen, scores = select_strategy(ssg, ufp, ctx, config)
    record = audit_record(chosen, scores)
    record["fingerprint"] = cfg.fingerprint()
    return record


# ----------------------------------------------------------------------
# eval and sweep
# ----------------------------------------------------------------------

def _load_metric_ufp(cfg: RunConfig, default):
    if cfg.metric_ufp:
        return feedback_mod.load(_open_bytes(cfg.metric_ufp, "metric ufp checkpoint"))
    return default


def evaluate(cfg: RunConfig) -> dict:
    path = os.path.join(cfg.out, "planning.jsonl")
    examples = _read_examples(path, corpus_mod.read_planning_examples, "test")
    if not examples:
        raise EmptyDecisions("test split has no planning examples")
    ssg, ufp = load_models(cfg)
    metric_ufp = _load_metric_ufp(cfg, ufp)
    metrics = eval_mod.run_eval(
        ssg,
        ufp,
        examples,
        planner_config(cfg),
        eval_mod.EvalConfig(feedback_mode=cfg.feedback_mode),
        metric_ufp=metric_ufp,
    )
    payload_extra = {
        "fingerprint": cfg.fingerprint(),
        "n_decisions": len(examples),
        "ufp_checksum": eval_mod.ufp_checksum(ufp),
        "metric_ufp_checksum": eval_mod.ufp_checksum(metric_ufp),
    }
    text = eval_mod.metrics_json(metrics, payload_extra)
    with open(os.path.join(cfg.out, "metrics.json"), "w", encoding="utf-8") as f:
        f.write(text)
    payload = metrics.to_payload()
    payload.update(payload_extra)
    return payload


def run_sweep(cfg: RunConfig) -> str:
    path = os.path.join(cfg.out, "planning.jsonl")
    examples = _read_examples(path, corpus_mod.read_planning_examples, "test")
    if not examples:
        raise EmptyDecisions("test split has no planning examples")
    ssg, ufp = load_models(cfg)
    metric_ufp = _load_metric_ufp(cfg, ufp)
    result = eval_mod.sweep(
        cfg.sweep_axis,
        list(cfg.sweep_values),
        planner_config(cfg),
        ssg,
        ufp,
        examples,
        eval_mod.EvalConfig(feedback_mode=cfg.feedback_mode),
        metric_ufp=metric_ufp,
    )
    text = eval_mod.sweep_csv(result)
    with open(os.path.join(cfg.out, "sweep.csv"), "w", encoding="utf-8") as f:
        f.write(text)
    _dump_json(
        os.path.join(cfg.out, "sweep_meta.json"),
        {
            "fingerprint": cfg.fingerprint(),
            "axis": cfg.sweep_axis,
            "values": list(cfg.sweep_values),
            "ufp_checksum": eval_mod.ufp_checksum(ufp),
            "metric_ufp_checksum": eval_mod.ufp_checksum(metric_ufp),
        },
    )
    return text


# ----------------------------------------------------------------------
# lexicon inspection
# ----------------------------------------------------------------------

def inspect_lexicon(cfg: RunConfig, text_path: str) -> list[str]:
    """Histogram of emotion ids over a text file, one line per bin."""
    lexicon = load_lexicon(cfg)
    tokens = corpus_mod.tokenize(_open_bytes(text_path, "text file").decode("utf-8"))
    hist = lexicon.histogram(tokens)
    lines = [f"tokens: {len(tokens)}  bins: {lexicon.n_ids}  special_id: {lexicon.special_id}"]
    for i, count in enumerate(hist):
        tag = " (out-of-lexicon)" if i == lexicon.special_id else ""
        lines.append(f"bin {i:3d}{tag}: {int(count)}")
    return lines
