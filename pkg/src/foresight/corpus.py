"""ESConv-style corpus parsing and training-example construction.

A dialogue is a sequence of supporter/seeker turns.  After
normalization, turns alternate and group into rounds: round ``i`` holds
a supporter utterance and the seeker's reply (either may be empty at
the dialogue boundaries).  Planning examples pair a context (strategy
history, text window, user-state rounds) with the next up-to-``L``
planable strategies; feedback examples pair a recent strategy window
with the seeker's Likert score.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Sequence

from .errors import (
    Corrupt,
    EmptyCorpus,
    MalformedJson,
    SchemaViolation,
    TooFewDialogues,
    VersionMismatch,
)
from .lexicon import VadLexicon
from .strategies import PLANABLE, Strategy, adapt_strategy
from .user_state import UserState, UserStateSequence, dialogue_states

EXAMPLE_FORMAT = "foresight-examples"
EXAMPLE_VERSION = 1

#: Default cap on the dialogue text window carried by a plan context.
DEFAULT_WINDOW = 128

_TOKEN_RE = re.compile(r"[\w']+|[^\w\s]")


def tokenize(text: str) -> list[str]:
    """Lowercased whitespace+punctuation tokenization."""
    return _TOKEN_RE.findall(text.casefold())


class Speaker(str, Enum):
    SEEKER = "seeker"
    SUPPORTER = "supporter"


_SPEAKER_ALIASES = {
    "seeker": Speaker.SEEKER,
    "usr": Speaker.SEEKER,
    "user": Speaker.SEEKER,
    "supporter": Speaker.SUPPORTER,
    "sys": Speaker.SUPPORTER,
    "system": Speaker.SUPPORTER,
}


@dataclass(frozen=True)
class Turn:
    speaker: Speaker
    text: tuple[str, ...]
    raw_strategy: str | None = None
    strategy: Strategy | None = None
    feedback: int | None = None
    cause_span: tuple[str, ...] | None = None


@dataclass(frozen=True)
class Dialogue:
    id: str
    turns: tuple[Turn, ...]

    def __post_init__(self):
        if not self.turns:
            raise SchemaViolation(f"dialogue {self.id!r} has no turns")


@dataclass(frozen=True)
class Round:
    """One supporter/seeker exchange; either side may be absent."""

    index: int  # 1-based
    supporter: Turn | None
    seeker: Turn | None


@dataclass(frozen=True, eq=False)
class PlanContext:
    """Model-facing view of a decision point.

    ``strategy_history`` includes OTHER as a distinguished history
    token; ``window_tokens`` is the trailing dialogue text (supporter
    turns prefixed with an atomic strategy-marker token); ``stage`` is
    the conversation-stage quintile when known.  ``window_emotion_ids``
    aligns one emotion-subspace id with each window token once a
    lexicon has been applied.
    """

    strategy_history: tuple[Strategy, ...]
    window_tokens: tuple[str, ...]
    states: UserStateSequence
    stage: int | None = None
    window_emotion_ids: tuple[int, ...] | None = None


@dataclass(frozen=True, eq=False)
class PlanningExample:
    dialogue_id: str
    round_index: int
    stage: int
    strategy_history: tuple[Strategy, ...]
    window_tokens: tuple[str, ...]
    user_state_rounds: tuple[int, ...]
    target_sequence: tuple[Strategy, ...]
    states: tuple[UserState, ...] | None = None
    window_emotion_ids: tuple[int, ...] | None = None

    def context(self) -> PlanContext:
        if self.states is None:
            raise SchemaViolation(
                f"planning example {self.dialogue_id}:{self.round_index} has unresolved states"
            )
        return PlanContext(
            strategy_history=self.strategy_history,
            window_tokens=self.window_tokens,
            states=UserStateSequence(self.states),
            stage=self.stage,
            window_emotion_ids=self.window_emotion_ids,
        )


@dataclass(frozen=True, eq=False)
class FeedbackExample:
    dialogue_id: str
    strategy_sequence: tuple[Strategy, ...]
    user_state_rounds: tuple[int, ...]
    score: float
    is_augmented: bool = False
    states: tuple[UserState, ...] | None = None


# ----------------------------------------------------------------------
# Parsing
# ----------------------------------------------------------------------

def parse_esconv(data: bytes | str) -> list[Dialogue]:
    """Parse an ESConv-style JSON document into dialogues.

    Expects a JSON array of objects with a ``dialog`` list of turns
    ``{speaker, content, annotation: {strategy?, feedback?}, cause?}``.
    Unknown fields are ignored; raw strategy strings are preserved and
    adapted to the canonical alphabet per turn.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as e:
        raise MalformedJson(e.msg, offset=e.pos) from e
    if not isinstance(doc, list):
        raise SchemaViolation("top-level JSON value must be an array of dialogues")
    if not doc:
        raise EmptyCorpus("document contains no dialogues")

    dialogues = []
    for i, obj in enumerate(doc):
        if not isinstance(obj, dict):
            raise SchemaViolation(f"dialogue #{i} is not an object")
        did = str(obj.get("dialog_id", obj.get("id", f"dlg{i:05d}")))
        raw_turns = obj.get("dialog")
        if not isinstance(raw_turns, list) or not raw_turns:
            raise SchemaViolation(f"dialogue {did!r} has no 'dialog' turn list")
        turns = []
        for j, t in enumerate(raw_turns):
            if not isinstance(t, dict):
                raise SchemaViolation(f"dialogue {did!r} turn #{j} is not an object")
            turns.append(_parse_turn(did, j, t))
        dialogues.append(Dialogue(id=did, turns=tuple(turns)))
    return dialogues


def _parse_turn(did: str, j: int, t: dict) -> Turn:
    if "speaker" not in t:
        raise SchemaViolation(f"dialogue {did!r} turn #{j} lacks 'speaker'")
    speaker = _SPEAKER_ALIASES.get(str(t["speaker"]).strip().casefold())
    if speaker is None:
        raise SchemaViolation(f"dialogue {did!r} turn #{j} has unknown speaker {t['speaker']!r}")
    content = t.get("content", t.get("text"))
    if content is None:
        raise SchemaViolation(f"dialogue {did!r} turn #{j} lacks 'content'")
    tokens = tuple(tokenize(str(content)))

    annotation = t.get("annotation") or {}
    if not isinstance(annotation, dict):
        raise SchemaViolation(f"dialogue {did!r} turn #{j} has non-object annotation")
    raw_strategy = annotation.get("strategy", t.get("strategy"))
    strategy = None
    if speaker is Speaker.SUPPORTER:
        # Unannotated supporter turns fall into the unlabelled bucket.
        raw_strategy = str(raw_strategy) if raw_strategy is not None else "Others"
        strategy = adapt_strategy(raw_strategy, tokens)
    else:
        raw_strategy = None

    feedback = annotation.get("feedback", t.get("feedback"))
    if feedback is not None:
        try:
            feedback = int(feedback)
        except (TypeError, ValueError):
            raise SchemaViolation(f"dialogue {did!r} turn #{j} has non-integer feedback") from None
        if not 1 <= feedback <= 5:
            raise SchemaViolation(f"dialogue {did!r} turn #{j} feedback {feedback} outside 1..5")

    cause = t.get("cause", annotation.get("cause"))
    cause_span = tuple(tokenize(str(cause))) if cause else None
    return Turn(speaker, tokens, raw_strategy, strategy, feedback, cause_span)


def normalize(dialogue: Dialogue) -> Dialogue:
    """Merge consecutive same-speaker turns and settle feedback placement.

    Merging concatenates text (and cause spans); the last strategy label
    wins.  Feedback found on a supporter turn is moved to the next
    seeker turn; a seeker turn's own annotation takes precedence.
    Idempotent.
    """
    merged: list[Turn] = []
    for turn in dialogue.turns:
        if merged and merged[-1].speaker is turn.speaker:
            prev = merged[-1]
            cause = None
            if prev.cause_span or turn.cause_span:
                cause = (prev.cause_span or ()) + (turn.cause_span or ())
            merged[-1] = Turn(
                speaker=prev.speaker,
                text=prev.text + turn.text,
                raw_strategy=turn.raw_strategy or prev.raw_strategy,
                strategy=turn.strategy if turn.strategy is not None else prev.strategy,
                feedback=turn.feedback if turn.feedback is not None else prev.feedback,
                cause_span=cause,
            )
        else:
            merged.append(turn)

    normalized: list[Turn] = []
    pending_feedback: int | None = None
    for turn in merged:
        if turn.speaker is Speaker.SUPPORTER:
            if turn.feedback is not None:
                pending_feedback = turn.feedback
                turn = replace(turn, feedback=None)
            normalized.append(turn)
        else:
            if turn.feedback is None and pending_feedback is not None:
                turn = replace(turn, feedback=pending_feedback)
            pending_feedback = None
            normalized.append(turn)
    return Dialogue(id=dialogue.id, turns=tuple(normalized))


def rounds(dialogue: Dialogue) -> list[Round]:
    """Group normalized turns into supporter/seeker rounds.

    When the seeker opens the conversation, round 1 has an empty
    supporter side.
    """
    d = normalize(dialogue)
    out: list[Round] = []
    turns = list(d.turns)
    pos = 0
    index = 1
    while pos < len(turns):
        supporter = None
        seeker = None
        if turns[pos].speaker is Speaker.SUPPORTER:
            supporter = turns[pos]
            pos += 1
        if pos < len(turns) and turns[pos].speaker is Speaker.SEEKER:
            seeker = turns[pos]
            pos += 1
        out.append(Round(index=index, supporter=supporter, seeker=seeker))
        index += 1
    return out


# ----------------------------------------------------------------------
# Splitting
# ----------------------------------------------------------------------

def split_corpus(dialogues: Sequence[Dialogue], seed: int) -> dict[str, list[Dialogue]]:
    """Deterministic 8:1:1 split at dialogue granularity."""
    import random

    n = len(dialogues)
    if n < 10:
        raise TooFewDialogues(f"need at least 10 dialogues to split, got {n}")
    order = list(range(n))
    random.Random(seed).shuffle(order)
    n_val = n // 10
    n_test = n // 10
    val_idx = set(order[:n_val])
    test_idx = set(order[n_val:n_val + n_test])
    split = {"train": [], "validation": [], "test": []}
    for i, d in enumerate(dialogues):
        if i in val_idx:
            split["validation"].append(d)
        elif i in test_idx:
            split["test"].append(d)
        else:
            split["train"].append(d)
    return split


# ----------------------------------------------------------------------
# Example construction
# ----------------------------------------------------------------------

def strategy_marker(strategy: Strategy) -> str:
    """Atomic window token marking a supporter turn's strategy."""
    return f"<{strategy.name.lower()}>"


def _window_before(rnds: list[Round], t: int, window: int) -> tuple[str, ...]:
    tokens: list[str] = []
    for r in rnds[: t - 1]:
        if r.supporter is not None:
            if r.supporter.strategy is not None:
                tokens.append(strategy_marker(r.supporter.strategy))
            tokens.extend(r.supporter.text)
        if r.seeker is not None:
            tokens.extend(r.seeker.text)
    return tuple(tokens[-window:])


def _history_before(rnds: list[Round], t: int) -> tuple[Strategy, ...]:
    return tuple(
        r.supporter.strategy
        for r in rnds[: t - 1]
        if r.supporter is not None and r.supporter.strategy is not None
    )


def conversation_stage(t: int, n_rounds: int) -> int:
    """Quintile 1..5 of round ``t`` within an ``n_rounds`` dialogue."""
    if n_rounds <= 0:
        return 1
    return min(5, max(1, math.ceil(5 * t / n_rounds)))


def make_planning_examples(
    dialogue: Dialogue, L: int, window: int = DEFAULT_WINDOW
) -> list[PlanningExample]:
    """One example per planable supporter round.

    The target is the next up-to-``L`` planable supporter strategies
    starting at the round itself; OTHER-labelled rounds never appear in
    targets but stay in the history context.
    """
    if L < 1:
        raise SchemaViolation(f"L must be >= 1, got {L}")
    rnds = rounds(dialogue)
    n = len(rnds)
    planable_seq = [
        (r.index, r.supporter.strategy)
        for r in rnds
        if r.supporter is not None
        and r.supporter.strategy is not None
        and r.supporter.strategy in PLANABLE
    ]
    examples = []
    for pos, (t, _strategy) in enumerate(planable_seq):
        target = tuple(s for _, s in planable_seq[pos : pos + L])
        examples.append(
            PlanningExample(
                dialogue_id=dialogue.id,
                round_index=t,
                stage=conversation_stage(t, n),
                strategy_history=_history_before(rnds, t),
                window_tokens=_window_before(rnds, t, window),
                user_state_rounds=tuple(range(1, t)),
                target_sequence=target,
            )
        )
    return examples


def make_feedback_examples(dialogue: Dialogue, L: int) -> list[FeedbackExample]:
    """One example per seeker feedback annotation.

    The strategy window is the last up-to-``L`` planable supporter
    strategies at or before the annotated round; user-state rounds are
    those strictly before the window.
    """
    if L < 1:
        raise SchemaViolation(f"L must be >= 1, got {L}")
    rnds = rounds(dialogue)
    examples = []
    for r in rnds:
        if r.seeker is None or r.seeker.feedback is None:
            continue
        window = [
            (q.index, q.supporter.strategy)
            for q in rnds[: r.index]
            if q.supporter is not None
            and q.supporter.strategy is not None
            and q.supporter.strategy in PLANABLE
        ][-L:]
        if not window:
            continue
        first_round = window[0][0]
        examples.append(
            FeedbackExample(
                dialogue_id=dialogue.id,
                strategy_sequence=tuple(s for _, s in window),
                user_state_rounds=tuple(range(1, first_round)),
                score=float(r.seeker.feedback),
            )
        )
    return examples


# ----------------------------------------------------------------------
# State resolution
# ----------------------------------------------------------------------

def resolve_states(
    examples: Sequence[PlanningExample | FeedbackExample],
    dialogues: Iterable[Dialogue],
    lexicon: VadLexicon,
) -> list:
    """Attach per-round user-state vectors to examples.

    States are computed once per dialogue and sliced per example;
    returns new example objects in input order.
    """
    by_id = {d.id: d for d in dialogues}
    cache: dict[str, list[UserState]] = {}
    resolved = []
    for ex in examples:
        if ex.dialogue_id not in cache:
            if ex.dialogue_id not in by_id:
                raise SchemaViolation(f"no dialogue with id {ex.dialogue_id!r}")
            cache[ex.dialogue_id] = dialogue_states(by_id[ex.dialogue_id], lexicon)
        states = cache[ex.dialogue_id]
        picked = tuple(states[i - 1] for i in ex.user_state_rounds)
        if isinstance(ex, PlanningExample):
            emo = tuple(lexicon.emotion_ids(ex.window_tokens))
            resolved.append(replace(ex, states=picked, window_emotion_ids=emo))
        else:
            resolved.append(replace(ex, states=picked))
    return resolved


def strategy_distribution(dialogues: Iterable[Dialogue]) -> dict[Strategy, int]:
    """Adapted-strategy counts over supporter turn annotations (pre-merge)."""
    counts = {s: 0 for s in Strategy}
    for d in dialogues:
        for turn in d.turns:
            if turn.speaker is Speaker.SUPPORTER and turn.strategy is not None:
                counts[turn.strategy] += 1
    return counts


# ----------------------------------------------------------------------
# Example-file serialization (line-delimited JSON, version header line)
# ----------------------------------------------------------------------

def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _states_payload(ex) -> list[list[float]] | None:
    if ex.states is None:
        return None
    return [[float(v) for v in s.vector] for s in ex.states]


def write_planning_examples(
    path, examples: Sequence[PlanningExample], fingerprint: str = "", splits: Sequence[str] | None = None
) -> None:
    header = {
        "format": EXAMPLE_FORMAT,
        "version": EXAMPLE_VERSION,
        "kind": "planning",
        "fingerprint": fingerprint,
    }
    with open(path, "w", encoding="utf-8") as f:
        f.write(_dump(header) + "\n")
        for i, ex in enumerate(examples):
            record = {
                "dialogue_id": ex.dialogue_id,
                "round": ex.round_index,
                "context": {
                    "history": [s.name for s in ex.strategy_history],
                    "window": list(ex.window_tokens),
                    "emotion_ids": list(ex.window_emotion_ids) if ex.window_emotion_ids is not None else None,
                    "stage": ex.stage,
                    "state_rounds": list(ex.user_state_rounds),
                },
                "target": [s.name for s in ex.target_sequence],
                "states": _states_payload(ex),
                "score": None,
                "split": splits[i] if splits is not None else None,
            }
            f.write(_dump(record) + "\n")


def write_feedback_examples(
    path, examples: Sequence[FeedbackExample], fingerprint: str = "", splits: Sequence[str] | None = None
) -> None:
    header = {
        "format": EXAMPLE_FORMAT,
        "version": EXAMPLE_VERSION,
        "kind": "feedback",
        "fingerprint": fingerprint,
    }
    with open(path, "w", encoding="utf-8") as f:
        f.write(_dump(header) + "\n")
        for i, ex in enumerate(examples):
            record = {
                "dialogue_id": ex.dialogue_id,
                "context": {"state_rounds": list(ex.user_state_rounds)},
                "target": [s.name for s in ex.strategy_sequence],
                "states": _states_payload(ex),
                "score": ex.score,
                "augmented": ex.is_augmented,
                "split": splits[i] if splits is not None else None,
            }
            f.write(_dump(record) + "\n")


def _read_header(line: str, kind: str):
    try:
        header = json.loads(line)
    except json.JSONDecodeError as e:
        raise Corrupt(f"unreadable example-file header: {e.msg}") from e
    if not isinstance(header, dict) or header.get("format") != EXAMPLE_FORMAT:
        raise Corrupt("missing example-file header line")
    if header.get("version") != EXAMPLE_VERSION:
        raise VersionMismatch(f"example-file version {header.get('version')!r}")
    if header.get("kind") != kind:
        raise Corrupt(f"expected kind {kind!r}, found {header.get('kind')!r}")
    return header


def _parse_states(payload) -> tuple[UserState, ...] | None:
    import numpy as np

    if payload is None:
        return None
    return tuple(
        UserState(vector=np.asarray(vec, dtype=np.float64), round_index=i + 1)
        for i, vec in enumerate(payload)
    )


def read_planning_examples(path, split: str | None = None) -> list[PlanningExample]:
    """Read planning examples, optionally filtered to one split."""
    out = []
    with open(path, "r", encoding="utf-8") as f:
        lines = f.readlines()
    if not lines:
        raise Corrupt("empty example file")
    _read_header(lines[0], "planning")
    for line in lines[1:]:
        if not line.strip():
            continue
        rec = json.loads(line)
        if split is not None and rec.get("split") != split:
            continue
        ctx = rec["context"]
        emo = ctx.get("emotion_ids")
        out.append(
            PlanningExample(
                dialogue_id=rec["dialogue_id"],
                round_index=rec["round"],
                stage=ctx["stage"],
                strategy_history=tuple(Strategy[n] for n in ctx["history"]),
                window_tokens=tuple(ctx["window"]),
                user_state_rounds=tuple(ctx["state_rounds"]),
                target_sequence=tuple(Strategy[n] for n in rec["target"]),
                states=_parse_states(rec.get("states")),
                window_emotion_ids=tuple(emo) if emo is not None else None,
            )
        )
    return out


def read_feedback_examples(path, split: str | None = None) -> list[FeedbackExample]:
    out = []
    with open(path, "r", encoding="utf-8") as f:
        lines = f.readlines()
    if not lines:
        raise Corrupt("empty example file")
    _read_header(lines[0], "feedback")
    for line in lines[1:]:
        if not line.strip():
            continue
        rec = json.loads(line)
        if split is not None and rec.get("split") != split:
            continue
        out.append(
            FeedbackExample(
                dialogue_id=rec["dialogue_id"],
                strategy_sequence=tuple(Strategy[n] for n in rec["target"]),
                user_state_rounds=tuple(rec["context"]["state_rounds"]),
                score=float(rec["score"]),
                is_augmented=bool(rec.get("augmented", False)),
                states=_parse_states(rec.get("states")),
            )
        )
    return out
