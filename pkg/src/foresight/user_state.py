"""Per-round user-state vectors built from the emotion lexicon.

The reference featurization of a round is the normalized emotion-id
histogram of its text (supporter utterance + seeker utterance + cause
span) plus four auxiliary features: log-scaled token count, lexicon
coverage, and the mean valence/arousal of covered tokens.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import RoundOutOfRange, SchemaViolation
from .lexicon import VadLexicon

N_AUX_FEATURES = 4


def state_dim(lexicon: VadLexicon) -> int:
    return lexicon.n_ids + N_AUX_FEATURES


@dataclass(frozen=True, eq=False)
class UserState:
    vector: np.ndarray
    round_index: int


class UserStateSequence:
    """Ordered user states for rounds 1..t-1."""

    def __init__(self, states: Sequence[UserState]):
        states = tuple(states)
        for prev, cur in zip(states, states[1:]):
            if cur.round_index <= prev.round_index:
                raise SchemaViolation(
                    f"round indices not strictly increasing: {prev.round_index} -> {cur.round_index}"
                )
        self.states = states

    def __len__(self) -> int:
        return len(self.states)

    def __iter__(self):
        return iter(self.states)

    def __getitem__(self, i):
        return self.states[i]

    def matrix(self) -> np.ndarray:
        """Stacked (t-1, d_u) state matrix; shape (0, 0) when empty."""
        if not self.states:
            return np.zeros((0, 0))
        return np.stack([s.vector for s in self.states])

    def latest(self) -> UserState | None:
        return self.states[-1] if self.states else None


def build_user_state(
    x_tokens: Sequence[str],
    y_tokens: Sequence[str],
    cause_tokens: Sequence[str] | None,
    lexicon: VadLexicon,
    round_index: int = 1,
) -> UserState:
    """Featurize one round's text into a user-state vector.

    The histogram spans all emotion ids (including the out-of-lexicon
    bin) and sums to 1 unless the round is empty, in which case the
    whole vector is zero except for the count feature.
    """
    tokens = list(x_tokens) + list(y_tokens) + list(cause_tokens or ())
    hist = lexicon.histogram(tokens).astype(np.float64)
    total = hist.sum()
    if total > 0:
        hist = hist / total

    covered = [lexicon.lookup(t) for t in tokens]
    covered = [s for s in covered if s is not None]
    n = len(tokens)
    coverage = len(covered) / n if n else 0.0
    mean_v = float(np.mean([s.valence for s in covered])) if covered else 0.0
    mean_a = float(np.mean([s.arousal for s in covered])) if covered else 0.0

    aux = np.array([np.log1p(n), coverage, mean_v, mean_a], dtype=np.float64)
    return UserState(vector=np.concatenate([hist, aux]), round_index=round_index)


def dialogue_states(dialogue, lexicon: VadLexicon) -> list[UserState]:
    """User states for every round of a dialogue, in round order."""
    from .corpus import rounds  # deferred: corpus imports this module

    out = []
    for r in rounds(dialogue):
        x = r.supporter.text if r.supporter else ()
        y = r.seeker.text if r.seeker else ()
        cause = r.seeker.cause_span if r.seeker else None
        out.append(build_user_state(x, y, cause, lexicon, round_index=r.index))
    return out


def build_sequence(dialogue, t: int, lexicon: VadLexicon) -> UserStateSequence:
    """States for rounds 1..t-1; empty when t == 1."""
    from .corpus import rounds

    n = len(rounds(dialogue))
    if not 1 <= t <= n + 1:
        raise RoundOutOfRange(f"round {t} outside 1..{n + 1}")
    return UserStateSequence(dialogue_states(dialogue, lexicon)[: t - 1])
