"""Valence-arousal-dominance lexicon and emotion-subspace quantization.

Words carry VAD coordinates in [0,1]**3.  The valence and arousal axes
are divided into ``n_v`` and ``n_a`` equal intervals, giving
``n_v * n_a`` emotion subspaces plus one special id for tokens absent
from the lexicon (dominance is ignored).  With the default 8x8 grid
that is 65 emotion ids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import MalformedRow, OutOfRange, ScoreOutOfRange

DEFAULT_N_V = 8
DEFAULT_N_A = 8


@dataclass(frozen=True)
class VadScore:
    valence: float
    arousal: float
    dominance: float

    def __post_init__(self):
        for name in ("valence", "arousal", "dominance"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0 or not math.isfinite(v):
                raise ScoreOutOfRange(f"{name} {v!r} outside [0, 1]")


def quantize(v: float, a: float, n_v: int, n_a: int) -> int:
    """Emotion-subspace id for a (valence, arousal) point.

    Arousal-major layout: ``id = a_idx * n_v + v_idx``; points on the
    upper boundary clamp into the last interval.
    """
    if not (0.0 <= v <= 1.0 and 0.0 <= a <= 1.0):
        raise OutOfRange(f"({v}, {a}) outside the unit square")
    v_idx = min(int(v * n_v), n_v - 1)
    a_idx = min(int(a * n_a), n_a - 1)
    return a_idx * n_v + v_idx


class VadLexicon:
    """Case-insensitive word -> VadScore map with quantization config."""

    def __init__(self, entries: dict[str, VadScore], n_v: int = DEFAULT_N_V, n_a: int = DEFAULT_N_A):
        if n_v < 1 or n_a < 1:
            raise OutOfRange(f"n_v and n_a must be >= 1, got ({n_v}, {n_a})")
        self._entries = {word.casefold(): score for word, score in entries.items()}
        self.n_v = n_v
        self.n_a = n_a

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, word: str) -> bool:
        return word.casefold() in self._entries

    @property
    def special_id(self) -> int:
        """Id assigned to tokens without a VAD annotation."""
        return self.n_v * self.n_a

    @property
    def n_ids(self) -> int:
        return self.n_v * self.n_a + 1

    def lookup(self, word: str) -> VadScore | None:
        return self._entries.get(word.casefold())

    def emotion_id(self, word: str) -> int:
        score = self.lookup(word)
        if score is None:
            return self.special_id
        return quantize(score.valence, score.arousal, self.n_v, self.n_a)

    def emotion_ids(self, tokens) -> list[int]:
        """One emotion id per token; out-of-lexicon tokens get the special id."""
        return [self.emotion_id(t) for t in tokens]

    def histogram(self, tokens) -> np.ndarray:
        """Integer counts over all ``n_ids`` emotion bins."""
        counts = np.zeros(self.n_ids, dtype=np.int64)
        for i in self.emotion_ids(tokens):
            counts[i] += 1
        return counts


def load_vad(data: bytes | str, n_v: int = DEFAULT_N_V, n_a: int = DEFAULT_N_A) -> VadLexicon:
    """Load a tab-separated ``word<TAB>V<TAB>A<TAB>D`` lexicon.

    An optional single header line is skipped; scores outside [0,1] are
    rejected.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    entries: dict[str, VadScore] = {}
    for lineno, line in enumerate(data.splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 4:
            raise MalformedRow(f"expected 4 tab-separated fields, got {len(fields)}", line=lineno)
        word = fields[0].strip()
        if not word:
            raise MalformedRow("empty word field", line=lineno)
        try:
            v, a, d = (float(x) for x in fields[1:])
        except ValueError:
            if lineno == 1:  # header line
                continue
            raise MalformedRow(f"non-numeric score in {fields[1:]!r}", line=lineno) from None
        entries[word] = VadScore(v, a, d)
    return VadLexicon(entries, n_v=n_v, n_a=n_a)


def load_vad_file(path, n_v: int = DEFAULT_N_V, n_a: int = DEFAULT_N_A) -> VadLexicon:
    with open(path, "rb") as f:
        return load_vad(f.read(), n_v=n_v, n_a=n_a)
