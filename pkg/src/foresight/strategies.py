"""Support-strategy alphabet and label adaptation for ESConv-style corpora.

The raw corpus annotates supporter turns with eight labels.  Two of them
("Providing Suggestions" and "Information") are merged into a single
strategy, and "Others" is split into greeting-like turns (a strategy in
its own right) and a residual ``OTHER`` bucket that the planner never
emits.
"""

from __future__ import annotations

from enum import IntEnum

from .errors import UnknownLabel


class Strategy(IntEnum):
    QUESTION = 0
    RESTATEMENT_OR_PARAPHRASING = 1
    REFLECTION_OF_FEELINGS = 2
    SELF_DISCLOSURE = 3
    AFFIRMATION_AND_REASSURANCE = 4
    PROVIDING_SUGGESTIONS_OR_INFORMATION = 5
    GREETINGS = 6
    OTHER = 7

    @property
    def label(self) -> str:
        return _CANONICAL_LABELS[self]

    @classmethod
    def from_label(cls, label: str) -> "Strategy":
        key = label.strip().casefold()
        if key not in _LABEL_TO_STRATEGY:
            raise UnknownLabel(f"unknown canonical strategy label {label!r}")
        return _LABEL_TO_STRATEGY[key]


#: Strategies the planner may emit; OTHER is excluded everywhere except
#: as a history token.
PLANABLE: tuple[Strategy, ...] = tuple(s for s in Strategy if s is not Strategy.OTHER)
N_PLANABLE = len(PLANABLE)

#: Published post-adaptation strategy proportions (percent of supporter
#: annotations) for the source ESConv corpus; used as the reference
#: column in ingest reports.
REFERENCE_STRATEGY_DISTRIBUTION: dict[Strategy, float] = {
    Strategy.QUESTION: 21.77,
    Strategy.RESTATEMENT_OR_PARAPHRASING: 6.46,
    Strategy.REFLECTION_OF_FEELINGS: 8.05,
    Strategy.SELF_DISCLOSURE: 9.34,
    Strategy.AFFIRMATION_AND_REASSURANCE: 16.13,
    Strategy.PROVIDING_SUGGESTIONS_OR_INFORMATION: 22.02,
    Strategy.GREETINGS: 8.72,
    Strategy.OTHER: 7.49,
}

_CANONICAL_LABELS = {
    Strategy.QUESTION: "Question",
    Strategy.RESTATEMENT_OR_PARAPHRASING: "Restatement or Paraphrasing",
    Strategy.REFLECTION_OF_FEELINGS: "Reflection of Feelings",
    Strategy.SELF_DISCLOSURE: "Self-disclosure",
    Strategy.AFFIRMATION_AND_REASSURANCE: "Affirmation and Reassurance",
    Strategy.PROVIDING_SUGGESTIONS_OR_INFORMATION: "Providing Suggestions or Information",
    Strategy.GREETINGS: "Greetings",
    Strategy.OTHER: "Other",
}

_LABEL_TO_STRATEGY = {label.casefold(): s for s, label in _CANONICAL_LABELS.items()}

# Raw annotation labels as they appear in the source corpus.  The two
# suggestion/information labels collapse onto one strategy; "Others" is
# resolved against the greeting patterns below.
_RAW_TO_STRATEGY = {
    "question": Strategy.QUESTION,
    "restatement or paraphrasing": Strategy.RESTATEMENT_OR_PARAPHRASING,
    "reflection of feelings": Strategy.REFLECTION_OF_FEELINGS,
    "self-disclosure": Strategy.SELF_DISCLOSURE,
    "affirmation and reassurance": Strategy.AFFIRMATION_AND_REASSURANCE,
    "providing suggestions": Strategy.PROVIDING_SUGGESTIONS_OR_INFORMATION,
    "information": Strategy.PROVIDING_SUGGESTIONS_OR_INFORMATION,
    "providing suggestions or information": Strategy.PROVIDING_SUGGESTIONS_OR_INFORMATION,
    "greetings": Strategy.GREETINGS,
    "others": None,  # resolved by greeting detection
}

#: Token-level greeting patterns.  A turn labelled "Others" is re-labelled
#: GREETINGS when any of these token sequences starts within the first
#: six tokens of the turn.
GREETING_PATTERNS: tuple[tuple[str, ...], ...] = (
    ("hello",),
    ("hi",),
    ("hey",),
    ("good", "morning"),
    ("good", "afternoon"),
    ("good", "evening"),
    ("how", "are", "you"),
    ("nice", "to", "meet"),
)

_GREETING_WINDOW = 6


def is_greeting(tokens: list[str] | tuple[str, ...]) -> bool:
    """True when a greeting pattern starts within the first six tokens."""
    lowered = [t.casefold() for t in tokens]
    for start in range(min(len(lowered), _GREETING_WINDOW)):
        for pattern in GREETING_PATTERNS:
            if tuple(lowered[start:start + len(pattern)]) == pattern:
                return True
    return False


def adapt_strategy(raw: str, tokens: list[str] | tuple[str, ...]) -> Strategy:
    """Map a raw annotation label to the canonical strategy alphabet.

    ``tokens`` is the tokenized turn text, consulted only to decide
    whether an "Others" turn is a greeting.  Raises UnknownLabel for
    labels outside the original taxonomy.
    """
    key = raw.strip().casefold()
    if key not in _RAW_TO_STRATEGY:
        raise UnknownLabel(f"raw strategy label {raw!r} is not in the source taxonomy")
    mapped = _RAW_TO_STRATEGY[key]
    if mapped is not None:
        return mapped
    return Strategy.GREETINGS if is_greeting(tokens) else Strategy.OTHER
