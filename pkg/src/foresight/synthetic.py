"""Deterministic synthetic corpus and lexicon generation.

The generated conversations follow a planted process: one strategy
(suggestions/information) is immediately unlikely under the supporter
policy but reliably raises the seeker's mood, and therefore the
feedback annotations, more than the high-probability strategy
(questions).  A lookahead planner should exploit this; a myopic one
cannot.  Used by the test suite and handy for demo pipelines.
"""

from __future__ import annotations

import json

import numpy as np

HIGH_REWARD_RAW = ("Providing Suggestions", "Information")
LIKELY_RAW = "Question"

#: Mood increment per adapted supporter strategy.
MOOD_EFFECTS = {
    "Question": -0.2,
    "Restatement or Paraphrasing": 0.1,
    "Reflection of feelings": 0.1,
    "Self-disclosure": 0.1,
    "Affirmation and Reassurance": 0.3,
    "Providing Suggestions": 1.8,
    "Information": 1.8,
    "Others": 0.0,
}

_RAW_LABELS = list(MOOD_EFFECTS)
_RAW_PROBS = [0.40, 0.08, 0.08, 0.08, 0.08, 0.075, 0.075, 0.13]

_FUNCTION_WORDS = ["i", "you", "it", "the", "a", "and", "so", "very", "really", "today", "about"]

_SUPPORTER_TEMPLATES = {
    "Question": ["what happened with {w} ?", "can you tell me more about {w} ?"],
    "Restatement or Paraphrasing": ["so you are saying {w} changed things .", "it sounds like {w} matters ."],
    "Reflection of feelings": ["you seem to feel {w} about this .", "that must feel {w} ."],
    "Self-disclosure": ["i once felt {w} too .", "i went through {w} myself ."],
    "Affirmation and Reassurance": ["you are handling {w} well .", "you are strong about {w} ."],
    "Providing Suggestions": ["maybe try {w} this week .", "you could plan {w} with someone ."],
    "Information": ["there are resources about {w} .", "studies say {w} helps ."],
}

_OTHERS_GREETING = ["hello ! i am here to listen .", "hi there , thanks for reaching out ."]
_OTHERS_PLAIN = ["that is quite a heavy topic .", "let us keep talking ."]


def generate_lexicon(n_words: int = 2000, seed: int = 0) -> str:
    """Tab-separated word/V/A/D lexicon with a header line."""
    rng = np.random.default_rng(seed)
    lines = ["word\tvalence\tarousal\tdominance"]
    for i in range(n_words):
        v, a, d = rng.uniform(0.0, 1.0, size=3)
        lines.append(f"w{i:05d}\t{v:.3f}\t{a:.3f}\t{d:.3f}")
    return "\n".join(lines) + "\n"


def _word_pools(n_words: int, seed: int) -> dict[str, list[str]]:
    """Partition generated lexicon words by valence band."""
    rng = np.random.default_rng(seed)
    pools = {"low": [], "mid": [], "high": []}
    for i in range(n_words):
        v, _a, _d = rng.uniform(0.0, 1.0, size=3)
        band = "low" if v < 1 / 3 else ("mid" if v < 2 / 3 else "high")
        pools[band].append(f"w{i:05d}")
    return pools


def generate_corpus(
    n_dialogues: int,
    seed: int = 0,
    lexicon_words: int = 2000,
    lexicon_seed: int = 0,
) -> str:
    """ESConv-format JSON document implementing the planted process."""
    rng = np.random.default_rng(seed)
    pools = _word_pools(lexicon_words, lexicon_seed)

    def seeker_words(mood: float) -> str:
        p_high = (mood - 1.0) / 4.0
        words = []
        for _ in range(int(rng.integers(4, 9))):
            if rng.random() < 0.35:
                words.append(_FUNCTION_WORDS[int(rng.integers(0, len(_FUNCTION_WORDS)))])
            else:
                band = "high" if rng.random() < p_high else ("mid" if rng.random() < 0.5 else "low")
                pool = pools[band]
                words.append(pool[int(rng.integers(0, len(pool)))])
        return " ".join(words)

    def filler() -> str:
        pool = pools["mid"]
        return pool[int(rng.integers(0, len(pool)))]

    dialogues = []
    for d in range(n_dialogues):
        n_rounds = int(rng.integers(6, 13))
        mood = 2.0
        turns = []
        for t in range(1, n_rounds + 1):
            if t == 1 and rng.random() < 0.7:
                raw = "Others"
                content = _OTHERS_GREETING[int(rng.integers(0, len(_OTHERS_GREETING)))]
            else:
                raw = rng.choice(_RAW_LABELS, p=_RAW_PROBS)
                if raw == "Others":
                    pool = _OTHERS_GREETING if rng.random() < 0.5 else _OTHERS_PLAIN
                    content = pool[int(rng.integers(0, len(pool)))]
                else:
                    templates = _SUPPORTER_TEMPLATES[raw]
                    content = templates[int(rng.integers(0, len(templates)))].format(w=filler())
            turns.append({"speaker": "supporter", "content": content, "annotation": {"strategy": str(raw)}})
            mood = min(5.0, max(1.0, mood + MOOD_EFFECTS[str(raw)]))

            seeker_turn = {"speaker": "seeker", "content": seeker_words(mood), "annotation": {}}
            if t % 2 == 0:
                rating = int(round(min(5.0, max(1.0, mood + rng.normal(0.0, 0.25)))))
                seeker_turn["annotation"]["feedback"] = rating
            if rng.random() < 0.2:
                seeker_turn["cause"] = seeker_words(mood)
            turns.append(seeker_turn)
            # occasionally split the seeker turn to exercise merging
            if rng.random() < 0.05:
                turns.append({"speaker": "seeker", "content": seeker_words(mood), "annotation": {}})
        dialogues.append({"dialog_id": f"syn-{d:04d}", "dialog": turns})
    return json.dumps(dialogues, sort_keys=True, separators=(",", ":"))
