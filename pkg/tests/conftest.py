import numpy as np
import pytest

from foresight import corpus as corpus_mod
from foresight.lexicon import load_vad
from foresight.synthetic import generate_corpus, generate_lexicon


@pytest.fixture(scope="session")
def small_lexicon():
    """Hand-written lexicon with the two documented probe words."""
    rows = [
        "word\tvalence\tarousal\tdominance",
        "loneliness\t0.15\t0.18\t0.22",
        "abandon\t0.05\t0.52\t0.25",
        "joy\t0.95\t0.80\t0.60",
        "calm\t0.80\t0.10\t0.50",
        "hello\t0.70\t0.40\t0.50",
        "bad\t0.10\t0.60\t0.30",
    ]
    return load_vad("\n".join(rows))


@pytest.fixture(scope="session")
def synthetic_lexicon():
    return load_vad(generate_lexicon(500, seed=0))


@pytest.fixture(scope="session")
def synthetic_dialogues():
    return corpus_mod.parse_esconv(generate_corpus(20, seed=7, lexicon_words=500))


@pytest.fixture(scope="session")
def resolved_examples(synthetic_dialogues, synthetic_lexicon):
    planning, feedback = [], []
    for d in synthetic_dialogues:
        planning += corpus_mod.make_planning_examples(d, 2)
        feedback += corpus_mod.make_feedback_examples(d, 2)
    planning = corpus_mod.resolve_states(planning, synthetic_dialogues, synthetic_lexicon)
    feedback = corpus_mod.resolve_states(feedback, synthetic_dialogues, synthetic_lexicon)
    return planning, feedback


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
