"""Lookahead strategy planning for emotional-support dialogue.

The engine tracks user states through a quantized valence-arousal
lexicon, models strategy sequences probabilistically, predicts seeker
feedback, and selects the strategy maximizing a combined history +
expected-future-feedback score.
"""

from .config import RunConfig, load_config
from .corpus import (
    Dialogue,
    FeedbackExample,
    PlanContext,
    PlanningExample,
    Speaker,
    Turn,
    make_feedback_examples,
    make_planning_examples,
    parse_esconv,
    split_corpus,
    tokenize,
)
from .errors import ForesightError
from .lexicon import VadLexicon, VadScore, load_vad, load_vad_file, quantize
from .planner import (
    BeamHypothesis,
    PlannerConfig,
    StrategyScore,
    beam_topk_futures,
    exact_topk_futures,
    history_score,
    lookahead_score,
    select_strategy,
    strategy_score,
)
from .strategies import PLANABLE, Strategy, adapt_strategy
from .user_state import UserState, UserStateSequence, build_sequence, build_user_state

__version__ = "0.1.0"

__all__ = [
    "BeamHypothesis",
    "Dialogue",
    "FeedbackExample",
    "ForesightError",
    "PLANABLE",
    "PlanContext",
    "PlannerConfig",
    "PlanningExample",
    "RunConfig",
    "Speaker",
    "Strategy",
    "StrategyScore",
    "Turn",
    "UserState",
    "UserStateSequence",
    "VadLexicon",
    "VadScore",
    "adapt_strategy",
    "beam_topk_futures",
    "build_sequence",
    "build_user_state",
    "exact_topk_futures",
    "history_score",
    "load_config",
    "load_vad",
    "load_vad_file",
    "lookahead_score",
    "make_feedback_examples",
    "make_planning_examples",
    "parse_esconv",
    "quantize",
    "select_strategy",
    "split_corpus",
    "strategy_score",
    "tokenize",
]
