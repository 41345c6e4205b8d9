"""Lookahead strategy selection.

Each candidate strategy is scored F = g + lambda * h, where g is the
log-probability of the candidate under the sequence model and h is the
expected feedback over the k most probable future strategy sequences
of a fixed horizon, found by beam search (with an exhaustive
enumeration oracle for verification).  The candidate maximizing F is
selected; ties break toward the lower strategy id.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

from .corpus import PlanContext
from .errors import EmptyFutures, SpaceTooLarge
from .feedback import predict
from .seqmodel import LOG_FLOOR, SequenceModel, log_guard, sequence_logprob
from .strategies import N_PLANABLE, PLANABLE, Strategy


@dataclass(frozen=True)
class PlannerConfig:
    """Planner hyperparameters; defaults follow the published setting."""

    lambda_: float = 0.7
    L: int = 2
    k: int = 6
    renormalize_topk: bool = False

    def __post_init__(self):
        if self.lambda_ < 0:
            raise EmptyFutures(f"lambda must be >= 0, got {self.lambda_}")
        if self.L < 1:
            raise EmptyFutures(f"L must be >= 1, got {self.L}")
        if self.k < 1:
            raise EmptyFutures(f"k must be >= 1, got {self.k}")


@dataclass(frozen=True)
class BeamHypothesis:
    future: tuple[Strategy, ...]
    logprob: float


@dataclass
class StrategyScore:
    candidate: Strategy
    g: float
    h: float
    F: float
    beam: list[tuple[BeamHypothesis, float]] = field(default_factory=list)


def history_score(model: SequenceModel, ctx: PlanContext, candidate: Strategy) -> float:
    """log Pr(candidate | context); log-zero guarded at LOG_FLOOR."""
    probs = model.next_dist(ctx, [])
    return log_guard(float(probs[int(candidate)]))


def _sort_key(hyp: BeamHypothesis):
    return (-hyp.logprob, tuple(int(s) for s in hyp.future))


def beam_topk_futures(
    model: SequenceModel, ctx: PlanContext, candidate: Strategy, L: int, k: int
) -> list[BeamHypothesis]:
    """Width-k beam over futures of exact length L-1.

    Hypotheses are sorted by log-probability descending with
    lexicographic strategy-id tie-breaks.  L=1 degenerates to the
    single empty future.
    """
    if L == 1:
        return [BeamHypothesis(future=(), logprob=0.0)]
    beam = [BeamHypothesis(future=(), logprob=0.0)]
    for _ in range(L - 1):
        expanded = []
        for hyp in beam:
            probs = model.next_dist(ctx, [candidate, *hyp.future])
            for s in PLANABLE:
                expanded.append(
                    BeamHypothesis(
                        future=hyp.future + (s,),
                        logprob=hyp.logprob + log_guard(float(probs[int(s)])),
                    )
                )
        expanded.sort(key=_sort_key)
        beam = expanded[:k]
    return beam


def exact_topk_futures(
    model: SequenceModel, ctx: PlanContext, candidate: Strategy, L: int, k: int
) -> list[BeamHypothesis]:
    """Exhaustive top-k oracle over all length-(L-1) futures."""
    if L == 1:
        return [BeamHypothesis(future=(), logprob=0.0)]
    space = N_PLANABLE ** (L - 1)
    if space > 10**6:
        raise SpaceTooLarge(f"{space} futures exceed the enumeration guard")
    hypotheses = [
        BeamHypothesis(future=future, logprob=sequence_logprob(model, ctx, candidate, future))
        for future in itertools.product(PLANABLE, repeat=L - 1)
    ]
    hypotheses.sort(key=_sort_key)
    return hypotheses[:k]


def lookahead_score(
    ufp,
    futures: Sequence[BeamHypothesis],
    candidate: Strategy,
    states,
    renormalize: bool = False,
) -> tuple[float, list[tuple[BeamHypothesis, float]]]:
    """Expected feedback over the future set.

    h = sum_i p_i * f([candidate] + future_i, states); with
    ``renormalize`` the probabilities are divided by their sum first.
    Returns (h, per-hypothesis (hypothesis, predicted feedback)).
    """
    if not futures:
        raise EmptyFutures("lookahead needs at least one future hypothesis")
    masses = [math.exp(hyp.logprob) if hyp.logprob > LOG_FLOOR / 2 else 0.0 for hyp in futures]
    if renormalize:
        total = sum(masses)
        if total > 0:
            masses = [m / total for m in masses]
    scored = []
    h = 0.0
    for hyp, mass in zip(futures, masses):
        fb = predict(ufp, [candidate, *hyp.future], states)
        scored.append((hyp, fb))
        h += mass * fb
    return h, scored


def strategy_score(
    model: SequenceModel,
    ufp,
    ctx: PlanContext,
    candidate: Strategy,
    config: PlannerConfig,
) -> StrategyScore:
    """Assemble g, the beam of futures, h, and F for one candidate."""
    g = history_score(model, ctx, candidate)
    futures = beam_topk_futures(model, ctx, candidate, config.L, config.k)
    h, scored = lookahead_score(ufp, futures, candidate, ctx.states, config.renormalize_topk)
    return StrategyScore(candidate=candidate, g=g, h=h, F=g + config.lambda_ * h, beam=scored)


def select_strategy(
    model: SequenceModel, ufp, ctx: PlanContext, config: PlannerConfig
) -> tuple[Strategy, list[StrategyScore]]:
    """Score all planable candidates and return the argmax of F.

    The score list is returned in strategy-id order for inspection;
    exact F ties resolve to the lower id.
    """
    scores = [strategy_score(model, ufp, ctx, candidate, config) for candidate in PLANABLE]
    best = max(scores, key=lambda s: (s.F, -int(s.candidate)))
    return best.candidate, scores


def audit_record(chosen: Strategy, scores: Sequence[StrategyScore]) -> dict:
    """JSON-safe planner decision dump for audits and regressions."""
    return {
        "chosen": chosen.name,
        "candidates": [
            {
                "strategy": s.candidate.name,
                "g": s.g,
                "h": s.h,
                "F": s.F,
                "beam": [
                    {
                        "future": [f.name for f in hyp.future],
                        "prob": math.exp(hyp.logprob) if hyp.logprob > LOG_FLOOR / 2 else 0.0,
                        "feedback": fb,
                    }
                    for hyp, fb in s.beam
                ],
            }
            for s in scores
        ],
    }
