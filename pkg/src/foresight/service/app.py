"""FastAPI wrapper around the planning engine.

Models and the lexicon load once at application start; every endpoint
then serves read-only inference over them, so the service is safe for
concurrent clients.
"""

from __future__ import annotations

import dataclasses

from fastapi import FastAPI, HTTPException

from .. import corpus as corpus_mod
from .. import pipeline
from ..config import RunConfig
from ..errors import ForesightError
from ..planner import select_strategy
from ..seqmodel import next_dist
from ..feedback import predict
from ..strategies import PLANABLE, Strategy
from .schemas import (
    FeedbackRequest,
    FeedbackResponse,
    HealthResponse,
    HistogramRequest,
    HistogramResponse,
    NextDistRequest,
    NextDistResponse,
    PlanRequest,
    PlanResponse,
    TurnIn,
)


def create_app(cfg: RunConfig) -> FastAPI:
    lexicon = pipeline.load_lexicon(cfg)
    ssg, ufp = pipeline.load_models(cfg)
    base_planner = pipeline.planner_config(cfg)
    fingerprint = cfg.fingerprint()

    app = FastAPI(title="foresight", description="Lookahead support-strategy planning")

    def build_context(turns: list[TurnIn]):
        if not turns:
            from ..corpus import PlanContext
            from ..user_state import UserStateSequence

            return PlanContext(
                strategy_history=(), window_tokens=(), states=UserStateSequence(()),
                window_emotion_ids=(),
            )
        dialogue = pipeline.dialogue_from_turn_payload([t.model_dump() for t in turns])
        return pipeline.context_from_dialogue(dialogue, lexicon, cfg.window)

    @app.exception_handler(ForesightError)
    async def foresight_error_handler(_request, exc: ForesightError):
        from fastapi.responses import JSONResponse

        return JSONResponse(status_code=400, content={"error": exc.code, "detail": exc.message})

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(
            status="ok", ssg_kind=ssg.kind, ufp_kind=ufp.kind, lexicon_entries=len(lexicon)
        )

    @app.post("/plan", response_model=PlanResponse)
    def plan(request: PlanRequest) -> PlanResponse:
        ctx = build_context(request.turns)
        config = base_planner
        updates = {}
        if request.lambda_ is not None:
            updates["lambda_"] = request.lambda_
        if request.L is not None:
            updates["L"] = request.L
        if request.k is not None:
            updates["k"] = request.k
        if request.renormalize is not None:
            updates["renormalize_topk"] = request.renormalize
        if updates:
            config = dataclasses.replace(config, **updates)
        chosen, scores = select_strategy(ssg, ufp, ctx, config)
        from ..planner import audit_record

        record = audit_record(chosen, scores)
        record["fingerprint"] = fingerprint
        return PlanResponse(**record)

    @app.post("/next-dist", response_model=NextDistResponse)
    def next_distribution(request: NextDistRequest) -> NextDistResponse:
        ctx = build_context(request.turns)
        prefix = [Strategy.from_label(name) for name in request.prefix]
        probs = next_dist(ssg, ctx, prefix)
        return NextDistResponse(probs={s.name: float(probs[int(s)]) for s in PLANABLE})

    @app.post("/feedback", response_model=FeedbackResponse)
    def feedback_score(request: FeedbackRequest) -> FeedbackResponse:
        ctx = build_context(request.turns)
        seq = [Strategy.from_label(name) for name in request.sequence]
        if any(s is Strategy.OTHER for s in seq):
            raise HTTPException(status_code=422, detail="OTHER is not a scoreable strategy")
        return FeedbackResponse(score=predict(ufp, seq, ctx.states))

    @app.post("/lexicon/histogram", response_model=HistogramResponse)
    def lexicon_histogram(request: HistogramRequest) -> HistogramResponse:
        tokens = corpus_mod.tokenize(request.text)
        hist = lexicon.histogram(tokens)
        return HistogramResponse(
            bins=[int(c) for c in hist], special_id=lexicon.special_id, n_tokens=len(tokens)
        )

    return app
