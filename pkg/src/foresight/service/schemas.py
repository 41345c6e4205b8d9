"""Pydantic request/response models for the planning service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class TurnIn(BaseModel):
    speaker: str
    text: str = ""
    strategy: str | None = None
    feedback: int | None = Field(default=None, ge=1, le=5)
    cause: str | None = None


class PlanRequest(BaseModel):
    turns: list[TurnIn] = Field(default_factory=list)
    lambda_: float | None = Field(default=None, alias="lambda", ge=0)
    L: int | None = Field(default=None, ge=1)
    k: int | None = Field(default=None, ge=1)
    renormalize: bool | None = None

    model_config = {"populate_by_name": True}


class BeamEntry(BaseModel):
    future: list[str]
    prob: float
    feedback: float


class CandidateScore(BaseModel):
    strategy: str
    g: float
    h: float
    F: float
    beam: list[BeamEntry]


class PlanResponse(BaseModel):
    chosen: str
    candidates: list[CandidateScore]
    fingerprint: str | None = None


class NextDistRequest(BaseModel):
    turns: list[TurnIn] = Field(default_factory=list)
    prefix: list[str] = Field(default_factory=list)


class NextDistResponse(BaseModel):
    probs: dict[str, float]


class FeedbackRequest(BaseModel):
    sequence: list[str] = Field(min_length=1)
    turns: list[TurnIn] = Field(default_factory=list)


class FeedbackResponse(BaseModel):
    score: float


class HistogramRequest(BaseModel):
    text: str


class HistogramResponse(BaseModel):
    bins: list[int]
    special_id: int
    n_tokens: int


class HealthResponse(BaseModel):
    status: str
    ssg_kind: str
    ufp_kind: str
    lexicon_entries: int
