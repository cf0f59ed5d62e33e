"""Pydantic request/response models for the HTTP service.

Responses never include the hidden rule or any per-atom state; clients
see only boards, counters, and accept/reject verdicts.
"""

from __future__ import annotations

from pydantic import BaseModel, Field


class PieceModel(BaseModel):
    cell: int
    row: int
    col: int
    shape: str
    color: str


class SessionState(BaseModel):
    session_id: str
    episode: int
    move_count: int
    episode_over: bool
    board: list[PieceModel]


class MoveRequest(BaseModel):
    row: int = Field(ge=1, le=6)
    col: int = Field(ge=1, le=6)
    bucket: int = Field(ge=0, le=3)


class MoveResponse(SessionState):
    verdict: int  # 0 accept, 1 reject
    reward: int


class MetaResponse(BaseModel):
    shapes: list[str]
    colors: list[str]
    board_size: int
    bucket_corners: list[tuple[int, int]]  # indexed by bucket id 0..3


class StatusResponse(BaseModel):
    status: str
