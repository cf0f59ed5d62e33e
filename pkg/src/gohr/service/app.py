"""FastAPI service wrapping captive-game-server sessions.

REST endpoints drive sessions for HTTP clients; the ``/ws`` WebSocket is
a line-protocol gateway (one protocol line per message) so browsers can
speak to the same session loop without raw TCP.
"""

from __future__ import annotations

import threading

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect

from ..cgs import Session, SessionConfig
from ..engine import BOARD_SIZE
from ..errors import ProtocolError
from .models import (
    MetaResponse,
    MoveRequest,
    MoveResponse,
    SessionState,
    StatusResponse,
)


class _SessionStore:
    def __init__(self, config: SessionConfig):
        self.config = config
        self._lock = threading.Lock()
        self._counter = 0
        self._sessions: dict[str, tuple[Session, threading.Lock]] = {}

    def create(self) -> tuple[str, Session, threading.Lock]:
        with self._lock:
            index = self._counter
            self._counter += 1
            sid = f"s{index:06d}"
            entry = (Session(self.config, index), threading.Lock())
            self._sessions[sid] = entry
        return sid, *entry

    def next_index(self) -> int:
        with self._lock:
            index = self._counter
            self._counter += 1
            return index

    def get(self, sid: str) -> tuple[Session, threading.Lock]:
        try:
            return self._sessions[sid]
        except KeyError:
            raise HTTPException(status_code=404,
                                detail="unknown session") from None

    def drop(self, sid: str) -> None:
        with self._lock:
            entry = self._sessions.pop(sid, None)
        if entry is None:
            raise HTTPException(status_code=404, detail="unknown session")
        entry[0].close()


def create_app(config: SessionConfig) -> FastAPI:
    app = FastAPI(title="Game of Hidden Rules server", version="0.1.0")
    store = _SessionStore(config)

    def state_payload(sid: str, payload: dict) -> dict:
        return {"session_id": sid, **payload}

    @app.get("/health", response_model=StatusResponse)
    def health():
        return {"status": "ok"}

    @app.get("/meta", response_model=MetaResponse)
    def meta():
        return {
            "shapes": list(config.features.shapes),
            "colors": list(config.features.colors),
            "board_size": BOARD_SIZE,
            "bucket_corners": list(config.geometry.corners),
        }

    @app.post("/sessions", response_model=SessionState)
    def create_session():
        sid, session, lock = store.create()
        with lock:
            return state_payload(sid, _call(session.new_episode))

    @app.get("/sessions/{sid}", response_model=SessionState)
    def display(sid: str):
        session, lock = store.get(sid)
        with lock:
            return state_payload(sid, _call(session.display))

    @app.post("/sessions/{sid}/episodes", response_model=SessionState)
    def next_episode(sid: str):
        session, lock = store.get(sid)
        with lock:
            return state_payload(sid, _call(session.new_episode))

    @app.post("/sessions/{sid}/moves", response_model=MoveResponse)
    def move(sid: str, request: MoveRequest):
        session, lock = store.get(sid)
        with lock:
            return state_payload(
                sid, _call(session.move, request.row, request.col,
                           request.bucket))

    @app.delete("/sessions/{sid}", response_model=StatusResponse)
    def end_session(sid: str):
        store.drop(sid)
        return {"status": "ok"}

    @app.websocket("/ws")
    async def gateway(websocket: WebSocket):
        """Bridge: each text frame is one captive-server protocol line."""
        await websocket.accept()
        session = Session(config, store.next_index())
        try:
            while True:
                line = await websocket.receive_text()
                response, done = session.handle_line(line)
                await websocket.send_text(response)
                if done:
                    break
        except WebSocketDisconnect:
            pass
        finally:
            session.close()

    return app


def _call(fn, *args):
    try:
        return fn(*args)
    except ProtocolError as exc:
        raise HTTPException(status_code=409, detail=str(exc)) from None
