"""Captive game server: episodes over a newline-delimited protocol.

Requests, one per line (fields space-separated)::

    NEW                     start the next episode
    DISPLAY                 return state without acting
    MOVE <row> <col> <bucket>
    EXIT                    end the session

Every request gets exactly one response line of space-separated
``key=value`` pairs.  Success responses carry, in order: ``status=ok``,
``episode``, ``move_count``, ``episode_over`` (0/1), after MOVE also
``verdict`` (0=accept, 1=reject) and ``reward`` (0/-1), and finally
``board`` (comma-separated ``cell:shape:color`` records, cells
ascending, empty when the board is clear).  Error responses are
``status=error error=<code>`` and never change state; the session
continues.  The hidden rule is never sent to the client.

The same session loop is reachable over standard input/output, a TCP
listener (one session per connection, states isolated), and the HTTP/
WebSocket service in ``gohr.service``.
"""

from __future__ import annotations

import socketserver
import sys
import threading
from dataclasses import dataclass
from pathlib import Path

from .boards import GenParams, generate_board
from .engine import (
    BOARD_SIZE,
    DEFAULT_GEOMETRY,
    BucketGeometry,
    GameState,
    Move,
    attempt_move,
    cell_to_rowcol,
    init_episode,
)
from .errors import ConfigError, ProtocolError
from .rules import DEFAULT_FEATURES, NUM_BUCKETS, FeatureSet, RuleSpec
from .seeding import derive_rng


@dataclass
class SessionConfig:
    """Server-side description of what a session plays."""

    rule: RuleSpec
    rule_name: str = "rule"
    features: FeatureSet = DEFAULT_FEATURES
    geometry: BucketGeometry = DEFAULT_GEOMETRY
    gen_params: GenParams | None = None
    boards: list | None = None  # scripted curriculum, played in order
    horizon: int | None = 100  # None = unlimited moves per episode
    max_episodes: int | None = None
    seed: int = 0
    transcript_dir: str | None = None

    def __post_init__(self):
        if (self.gen_params is None) == (self.boards is None):
            raise ConfigError(
                "exactly one board source (gen_params or boards) is required")
        if self.horizon is not None and self.horizon < 1:
            raise ConfigError("horizon must be >= 1")


@dataclass
class SessionResult:
    episodes_played: int = 0
    moves: int = 0
    transcript_path: str | None = None


class Session:
    """One client's sequence of episodes; owns its state and RNG stream."""

    def __init__(self, config: SessionConfig, session_index: int = 0):
        self.config = config
        self.session_index = session_index
        self.episode = -1
        self.state: GameState | None = None
        self.result = SessionResult()
        self._rng = derive_rng(config.seed, "session", session_index)
        self._transcript = None
        if config.transcript_dir:
            directory = Path(config.transcript_dir)
            directory.mkdir(parents=True, exist_ok=True)
            path = directory / f"session_{session_index:03d}.csv"
            self._transcript = path.open("w")
            self._transcript.write(
                "episode,move_index,row,col,bucket,verdict,reason,reward\n")
            self._transcript.flush()
            self.result.transcript_path = str(path)

    # -- structured operations (shared by line protocol and HTTP service) --

    def new_episode(self) -> dict:
        limit = self.config.max_episodes
        if limit is not None and self.episode + 1 >= limit:
            raise ProtocolError("no_more_episodes")
        if self.config.boards is not None:
            if self.episode + 1 >= len(self.config.boards):
                raise ProtocolError("no_more_episodes")
            board = self.config.boards[self.episode + 1].copy()
        else:
            board = generate_board(self.config.gen_params,
                                   self.config.features, self._rng)
        self.episode += 1
        self.result.episodes_played += 1
        self.state = init_episode(self.config.rule, board,
                                  self.config.features, self.config.geometry,
                                  rng_seed=self.config.seed)
        return self._snapshot()

    def display(self) -> dict:
        self._require_episode()
        return self._snapshot()

    def move(self, row: int, col: int, bucket: int) -> dict:
        self._require_episode()
        if not 1 <= row <= BOARD_SIZE:
            raise ProtocolError("row_out_of_range")
        if not 1 <= col <= BOARD_SIZE:
            raise ProtocolError("column_out_of_range")
        if not 0 <= bucket < NUM_BUCKETS:
            raise ProtocolError("bucket_out_of_range")
        if self._episode_done():
            # Past the horizon or after completion: no-op, reward 0.
            return self._snapshot() | {"verdict": 1, "reward": 0}
        _, judgment = attempt_move(self.state, Move(row, col, bucket))
        self.result.moves += 1
        self._log_move(row, col, bucket, judgment)
        return self._snapshot() | {
            "verdict": judgment.verdict.value,
            "reward": judgment.reward,
        }

    def close(self) -> None:
        if self._transcript is not None:
            self._transcript.close()
            self._transcript = None

    # -- internals --

    def _require_episode(self) -> None:
        if self.state is None:
            raise ProtocolError("no_episode")

    def _episode_done(self) -> bool:
        horizon = self.config.horizon
        return self.state.episode_over or (
            horizon is not None and self.state.move_count >= horizon)

    def _snapshot(self) -> dict:
        state = self.state
        features = self.config.features
        return {
            "episode": self.episode,
            "move_count": state.move_count,
            "episode_over": self._episode_done(),
            "board": [
                {
                    "cell": p.cell,
                    "row": cell_to_rowcol(p.cell)[0],
                    "col": cell_to_rowcol(p.cell)[1],
                    "shape": features.shapes[p.shape],
                    "color": features.colors[p.color],
                }
                for p in state.board.pieces()
            ],
        }

    def _log_move(self, row, col, bucket, judgment) -> None:
        if self._transcript is None:
            return
        self._transcript.write(
            f"{self.episode},{self.state.move_count},{row},{col},{bucket},"
            f"{judgment.verdict.value},{judgment.reason.value},"
            f"{judgment.reward}\n")
        self._transcript.flush()

    # -- line protocol --

    def handle_line(self, line: str) -> tuple[str, bool]:
        """Process one request line; returns (response line, session over)."""
        try:
            return self._dispatch(line.strip())
        except ProtocolError as exc:
            return f"status=error error={exc}", False

    def _dispatch(self, line: str) -> tuple[str, bool]:
        if not line:
            raise ProtocolError("empty_request")
        parts = line.split()
        command = parts[0].upper()
        if command == "EXIT":
            if len(parts) != 1:
                raise ProtocolError("malformed_request")
            self.close()
            return "status=ok", True
        if command == "NEW":
            if len(parts) != 1:
                raise ProtocolError("malformed_request")
            return _encode(self.new_episode()), False
        if command == "DISPLAY":
            if len(parts) != 1:
                raise ProtocolError("malformed_request")
            return _encode(self.display()), False
        if command == "MOVE":
            if len(parts) != 4:
                raise ProtocolError("malformed_move")
            try:
                row, col, bucket = (int(p) for p in parts[1:])
            except ValueError:
                raise ProtocolError("malformed_move") from None
            return _encode(self.move(row, col, bucket)), False
        raise ProtocolError("unknown_command")


def _encode(payload: dict) -> str:
    parts = [
        "status=ok",
        f"episode={payload['episode']}",
        f"move_count={payload['move_count']}",
        f"episode_over={int(payload['episode_over'])}",
    ]
    if "verdict" in payload:
        parts.append(f"verdict={payload['verdict']}")
        parts.append(f"reward={payload['reward']}")
    board = ",".join(f"{p['cell']}:{p['shape']}:{p['color']}"
                     for p in payload["board"])
    parts.append(f"board={board}")
    return " ".join(parts)


def serve(config: SessionConfig, rfile, wfile,
          session_index: int = 0) -> SessionResult:
    """Run one session's request/response loop over text streams.

    Transport EOF ends the session; transcripts are flushed after every
    move, so a dropped connection loses nothing already answered.
    """
    session = Session(config, session_index)
    try:
        for raw in rfile:
            response, done = session.handle_line(raw)
            wfile.write(response + "\n")
            wfile.flush()
            if done:
                break
    finally:
        session.close()
    return session.result


def serve_stdio(config: SessionConfig) -> SessionResult:
    return serve(config, sys.stdin, sys.stdout, session_index=0)


class _TCPHandler(socketserver.StreamRequestHandler):
    def handle(self):
        server: GameTCPServer = self.server
        index = server.next_session_index()
        rfile = (line.decode("utf-8", "replace") for line in self.rfile)
        wfile = _TextWriter(self.wfile)
        try:
            serve(server.config, rfile, wfile, session_index=index)
        except (ConnectionError, BrokenPipeError):
            pass  # client went away; transcripts are already flushed


class _TextWriter:
    def __init__(self, raw):
        self.raw = raw

    def write(self, text: str) -> None:
        self.raw.write(text.encode("utf-8"))

    def flush(self) -> None:
        self.raw.flush()


class GameTCPServer(socketserver.ThreadingTCPServer):
    """One isolated session per connection."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address, config: SessionConfig):
        super().__init__(address, _TCPHandler)
        self.config = config
        self._counter = 0
        self._lock = threading.Lock()

    def next_session_index(self) -> int:
        with self._lock:
            index = self._counter
            self._counter += 1
            return index


def serve_tcp(config: SessionConfig, host: str, port: int) -> GameTCPServer:
    """Bind and return a running TCP frontend (serve_forever in caller)."""
    return GameTCPServer((host, port), config)
