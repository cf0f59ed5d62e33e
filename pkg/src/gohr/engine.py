"""Deterministic board-clearing game engine.

Executes a RuleSpec over a 6x6 board: adjudicates (row, column, bucket)
moves, maintains per-line metering, advances control between rule lines,
tracks the p/pc/ps history registers, and detects episode completion
(board cleared, or rule fully satisfied with pieces remaining).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .errors import MalformedMove, ValidationError
from .rules import (
    NUM_BUCKETS,
    NUM_CELLS,
    Atom,
    BucketArith,
    BucketExpr,
    BucketList,
    BucketLit,
    BucketVar,
    DEFAULT_FEATURES,
    FeatureSet,
    Nearby,
    Remotest,
    RuleSpec,
)

BOARD_SIZE = 6


# --- geometry ----------------------------------------------------------------
#
# Cell label L in 1..36 is row-major from the top-left:
#   column x = ((L-1) % 6) + 1, row-from-top = ((L-1) // 6) + 1, y = 7 - row.
# Buckets sit outside the grid at the four corners; ids ascend clockwise
# from the top-left, with 0/1 the top corners and 2/3 the bottom ones.

@dataclass(frozen=True)
class BucketGeometry:
    corners: tuple[tuple[int, int], ...] = ((0, 7), (7, 7), (7, 0), (0, 0))

    def __post_init__(self):
        if len(self.corners) != NUM_BUCKETS or len(set(self.corners)) != NUM_BUCKETS:
            raise ValidationError("bucket geometry must map 4 ids to 4 corners")


DEFAULT_GEOMETRY = BucketGeometry()


def cell_to_xy(cell: int) -> tuple[int, int]:
    return (cell - 1) % BOARD_SIZE + 1, 7 - ((cell - 1) // BOARD_SIZE + 1)


def cell_to_rowcol(cell: int) -> tuple[int, int]:
    return (cell - 1) // BOARD_SIZE + 1, (cell - 1) % BOARD_SIZE + 1


def rowcol_to_cell(row: int, col: int) -> int:
    return (row - 1) * BOARD_SIZE + col


def xy_to_cell(x: int, y: int) -> int:
    return (6 - y) * BOARD_SIZE + x


# --- board -------------------------------------------------------------------

@dataclass(frozen=True)
class Piece:
    """A game piece: cell label plus shape/color indices into a FeatureSet."""

    cell: int
    shape: int
    color: int


class Board:
    """Mutable set of pieces with at most one piece per cell."""

    def __init__(self, pieces=()):
        self._by_cell: dict[int, Piece] = {}
        for piece in pieces:
            self.add(piece)

    def add(self, piece: Piece) -> None:
        if not 1 <= piece.cell <= NUM_CELLS:
            raise ValidationError(f"cell label {piece.cell} outside 1..{NUM_CELLS}")
        if piece.cell in self._by_cell:
            raise ValidationError(f"two pieces on cell {piece.cell}")
        self._by_cell[piece.cell] = piece

    def remove(self, cell: int) -> Piece:
        return self._by_cell.pop(cell)

    def piece_at(self, cell: int) -> Piece | None:
        return self._by_cell.get(cell)

    def pieces(self) -> tuple[Piece, ...]:
        return tuple(self._by_cell[c] for c in sorted(self._by_cell))

    def copy(self) -> "Board":
        return Board(self.pieces())

    def __len__(self) -> int:
        return len(self._by_cell)

    def __eq__(self, other) -> bool:
        return isinstance(other, Board) and self._by_cell == other._by_cell

    def __repr__(self) -> str:
        return f"Board({list(self.pieces())!r})"


# --- moves and judgments -----------------------------------------------------

@dataclass(frozen=True)
class Move:
    row: int  # 1..6, counted from the top
    col: int  # 1..6, counted from the left
    bucket: int  # 0..3

    @property
    def cell(self) -> int:
        return rowcol_to_cell(self.row, self.col)


class Verdict(enum.Enum):
    ACCEPT = 0
    REJECT = 1


class Reason(enum.Enum):
    ACCEPTED = "ACCEPTED"
    EMPTY_CELL = "EMPTY_CELL"
    NO_MATCHING_ATOM = "NO_MATCHING_ATOM"
    ATOM_EXHAUSTED_ONLY = "ATOM_EXHAUSTED_ONLY"
    EPISODE_OVER = "EPISODE_OVER"


@dataclass(frozen=True)
class Judgment:
    verdict: Verdict
    reason: Reason
    reward: int  # 0 on accept or after completion, -1 on a live reject
    episode_over: bool


# --- rule execution state ------------------------------------------------------

@dataclass
class HistoryRegisters:
    """Buckets of the most recent accepted move, overall and per color/shape."""

    p: int | None = None
    pc: dict[int, int] = field(default_factory=dict)  # color index -> bucket
    ps: dict[int, int] = field(default_factory=dict)  # shape index -> bucket


@dataclass(frozen=True)
class _CompiledAtom:
    count: int | None
    shapes: frozenset | None  # shape indices, None = wildcard
    colors: frozenset | None
    cells: frozenset | None
    buckets: BucketExpr

    def matches_piece(self, piece: Piece) -> bool:
        return ((self.shapes is None or piece.shape in self.shapes)
                and (self.colors is None or piece.color in self.colors)
                and (self.cells is None or piece.cell in self.cells))


@dataclass(frozen=True)
class _CompiledLine:
    count: int | None
    atoms: tuple[_CompiledAtom, ...]


def compile_rule(rule: RuleSpec, features: FeatureSet) -> tuple[_CompiledLine, ...]:
    """Resolve shape/color names to indices for fast matching."""

    def compile_atom(atom: Atom) -> _CompiledAtom:
        try:
            shapes = (None if atom.shapes is None else
                      frozenset(features.shape_index(s) for s in atom.shapes))
            colors = (None if atom.colors is None else
                      frozenset(features.color_index(c) for c in atom.colors))
        except ValueError as exc:
            raise ValidationError(f"rule names a feature outside the "
                                  f"experiment's feature set: {exc}") from exc
        cells = None if atom.positions is None else frozenset(atom.positions)
        return _CompiledAtom(atom.count, shapes, colors, cells, atom.buckets)

    return tuple(
        _CompiledLine(line.count, tuple(compile_atom(a) for a in line.atoms))
        for line in rule.lines)


@dataclass
class GameState:
    """Board plus rule-execution state for one episode."""

    board: Board
    rule: RuleSpec
    features: FeatureSet
    geometry: BucketGeometry
    compiled: tuple[_CompiledLine, ...]
    active_line: int
    atom_counts: list  # remaining count per atom of the active line; None = unmetered
    line_count: int | None
    registers: HistoryRegisters
    move_count: int = 0
    transcript: list = field(default_factory=list)  # [(Move, Judgment)]
    episode_over: bool = False
    rng_seed: int = 0
    # (shape, color, bucket) of the most recent accepted move; None before
    # the first acceptance of the episode.
    last_accept: tuple[int, int, int] | None = None

    @property
    def cleared(self) -> bool:
        return len(self.board) == 0


# --- bucket expression evaluation ---------------------------------------------

def eval_bucket_expr(expr: BucketExpr, piece: Piece,
                     registers: HistoryRegisters,
                     geometry: BucketGeometry = DEFAULT_GEOMETRY) -> set[int]:
    """Buckets admitted by ``expr`` for ``piece`` given the history registers.

    Register expressions over an unset register evaluate to the empty set.
    nearby/remotest return every bucket tied for min/max Euclidean distance
    from the piece's cell.
    """
    match expr:
        case BucketLit(value):
            return {value}
        case BucketList(items):
            out: set[int] = set()
            for item in items:
                out |= eval_bucket_expr(item, piece, registers, geometry)
            return out
        case BucketVar(name):
            base = _register_value(name, piece, registers)
            return set() if base is None else {base % NUM_BUCKETS}
        case BucketArith(var, offset):
            base = _register_value(var, piece, registers)
            return set() if base is None else {(base + offset) % NUM_BUCKETS}
        case Nearby():
            return _extreme_buckets(piece, geometry, want_max=False)
        case Remotest():
            return _extreme_buckets(piece, geometry, want_max=True)
    raise TypeError(f"not a bucket expression: {expr!r}")


def _register_value(name: str, piece: Piece,
                    registers: HistoryRegisters) -> int | None:
    if name == "p":
        return registers.p
    if name == "pc":
        return registers.pc.get(piece.color)
    if name == "ps":
        return registers.ps.get(piece.shape)
    raise ValidationError(f"unknown register {name!r}")


def _extreme_buckets(piece: Piece, geometry: BucketGeometry,
                     want_max: bool) -> set[int]:
    x, y = cell_to_xy(piece.cell)
    dists = [math.hypot(x - bx, y - by) for bx, by in geometry.corners]
    target = max(dists) if want_max else min(dists)
    return {b for b, d in enumerate(dists) if d == target}


# --- adjudication --------------------------------------------------------------

def _live_atom_indices(state: GameState):
    line = state.compiled[state.active_line]
    return [i for i, atom in enumerate(line.atoms)
            if state.atom_counts[i] is None or state.atom_counts[i] > 0]


def _admitted_buckets(state: GameState, piece: Piece, atom_indices) -> set[int]:
    line = state.compiled[state.active_line]
    buckets: set[int] = set()
    for i in atom_indices:
        atom = line.atoms[i]
        if atom.matches_piece(piece):
            buckets |= eval_bucket_expr(atom.buckets, piece, state.registers,
                                        state.geometry)
    return buckets


def legal_moves(state: GameState) -> list[Move]:
    """All (piece, bucket) moves the active line currently accepts.

    Returned sorted by (row, col, bucket) so downstream consumers are
    deterministic.  Empty when the episode is over.
    """
    if state.episode_over:
        return []
    if state.line_count is not None and state.line_count <= 0:
        return []
    live = _live_atom_indices(state)
    moves: list[Move] = []
    for piece in state.board.pieces():
        row, col = cell_to_rowcol(piece.cell)
        for b in sorted(_admitted_buckets(state, piece, live)):
            moves.append(Move(row, col, b))
    return moves


def _has_legal_move(state: GameState) -> bool:
    if state.line_count is not None and state.line_count <= 0:
        return False
    live = _live_atom_indices(state)
    if not live:
        return False
    for piece in state.board.pieces():
        if _admitted_buckets(state, piece, live):
            return True
    return False


def _reset_line(state: GameState, line_index: int) -> None:
    line = state.compiled[line_index]
    state.active_line = line_index
    state.atom_counts = [a.count for a in line.atoms]
    state.line_count = line.count


def settle_control(state: GameState) -> GameState:
    """Advance control until the active line has a legal move, or finish.

    Advancing wraps past the last line to the first and resets the counts
    of each line as it becomes active.  A full cycle with every line
    freshly reset and still no legal move means the rule is fully
    satisfied: the episode ends even if pieces remain.  An empty board
    always ends the episode.
    """
    if len(state.board) == 0:
        state.episode_over = True
        return state
    if _has_legal_move(state):
        return state
    n_lines = len(state.compiled)
    for step in range(1, n_lines + 1):
        _reset_line(state, (state.active_line + 1) % n_lines)
        if _has_legal_move(state):
            return state
    state.episode_over = True
    return state


def init_episode(rule: RuleSpec, board: Board,
                 features: FeatureSet = DEFAULT_FEATURES,
                 geometry: BucketGeometry = DEFAULT_GEOMETRY,
                 rng_seed: int = 0) -> GameState:
    """Start an episode: first line active, fresh counts, registers unset."""
    compiled = compile_rule(rule, features)
    state = GameState(
        board=board,
        rule=rule,
        features=features,
        geometry=geometry,
        compiled=compiled,
        active_line=0,
        atom_counts=[a.count for a in compiled[0].atoms],
        line_count=compiled[0].count,
        registers=HistoryRegisters(),
        rng_seed=rng_seed,
    )
    return settle_control(state)


def attempt_move(state: GameState, move: Move) -> tuple[GameState, Judgment]:
    """Adjudicate one move, updating the state in place.

    Accepted moves remove the piece, charge every satisfied atom (and the
    line count, if metered), update the p/pc/ps registers, and re-settle
    control.  Rejected moves leave the board and control untouched and
    pay -1.  Moves after the episode is over are no-ops with reward 0.
    """
    if not (1 <= move.row <= BOARD_SIZE and 1 <= move.col <= BOARD_SIZE
            and 0 <= move.bucket < NUM_BUCKETS):
        raise MalformedMove(f"move out of range: {move}")

    if state.episode_over:
        judgment = Judgment(Verdict.REJECT, Reason.EPISODE_OVER, 0, True)
        state.transcript.append((move, judgment))
        state.move_count += 1
        return state, judgment

    piece = state.board.piece_at(move.cell)
    if piece is None:
        judgment = Judgment(Verdict.REJECT, Reason.EMPTY_CELL, -1, False)
    else:
        live = _live_atom_indices(state)
        if (state.line_count is None or state.line_count > 0) and \
                move.bucket in _admitted_buckets(state, piece, live):
            _apply_accept(state, piece, move.bucket, live)
            judgment = Judgment(Verdict.ACCEPT, Reason.ACCEPTED, 0,
                                state.episode_over)
        else:
            exhausted = [i for i in range(len(state.atom_counts))
                         if i not in live]
            reason = (Reason.ATOM_EXHAUSTED_ONLY
                      if move.bucket in _admitted_buckets(state, piece, exhausted)
                      else Reason.NO_MATCHING_ATOM)
            judgment = Judgment(Verdict.REJECT, reason, -1, False)

    state.transcript.append((move, judgment))
    state.move_count += 1
    return state, judgment


def _apply_accept(state: GameState, piece: Piece, bucket: int, live) -> None:
    line = state.compiled[state.active_line]
    for i in live:
        atom = line.atoms[i]
        if state.atom_counts[i] is not None and atom.matches_piece(piece) and \
                bucket in eval_bucket_expr(atom.buckets, piece, state.registers,
                                           state.geometry):
            state.atom_counts[i] -= 1
    if state.line_count is not None:
        state.line_count -= 1
    state.board.remove(piece.cell)
    state.registers.p = bucket
    state.registers.pc[piece.color] = bucket
    state.registers.ps[piece.shape] = bucket
    state.last_accept = (piece.shape, piece.color, bucket)
    settle_control(state)


# --- episode driver ------------------------------------------------------------

@dataclass
class EpisodeResult:
    moves_used: int
    error_count: int  # rejected moves (reward -1)
    cleared: bool
    transcript: list
    state: GameState


def run_episode(rule: RuleSpec, board: Board, policy, horizon: int,
                features: FeatureSet = DEFAULT_FEATURES,
                geometry: BucketGeometry = DEFAULT_GEOMETRY) -> EpisodeResult:
    """Drive one episode with ``policy(state) -> Move`` for up to ``horizon`` moves.

    The board is played in place; pass ``board.copy()`` to keep the
    original.
    """
    if horizon < 1:
        raise ValidationError(f"horizon must be >= 1, got {horizon}")
    state = init_episode(rule, board, features, geometry)
    errors = 0
    while not state.episode_over and state.move_count < horizon:
        _, judgment = attempt_move(state, policy(state))
        if judgment.reward < 0:
            errors += 1
    return EpisodeResult(
        moves_used=state.move_count,
        error_count=errors,
        cleared=state.cleared,
        transcript=list(state.transcript),
        state=state,
    )


def oracle_policy(state: GameState) -> Move:
    """Always plays the first legal move; useful for smoke-testing rules."""
    moves = legal_moves(state)
    if not moves:
        raise ValidationError("oracle asked to move with no legal move")
    return moves[0]
