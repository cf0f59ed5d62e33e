"""Board generation and board files.

Random boards are drawn from experimenter ranges: the generator first
draws the piece count and the distinct color/shape counts uniformly from
their [min, max] ranges, then assigns features so the realized distinct
counts match the draw exactly (coverage enforced by rejection redraws),
then places pieces on distinct cells.

Board files are plain text, one piece per record::

    <cell-label | (x,y)>  <shape-name>  <color-name>

Records for one board are grouped together; a blank line (or a line of
dashes) separates consecutive boards.  ``#`` starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BoardFormatError, InfeasibleParams
from .engine import Board, Piece, xy_to_cell
from .rules import DEFAULT_FEATURES, FeatureSet, NUM_CELLS

_COORD_RE = re.compile(r"^\((\d+),(\d+)\)$")

# Redraw budgets.  Feasible draws fail coverage with probability well
# below 1 for any legal (n, k) pair, so these bounds are never reached in
# practice; they just guarantee termination.
_MAX_TRIPLE_REDRAWS = 1000
_MAX_COVERAGE_REDRAWS = 100_000


@dataclass(frozen=True)
class GenParams:
    min_pieces: int = 9
    max_pieces: int = 9
    min_colors: int = 4
    max_colors: int = 4
    min_shapes: int = 4
    max_shapes: int = 4
    seed: int = 0

    def validate(self, features: FeatureSet) -> None:
        pairs = [
            ("pieces", self.min_pieces, self.max_pieces, NUM_CELLS),
            ("colors", self.min_colors, self.max_colors, len(features.colors)),
            ("shapes", self.min_shapes, self.max_shapes, len(features.shapes)),
        ]
        for name, lo, hi, limit in pairs:
            if not 1 <= lo <= hi:
                raise InfeasibleParams(
                    f"need 1 <= min_{name} <= max_{name}, got [{lo}, {hi}]")
            if hi > limit:
                raise InfeasibleParams(f"max_{name} {hi} exceeds limit {limit}")
        if self.max_pieces < max(self.min_colors, self.min_shapes):
            raise InfeasibleParams(
                "every draw is infeasible: max_pieces "
                f"{self.max_pieces} < required distinct features "
                f"{max(self.min_colors, self.min_shapes)}")


def generate_board(params: GenParams, features: FeatureSet,
                   rng: np.random.Generator) -> Board:
    """Draw one random board from ``params``, consuming ``rng``.

    Draw order (part of the determinism contract): piece count, color
    count, shape count (redrawn together while the triple is infeasible),
    color selection, shape selection, per-piece color/shape assignments
    (redrawn together until coverage), cell placement.
    """
    params.validate(features)

    for _ in range(_MAX_TRIPLE_REDRAWS):
        n = int(rng.integers(params.min_pieces, params.max_pieces + 1))
        k_c = int(rng.integers(params.min_colors, params.max_colors + 1))
        k_s = int(rng.integers(params.min_shapes, params.max_shapes + 1))
        if n >= max(k_c, k_s):
            break
    else:
        raise InfeasibleParams(
            f"could not draw a feasible (pieces, colors, shapes) triple "
            f"from {params}")

    color_pool = rng.choice(len(features.colors), size=k_c, replace=False)
    shape_pool = rng.choice(len(features.shapes), size=k_s, replace=False)

    for _ in range(_MAX_COVERAGE_REDRAWS):
        piece_colors = color_pool[rng.integers(0, k_c, size=n)]
        piece_shapes = shape_pool[rng.integers(0, k_s, size=n)]
        if (len(np.unique(piece_colors)) == k_c
                and len(np.unique(piece_shapes)) == k_s):
            break
    else:
        raise InfeasibleParams(
            f"coverage redraw budget exhausted for n={n}, k_c={k_c}, k_s={k_s}")

    cells = rng.choice(NUM_CELLS, size=n, replace=False) + 1
    return Board(
        Piece(cell=int(c), shape=int(s), color=int(col))
        for c, s, col in zip(cells, piece_shapes, piece_colors))


def board_stream(params: GenParams, features: FeatureSet,
                 rng: np.random.Generator):
    """Endless iterator of boards drawn from one RNG stream."""
    while True:
        yield generate_board(params, features, rng)


# --- board files ---------------------------------------------------------------

def parse_boards(text: str,
                 features: FeatureSet = DEFAULT_FEATURES) -> list[Board]:
    boards: list[Board] = []
    group: list[Piece] = []
    seen_cells: set[int] = set()
    record_index = 0

    def close_group():
        nonlocal group, seen_cells
        if group:
            boards.append(Board(group))
            group = []
            seen_cells = set()

    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line or set(line) == {"-"}:
            close_group()
            continue
        record_index += 1
        fields = line.split()
        if len(fields) != 3:
            raise BoardFormatError(
                f"expected 'cell shape color', got {line!r}", record_index)
        cell = _parse_cell(fields[0], record_index)
        shape_name, color_name = fields[1].lower(), fields[2].lower()
        if shape_name not in features.shapes:
            raise BoardFormatError(f"unknown shape {shape_name!r}", record_index)
        if color_name not in features.colors:
            raise BoardFormatError(f"unknown color {color_name!r}", record_index)
        if cell in seen_cells:
            raise BoardFormatError(f"two pieces on cell {cell}", record_index)
        seen_cells.add(cell)
        group.append(Piece(cell=cell,
                           shape=features.shape_index(shape_name),
                           color=features.color_index(color_name)))
    close_group()
    if not boards:
        raise BoardFormatError("file defines no boards")
    return boards


def _parse_cell(token: str, record_index: int) -> int:
    m = _COORD_RE.match(token)
    if m:
        x, y = int(m.group(1)), int(m.group(2))
        if not (1 <= x <= 6 and 1 <= y <= 6):
            raise BoardFormatError(
                f"coordinates ({x},{y}) outside the 6x6 grid", record_index)
        return xy_to_cell(x, y)
    if token.isdigit():
        cell = int(token)
        if not 1 <= cell <= NUM_CELLS:
            raise BoardFormatError(
                f"cell label {cell} outside 1..{NUM_CELLS}", record_index)
        return cell
    raise BoardFormatError(
        f"bad cell spec {token!r} (want a label or (x,y))", record_index)


def load_boards(path, features: FeatureSet = DEFAULT_FEATURES) -> list[Board]:
    """Read the ordered list of boards from a board file."""
    return parse_boards(Path(path).read_text(encoding="utf-8"), features)


def format_board(board: Board, features: FeatureSet = DEFAULT_FEATURES) -> str:
    lines = [
        f"{p.cell} {features.shapes[p.shape]} {features.colors[p.color]}"
        for p in board.pieces()
    ]
    return "\n".join(lines)


def save_boards(boards, path, features: FeatureSet = DEFAULT_FEATURES) -> None:
    text = "\n\n".join(format_board(b, features) for b in boards)
    Path(path).write_text(text + "\n", encoding="utf-8")
