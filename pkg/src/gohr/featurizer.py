"""Boolean feature map for (state, action) pairs.

An action addresses one cell and one bucket.  The feature vector stacks
four indicator families, in this order:

1. unary: color of the addressed cell, shape of the addressed cell,
   target bucket;
2. current-step pairs: (color, shape), (color, bucket), (shape, bucket)
   of the addressed cell / target bucket;
3. last-accepted x current pairs: (last color, color), (last shape,
   shape), (last bucket, bucket), where the "last" value may be the
   empty marker before the first accepted move of an episode;
4. last-accepted pair x current pair, nine tables: last pair in
   [(shape, color), (shape, bucket), (color, bucket)] crossed with
   current pair in the same order, with empty markers on the last side.

Within every block indices are lexicographic, leftmost component major,
using the feature-set order for shapes/colors, buckets 0..3, and the
empty marker ordered last.  An action on an empty cell sets only the two
bucket-dependent bits.  For the default 4-shape/4-color set the families
have sizes 12, 48, 60, and 3600: 3720 bits total, 18 of them set for an
occupied cell.

This frozen ordering is LAYOUT_VERSION 1; exported weight vectors carry
the version so they stay portable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .engine import GameState, Move, cell_to_rowcol
from .rules import NUM_BUCKETS, NUM_CELLS, FeatureSet

LAYOUT_VERSION = 1

NUM_ACTIONS = NUM_CELLS * NUM_BUCKETS  # 144

# Slots per action: 3 unary + 3 binary + 3 last-x-current + 9 tables.
SLOTS = 18


def move_to_action(move: Move) -> int:
    return (move.cell - 1) * NUM_BUCKETS + move.bucket


def action_to_move(action: int) -> Move:
    cell, bucket = divmod(action, NUM_BUCKETS)
    row, col = cell_to_rowcol(cell + 1)
    return Move(row, col, bucket)


@dataclass(frozen=True)
class FeatureLayout:
    """Index arithmetic for the four feature families."""

    num_colors: int = 4
    num_shapes: int = 4
    offsets: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        C, S, B = self.num_colors, self.num_shapes, NUM_BUCKETS
        off: dict[str, int] = {}
        pos = 0
        # family 1
        off["u_color"] = pos; pos += C
        off["u_shape"] = pos; pos += S
        off["u_bucket"] = pos; pos += B
        # family 2
        off["cs"] = pos; pos += C * S
        off["cb"] = pos; pos += C * B
        off["sb"] = pos; pos += S * B
        # family 3 (last side has an empty slot, ordered last)
        off["lc_c"] = pos; pos += (C + 1) * C
        off["ls_s"] = pos; pos += (S + 1) * S
        off["lb_b"] = pos; pos += (B + 1) * B
        # family 4: last pair group x current pair, nine tables
        last_sizes = [(S + 1) * (C + 1), (S + 1) * (B + 1), (C + 1) * (B + 1)]
        cur_sizes = [S * C, S * B, C * B]
        for g in range(3):
            for q in range(3):
                off[f"t{g}{q}"] = pos
                pos += last_sizes[g] * cur_sizes[q]
        object.__setattr__(self, "offsets", off)
        object.__setattr__(self, "_dim", pos)

    @classmethod
    def for_features(cls, features: FeatureSet) -> "FeatureLayout":
        return cls(num_colors=len(features.colors),
                   num_shapes=len(features.shapes))

    @property
    def dimension(self) -> int:
        return self._dim

    @property
    def family_sizes(self) -> tuple[int, int, int, int]:
        C, S, B = self.num_colors, self.num_shapes, NUM_BUCKETS
        f1 = C + S + B
        f2 = C * S + C * B + S * B
        f3 = (C + 1) * C + (S + 1) * S + (B + 1) * B
        f4 = ((S + 1) * (C + 1) + (S + 1) * (B + 1) + (C + 1) * (B + 1)) * f2
        return f1, f2, f3, f4


DEFAULT_LAYOUT = FeatureLayout()


def feature_indices(layout: FeatureLayout,
                    cur_shape: int | None, cur_color: int | None, bucket: int,
                    last_shape: int | None, last_color: int | None,
                    last_bucket: int | None) -> np.ndarray:
    """Sorted indices of the set bits for one (state, action) pair.

    ``cur_shape``/``cur_color`` are None when the addressed cell is empty;
    the three ``last_*`` values are None together before the first
    accepted move of the episode.
    """
    C, S, B = layout.num_colors, layout.num_shapes, NUM_BUCKETS
    off = layout.offsets
    ls = S if last_shape is None else last_shape
    lc = C if last_color is None else last_color
    lb = B if last_bucket is None else last_bucket

    idx = [off["u_bucket"] + bucket,
           off["lb_b"] + lb * B + bucket]
    if cur_shape is not None:
        s, c = cur_shape, cur_color
        idx += [
            off["u_color"] + c,
            off["u_shape"] + s,
            off["cs"] + c * S + s,
            off["cb"] + c * B + bucket,
            off["sb"] + s * B + bucket,
            off["lc_c"] + lc * C + c,
            off["ls_s"] + ls * S + s,
        ]
        last_pair = [ls * (C + 1) + lc, ls * (B + 1) + lb, lc * (B + 1) + lb]
        cur_pair = [s * C + c, s * B + bucket, c * B + bucket]
        cur_sizes = [S * C, S * B, C * B]
        for g in range(3):
            for q in range(3):
                idx.append(off[f"t{g}{q}"] + last_pair[g] * cur_sizes[q]
                           + cur_pair[q])
    return np.array(sorted(idx), dtype=np.int32)


def featurize(state: GameState, move: Move,
              layout: FeatureLayout | None = None) -> np.ndarray:
    """Dense Boolean feature vector for acting on ``move`` in ``state``."""
    if layout is None:
        layout = FeatureLayout.for_features(state.features)
    piece = state.board.piece_at(move.cell)
    last = state.last_accept or (None, None, None)
    idx = feature_indices(
        layout,
        None if piece is None else piece.shape,
        None if piece is None else piece.color,
        move.bucket,
        *last,
    )
    vec = np.zeros(layout.dimension, dtype=bool)
    vec[idx] = True
    return vec


def board_arrays(state: GameState) -> tuple[np.ndarray, np.ndarray]:
    """Per-cell shape/color index arrays (entry -1 = empty), 1-indexed."""
    shape_at = np.full(NUM_CELLS + 1, -1, dtype=np.int64)
    color_at = np.full(NUM_CELLS + 1, -1, dtype=np.int64)
    for piece in state.board.pieces():
        shape_at[piece.cell] = piece.shape
        color_at[piece.cell] = piece.color
    return shape_at, color_at


def all_action_indices(layout: FeatureLayout,
                       shape_at: np.ndarray, color_at: np.ndarray,
                       last: tuple | None) -> np.ndarray:
    """Feature indices for all 144 actions, shape (144, 18) int32.

    Rows are ordered cell-major then bucket (the canonical action order).
    Unused slots (empty cells set only 2 bits) are padded with
    ``layout.dimension`` so a weight vector extended with one trailing
    zero can be gathered directly.
    """
    C, S, B = layout.num_colors, layout.num_shapes, NUM_BUCKETS
    off = layout.offsets
    pad = layout.dimension
    if last is None:
        ls, lc, lb = S, C, B
    else:
        ls, lc, lb = last

    s = shape_at[1:]  # (36,)
    c = color_at[1:]
    occupied = s >= 0
    b = np.arange(B)  # (4,)

    cols = np.empty((NUM_CELLS, B, SLOTS), dtype=np.int64)
    cols[:, :, 0] = off["u_bucket"] + b
    cols[:, :, 1] = off["lb_b"] + lb * B + b
    cols[:, :, 2] = (off["u_color"] + c)[:, None]
    cols[:, :, 3] = (off["u_shape"] + s)[:, None]
    cols[:, :, 4] = (off["cs"] + c * S + s)[:, None]
    cols[:, :, 5] = (off["cb"] + c * B)[:, None] + b
    cols[:, :, 6] = (off["sb"] + s * B)[:, None] + b
    cols[:, :, 7] = (off["lc_c"] + lc * C + c)[:, None]
    cols[:, :, 8] = (off["ls_s"] + ls * S + s)[:, None]

    last_pair = [ls * (C + 1) + lc, ls * (B + 1) + lb, lc * (B + 1) + lb]
    cur_pair = [(s * C + c)[:, None] + 0 * b, s[:, None] * B + b,
                c[:, None] * B + b]
    cur_sizes = [S * C, S * B, C * B]
    slot = 9
    for g in range(3):
        for q in range(3):
            cols[:, :, slot] = (off[f"t{g}{q}"] + last_pair[g] * cur_sizes[q]
                                + cur_pair[q])
            slot += 1

    cols[~occupied, :, 2:] = pad
    return cols.reshape(NUM_ACTIONS, SLOTS).astype(np.int32)
