"""Naive reference interpreter for the game engine.

Independent oracle: instead of maintaining incremental state, it
re-derives the active line, all counts, the registers, and the board
from the full move history on every step, using its own name-based data
representation and predicate-style matching.  Deliberately slow and
simple; used to cross-check engine verdicts and state.
"""

from __future__ import annotations

from gohr.rules import (
    BucketArith,
    BucketList,
    BucketLit,
    BucketVar,
    Nearby,
    Remotest,
)

BUCKET_XY = {0: (0, 7), 1: (7, 7), 2: (7, 0), 3: (0, 0)}


def cell_xy(cell):
    x = (cell - 1) % 6 + 1
    y = 6 - (cell - 1) // 6
    return x, y


def _dist2(cell, bucket):
    x, y = cell_xy(cell)
    bx, by = BUCKET_XY[bucket]
    return (x - bx) ** 2 + (y - by) ** 2


def _bucket_admits(expr, bucket, cell, shape_name, color_name, regs):
    """Predicate: does this expression admit `bucket` for this piece?"""
    if isinstance(expr, BucketLit):
        return bucket == expr.value
    if isinstance(expr, BucketList):
        return any(_bucket_admits(e, bucket, cell, shape_name, color_name, regs)
                   for e in expr.items)
    if isinstance(expr, (BucketVar, BucketArith)):
        name = expr.name if isinstance(expr, BucketVar) else expr.var
        offset = 0 if isinstance(expr, BucketVar) else expr.offset
        if name == "p":
            base = regs["p"]
        elif name == "pc":
            base = regs["pc"].get(color_name)
        else:
            base = regs["ps"].get(shape_name)
        if base is None:
            return False
        return bucket == (base + offset) % 4
    if isinstance(expr, Nearby):
        return _dist2(cell, bucket) == min(_dist2(cell, b) for b in range(4))
    if isinstance(expr, Remotest):
        return _dist2(cell, bucket) == max(_dist2(cell, b) for b in range(4))
    raise TypeError(expr)


def _atom_admits(atom, counts, i, cell, shape_name, color_name, bucket, regs):
    if atom.count is not None and counts[i] <= 0:
        return False
    if atom.shapes is not None and shape_name not in atom.shapes:
        return False
    if atom.colors is not None and color_name not in atom.colors:
        return False
    if atom.positions is not None and cell not in atom.positions:
        return False
    return _bucket_admits(atom.buckets, bucket, cell, shape_name, color_name,
                          regs)


def _any_move_exists(line, counts, line_count, pieces, regs):
    if line.count is not None and line_count <= 0:
        return False
    for cell, (shape_name, color_name) in pieces.items():
        for bucket in range(4):
            for i, atom in enumerate(line.atoms):
                if _atom_admits(atom, counts, i, cell, shape_name, color_name,
                                bucket, regs):
                    return True
    return False


class NaiveState:
    def __init__(self, rule, pieces):
        self.rule = rule
        self.pieces = dict(pieces)  # cell -> (shape name, color name)
        self.active = 0
        self.counts = [a.count for a in rule.lines[0].atoms]
        self.line_count = rule.lines[0].count
        self.regs = {"p": None, "pc": {}, "ps": {}}
        self.over = False
        self._settle()

    def _settle(self):
        if not self.pieces:
            self.over = True
            return
        n = len(self.rule.lines)
        for attempt in range(n + 1):
            line = self.rule.lines[self.active]
            if _any_move_exists(line, self.counts, self.line_count,
                                self.pieces, self.regs):
                return
            if attempt == n:
                break
            self.active = (self.active + 1) % n
            line = self.rule.lines[self.active]
            self.counts = [a.count for a in line.atoms]
            self.line_count = line.count
        self.over = True

    def play(self, move):
        """Adjudicate (row, col, bucket); returns (verdict, reward)."""
        row, col, bucket = move
        cell = (row - 1) * 6 + col
        if self.over:
            return "REJECT", 0
        if cell not in self.pieces:
            return "REJECT", -1
        shape_name, color_name = self.pieces[cell]
        line = self.rule.lines[self.active]
        if self.line_count is not None and self.line_count <= 0:
            return "REJECT", -1
        satisfied = [
            i for i, atom in enumerate(line.atoms)
            if _atom_admits(atom, self.counts, i, cell, shape_name, color_name,
                            bucket, self.regs)
        ]
        if not satisfied:
            return "REJECT", -1
        for i in satisfied:
            if line.atoms[i].count is not None:
                self.counts[i] -= 1
        if line.count is not None:
            self.line_count -= 1
        del self.pieces[cell]
        self.regs["p"] = bucket
        self.regs["pc"][color_name] = bucket
        self.regs["ps"][shape_name] = bucket
        self._settle()
        return "ACCEPT", 0

    def snapshot(self, features):
        """State in the engine's index-based vocabulary, for comparison."""
        return {
            "over": self.over,
            "active": self.active,
            "counts": list(self.counts),
            "line_count": self.line_count,
            "p": self.regs["p"],
            "pc": {features.color_index(c): b
                   for c, b in sorted(self.regs["pc"].items())},
            "ps": {features.shape_index(s): b
                   for s, b in sorted(self.regs["ps"].items())},
            "cells": sorted(self.pieces),
        }


def judge_from_scratch(rule, features, initial_pieces, moves):
    """Replay the full history for every step; yields (verdict, reward, snap).

    initial_pieces: iterable of (cell, shape name, color name).
    moves: list of (row, col, bucket).
    """
    results = []
    for k in range(len(moves)):
        state = NaiveState(rule, {c: (s, col) for c, s, col in initial_pieces})
        for past in moves[:k]:
            state.play(past)
        verdict, reward = state.play(moves[k])
        results.append((verdict, reward, state.snapshot(features)))
    return results
