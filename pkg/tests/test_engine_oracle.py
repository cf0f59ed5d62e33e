"""Engine vs naive reference interpreter.

The reference re-derives the active line, counts, registers, and board
from the full move history at every step; the engine must agree on every
verdict and every piece of post-move state.  The full 1e5-case sweep
lives in the acceptance suite; this is the fast development slice.
"""

from gohr.engine import Verdict, attempt_move, init_episode
from gohr.rules import DEFAULT_FEATURES
from gohr.seeding import make_rng

from tests.generators import next_move, random_board, random_rule
from tests.naive_interpreter import NaiveState, judge_from_scratch


def engine_snapshot(state):
    return {
        "over": state.episode_over,
        "active": state.active_line,
        "counts": list(state.atom_counts),
        "line_count": state.line_count,
        "p": state.registers.p,
        "pc": dict(sorted(state.registers.pc.items())),
        "ps": dict(sorted(state.registers.ps.items())),
        "cells": sorted(p.cell for p in state.board.pieces()),
    }


def run_case(rng, features, moves_per_case=10):
    rule = random_rule(rng, features)
    board = random_board(rng, features)
    initial = [(p.cell, features.shapes[p.shape], features.colors[p.color])
               for p in board.pieces()]

    state = init_episode(rule, board)
    moves = []
    engine_results = []
    for _ in range(moves_per_case):
        move = next_move(rng, state)
        moves.append((move.row, move.col, move.bucket))
        _, judgment = attempt_move(state, move)
        verdict = "ACCEPT" if judgment.verdict is Verdict.ACCEPT else "REJECT"
        engine_results.append((verdict, judgment.reward,
                               engine_snapshot(state)))

    naive_results = judge_from_scratch(rule, features, initial, moves)
    return rule, initial, moves, engine_results, naive_results


def assert_case_matches(rule, initial, moves, engine_results, naive_results):
    for step, (engine_r, naive_r) in enumerate(zip(engine_results,
                                                   naive_results)):
        assert engine_r == naive_r, (
            f"divergence at step {step}\n"
            f"rule: {rule}\nboard: {initial}\nmoves: {moves}\n"
            f"engine: {engine_r}\nnaive:  {naive_r}")


def test_engine_matches_naive_interpreter_quick():
    rng = make_rng(20240501)
    for _ in range(2000):
        assert_case_matches(*run_case(rng, DEFAULT_FEATURES))


def test_naive_interpreter_settles_like_engine_at_init():
    rng = make_rng(97)
    for _ in range(500):
        rule = random_rule(rng, DEFAULT_FEATURES)
        board = random_board(rng, DEFAULT_FEATURES)
        initial = {p.cell: (DEFAULT_FEATURES.shapes[p.shape],
                            DEFAULT_FEATURES.colors[p.color])
                   for p in board.pieces()}
        state = init_episode(rule, board)
        naive = NaiveState(rule, initial)
        assert naive.over == state.episode_over
        if not naive.over:
            assert naive.active == state.active_line
            assert naive.counts == list(state.atom_counts)
            assert naive.line_count == state.line_count
