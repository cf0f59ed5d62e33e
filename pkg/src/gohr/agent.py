"""Reference learner: linear Q-function, experience replay, epsilon-greedy.

The Q-function is linear in the Boolean feature map, trained by
stochastic gradient steps on the squared error against targets formed
with a separate, less frequently refreshed target weight vector.  The
behavior policy is epsilon-greedy over all 144 (row, column, bucket)
actions with an exponentially decaying epsilon; every move, accepted or
rejected, advances the decay clock.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .boards import GenParams, generate_board
from .engine import (
    Board,
    GameState,
    Move,
    Verdict,
    attempt_move,
    init_episode,
)
from .errors import ValidationError
from .featurizer import (
    NUM_ACTIONS,
    SLOTS,
    FeatureLayout,
    action_to_move,
    all_action_indices,
    board_arrays,
)
from .rules import DEFAULT_FEATURES, FeatureSet, RuleSpec
from .seeding import derive_rng

LAYOUT_VERSION = 1


@dataclass(frozen=True)
class Hyperparams:
    buffer_size: int = 1000
    batch_size: int = 128
    horizon: int = 100
    episodes: int = 200
    trials: int = 100
    epsilon_start: float = 0.9
    epsilon_min: float = 0.001
    epsilon_decay_moves: float = 200.0
    gamma: float = 1.0
    learning_rate: float = 0.01
    target_update_episodes: int = 5
    # Bootstrap at non-terminal successors (standard).  The flipped form
    # bootstraps only at terminal ones; exposed for comparison runs.
    literal_terminal_indicator: bool = False

    def __post_init__(self):
        if min(self.buffer_size, self.batch_size, self.horizon, self.episodes,
               self.trials, self.target_update_episodes) < 1:
            raise ValidationError("hyperparameters must be positive")
        if not self.epsilon_min < self.epsilon_start:
            raise ValidationError("need epsilon_min < epsilon_start")

    def with_overrides(self, **kwargs) -> "Hyperparams":
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})


def epsilon(total_moves: int, start: float = 0.9, floor: float = 0.001,
            decay_moves: float = 200.0) -> float:
    """Exploration rate after ``total_moves`` moves of the trial."""
    return floor + (start - floor) * math.exp(-total_moves / decay_moves)


def q_value(theta: np.ndarray, phi: np.ndarray) -> float:
    """Inner product of a weight vector with a (Boolean) feature vector."""
    if theta.shape != phi.shape:
        raise ValidationError(
            f"dimension mismatch: theta {theta.shape} vs phi {phi.shape}")
    return float(theta @ phi)


class ReplayBuffer:
    """Bounded FIFO of transitions with uniform sampling.

    Stores, per transition: the taken action's feature indices, the
    reward, the successor state's feature indices for every action, and
    the terminal flag.  Index arrays are padded with the layout dimension
    so gathers against a zero-extended weight vector need no masking.
    """

    def __init__(self, capacity: int, layout: FeatureLayout):
        self.capacity = capacity
        self.phi = np.zeros((capacity, SLOTS), dtype=np.int32)
        self.reward = np.zeros(capacity, dtype=np.float64)
        self.succ = np.zeros((capacity, NUM_ACTIONS, SLOTS), dtype=np.int32)
        self.terminal = np.zeros(capacity, dtype=bool)
        self.size = 0
        self._next = 0

    def push(self, phi_idx, reward, succ_idx, terminal) -> None:
        i = self._next
        self.phi[i] = phi_idx
        self.reward[i] = reward
        self.succ[i] = succ_idx
        self.terminal[i] = terminal
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        if self.size == 0:
            raise ValidationError("cannot sample from an empty buffer")
        return rng.integers(0, self.size, size=batch_size)


@dataclass
class AgentState:
    """Everything the learner carries across steps of one trial."""

    layout: FeatureLayout
    hyper: Hyperparams
    theta_ext: np.ndarray  # dimension D+1; trailing slot pinned to 0
    target_ext: np.ndarray
    buffer: ReplayBuffer
    total_moves: int = 0
    last_successful: tuple | None = None  # (shape, color, bucket)

    @property
    def theta(self) -> np.ndarray:
        return self.theta_ext[:-1]


def new_agent(layout: FeatureLayout, hyper: Hyperparams) -> AgentState:
    d = layout.dimension
    return AgentState(
        layout=layout,
        hyper=hyper,
        theta_ext=np.zeros(d + 1),
        target_ext=np.zeros(d + 1),
        buffer=ReplayBuffer(hyper.buffer_size, layout),
    )


def greedy_actions(theta_ext: np.ndarray, action_idx: np.ndarray) -> np.ndarray:
    """Indices of all actions tied for the maximal Q value."""
    q = theta_ext[action_idx].sum(axis=1)
    return np.flatnonzero(q == q.max())


def select_action(state: GameState, theta: np.ndarray, eps: float,
                  rng: np.random.Generator,
                  layout: FeatureLayout | None = None) -> Move:
    """Epsilon-greedy choice over all 144 actions, uniform tie-breaking."""
    if layout is None:
        layout = FeatureLayout.for_features(state.features)
    if rng.random() < eps:
        return action_to_move(int(rng.integers(NUM_ACTIONS)))
    theta_ext = np.append(theta, 0.0)
    shape_at, color_at = board_arrays(state)
    action_idx = all_action_indices(layout, shape_at, color_at,
                                    state.last_accept)
    ties = greedy_actions(theta_ext, action_idx)
    return action_to_move(int(ties[rng.integers(len(ties))]))


def _learn_step(agent: AgentState, rng: np.random.Generator) -> None:
    hp = agent.hyper
    batch = agent.buffer.sample(hp.batch_size, rng)
    succ = agent.buffer.succ[batch]  # (B, 144, SLOTS)
    q_succ = agent.target_ext[succ].sum(axis=2).max(axis=1)  # (B,)
    terminal = agent.buffer.terminal[batch]
    bootstrap = terminal if hp.literal_terminal_indicator else ~terminal
    y = agent.buffer.reward[batch] + hp.gamma * q_succ * bootstrap

    phi = agent.buffer.phi[batch]  # (B, SLOTS)
    q_sa = agent.theta_ext[phi].sum(axis=1)
    coeff = (2.0 * hp.learning_rate / hp.batch_size) * (y - q_sa)
    np.add.at(agent.theta_ext, phi, coeff[:, None])
    agent.theta_ext[-1] = 0.0


def batch_loss(theta: np.ndarray, phi_dense: np.ndarray,
               y: np.ndarray) -> float:
    """Mean squared error of linear Q predictions on one batch."""
    return float(np.mean((y - phi_dense @ theta) ** 2))


def batch_loss_gradient(theta: np.ndarray, phi_dense: np.ndarray,
                        y: np.ndarray) -> np.ndarray:
    """Analytic gradient of ``batch_loss`` with respect to ``theta``."""
    residual = y - phi_dense @ theta
    return (-2.0 / len(y)) * (phi_dense.T @ residual)


@dataclass
class TrialResult:
    trial: int
    episode_errors: list  # rejected-move count per episode
    episode_moves: list
    episode_cleared: list
    theta: np.ndarray
    transcripts: list | None = None  # per-episode [(Move, Judgment)] when kept


def run_training_episode(agent: AgentState, state: GameState,
                         rng: np.random.Generator) -> tuple[int, int, list]:
    """Play one episode with learning on every step.

    Returns (errors, moves, transcript).  The caller owns target-network
    refresh cadence.
    """
    hp = agent.hyper
    agent.last_successful = None
    shape_at, color_at = board_arrays(state)
    action_idx = all_action_indices(agent.layout, shape_at, color_at, None)
    errors = 0

    while not state.episode_over and state.move_count < hp.horizon:
        eps = epsilon(agent.total_moves, hp.epsilon_start, hp.epsilon_min,
                      hp.epsilon_decay_moves)
        if rng.random() < eps:
            action = int(rng.integers(NUM_ACTIONS))
        else:
            ties = greedy_actions(agent.theta_ext, action_idx)
            action = int(ties[rng.integers(len(ties))])

        move = action_to_move(action)
        piece = state.board.piece_at(move.cell)
        _, judgment = attempt_move(state, move)
        agent.total_moves += 1
        if judgment.reward < 0:
            errors += 1

        if judgment.verdict is Verdict.ACCEPT:
            shape_at[move.cell] = -1
            color_at[move.cell] = -1
            agent.last_successful = (piece.shape, piece.color, move.bucket)
            succ_idx = all_action_indices(agent.layout, shape_at, color_at,
                                          agent.last_successful)
        else:
            succ_idx = action_idx

        agent.buffer.push(action_idx[action], judgment.reward, succ_idx,
                          state.episode_over)
        action_idx = succ_idx
        _learn_step(agent, rng)

    return errors, state.move_count, list(state.transcript)


def train_trial(rule: RuleSpec, params: GenParams, hyper: Hyperparams,
                seed: int, features: FeatureSet = DEFAULT_FEATURES,
                trial: int = 0, keep_transcripts: bool = False,
                boards: list[Board] | None = None) -> TrialResult:
    """One independent learning run of ``hyper.episodes`` episodes.

    Boards come from the trial's own generator stream (or, for scripted
    curricula, from ``boards``, cycled).  All randomness derives from
    ``seed``, so results are bit-for-bit reproducible.
    """
    layout = FeatureLayout.for_features(features)
    agent = new_agent(layout, hyper)
    board_rng = derive_rng(seed, "boards")
    agent_rng = derive_rng(seed, "agent")

    episode_errors: list[int] = []
    episode_moves: list[int] = []
    episode_cleared: list[bool] = []
    transcripts: list = [] if keep_transcripts else None

    for episode in range(hyper.episodes):
        if boards is not None:
            board = boards[episode % len(boards)].copy()
        else:
            board = generate_board(params, features, board_rng)
        state = init_episode(rule, board, features, rng_seed=seed)
        errors, moves, transcript = run_training_episode(agent, state,
                                                         agent_rng)
        episode_errors.append(errors)
        episode_moves.append(moves)
        episode_cleared.append(state.cleared)
        if transcripts is not None:
            transcripts.append(transcript)
        if (episode + 1) % hyper.target_update_episodes == 0:
            agent.target_ext = agent.theta_ext.copy()

    return TrialResult(
        trial=trial,
        episode_errors=episode_errors,
        episode_moves=episode_moves,
        episode_cleared=episode_cleared,
        theta=agent.theta_ext[:-1].copy(),
        transcripts=transcripts,
    )


def save_weights(path, theta: np.ndarray, layout: FeatureLayout) -> None:
    """Persist a learned weight vector with its layout header."""
    np.savez(path,
             layout_version=LAYOUT_VERSION,
             num_colors=layout.num_colors,
             num_shapes=layout.num_shapes,
             theta=theta)


def load_weights(path) -> tuple[np.ndarray, FeatureLayout]:
    data = np.load(path)
    if int(data["layout_version"]) != LAYOUT_VERSION:
        raise ValidationError(
            f"weight file has layout version {int(data['layout_version'])}, "
            f"expected {LAYOUT_VERSION}")
    layout = FeatureLayout(num_colors=int(data["num_colors"]),
                           num_shapes=int(data["num_shapes"]))
    theta = data["theta"]
    if theta.shape != (layout.dimension,):
        raise ValidationError("weight vector does not match its layout")
    return theta, layout
