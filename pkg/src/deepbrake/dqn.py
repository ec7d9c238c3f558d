"""DQN agent with a replay memory and a collision-only "trauma" memory.

Every training batch mixes uniform draws from the replay memory with a fixed
number of draws from the trauma memory, so rare collision backups keep
contributing to the squared TD loss regardless of how seldom they occur.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import Config
from .env import OBS_SIZE, Action
from .net import RMSProp, QNetworkParams, backward, forward, forward_cached, init_params

__all__ = [
    "Transition", "Batch", "ReplayMemory", "TraumaMemory", "DQNAgent",
    "select_action", "push_transition", "sample_batch", "td_error", "td_errors",
    "train_step", "sync_target", "epsilon_at",
]


@dataclass(frozen=True)
class Transition:
    s: np.ndarray
    a: int
    r: float
    s_next: np.ndarray
    terminal: bool
    bump: bool = False

    def __post_init__(self):
        if self.bump and not self.terminal:
            raise ValueError("a bump transition must be terminal")
        if not np.isfinite(self.r):
            raise ValueError("reward must be finite")


@dataclass
class Batch:
    s: np.ndarray
    a: np.ndarray
    r: np.ndarray
    s_next: np.ndarray
    terminal: np.ndarray
    bump: np.ndarray
    n_replay: int

    def __len__(self):
        return len(self.a)

    def transition(self, i) -> Transition:
        return Transition(self.s[i], int(self.a[i]), float(self.r[i]), self.s_next[i],
                          bool(self.terminal[i]), bool(self.bump[i]))


class ReplayMemory:
    """Fixed-capacity ring buffer of transitions; oldest entries are overwritten."""

    def __init__(self, capacity: int, obs_size: int = OBS_SIZE):
        self.capacity = capacity
        self.s = np.zeros((capacity, obs_size))
        self.s_next = np.zeros((capacity, obs_size))
        self.a = np.zeros(capacity, dtype=np.int64)
        self.r = np.zeros(capacity)
        self.terminal = np.zeros(capacity, dtype=bool)
        self.bump = np.zeros(capacity, dtype=bool)
        self.size = 0
        self.pos = 0
        self.reads = 0

    def __len__(self):
        return self.size

    def push(self, t: Transition):
        i = self.pos
        self.s[i], self.a[i], self.r[i] = t.s, t.a, t.r
        self.s_next[i], self.terminal[i], self.bump[i] = t.s_next, t.terminal, t.bump
        self.pos = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def indices(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """``n`` distinct uniform slots (``n`` is clipped to the current size)."""
        self.reads += 1
        return rng.choice(self.size, size=min(n, self.size), replace=False)

    def transitions(self) -> list[Transition]:
        """Contents oldest-first."""
        start = self.pos if self.size == self.capacity else 0
        order = [(start + k) % self.capacity for k in range(self.size)]
        return [Transition(self.s[i].copy(), int(self.a[i]), float(self.r[i]),
                           self.s_next[i].copy(), bool(self.terminal[i]), bool(self.bump[i]))
                for i in order]


class TraumaMemory(ReplayMemory):
    """Replay memory that accepts only collision (bump) transitions."""

    def push(self, t: Transition):
        if not t.bump:
            raise ValueError("trauma memory only stores bump transitions")
        super().push(t)


def push_transition(replay: ReplayMemory, trauma: TraumaMemory | None, t: Transition):
    replay.push(t)
    if t.bump and trauma is not None:
        trauma.push(t)


def sample_batch(replay: ReplayMemory, trauma: TraumaMemory | None, cfg: Config,
                 rng: np.random.Generator) -> Batch | None:
    """Replay draws plus up to ``trauma_batch`` trauma draws.

    Returns ``None`` while the replay memory holds fewer than ``min_replay``
    transitions. Passing ``trauma=None`` gives a replay-only batch and never
    touches the trauma memory.
    """
    if len(replay) < cfg.min_replay:
        return None
    pools = [(replay, replay.indices(cfg.replay_batch, rng))]
    if trauma is not None and len(trauma) > 0 and cfg.trauma_batch > 0:
        pools.append((trauma, trauma.indices(cfg.trauma_batch, rng)))
    cat = lambda name: np.concatenate([getattr(m, name)[idx] for m, idx in pools])
    return Batch(cat("s"), cat("a"), cat("r"), cat("s_next"), cat("terminal"),
                 cat("bump"), n_replay=len(pools[0][1]))


def select_action(net: QNetworkParams, obs, epsilon: float, rng: np.random.Generator,
                  slope: float = 0.01) -> Action:
    """Epsilon-greedy; greedy ties go to the lowest action index."""
    if rng.random() < epsilon:
        return Action(int(rng.integers(len(Action))))
    return Action(int(np.argmax(forward(net, obs, slope))))


def td_errors(batch: Batch, net: QNetworkParams, target: QNetworkParams, gamma: float,
              slope: float = 0.01):
    """TD errors for a batch, plus the forward cache of the online network."""
    q, cache = forward_cached(net, batch.s, slope)
    q_next = forward(target, batch.s_next, slope)
    bootstrap = np.where(batch.terminal, 0.0, gamma * q_next.max(axis=1))
    rows = np.arange(len(batch))
    delta = batch.r + bootstrap - q[rows, batch.a]
    return delta, cache


def td_error(t: Transition, net: QNetworkParams, target: QNetworkParams, gamma: float,
             slope: float = 0.01) -> float:
    q = forward(net, t.s, slope)[t.a]
    if t.terminal:
        return t.r - q
    return t.r + gamma * forward(target, t.s_next, slope).max() - q


def train_step(net: QNetworkParams, target: QNetworkParams, batch: Batch, opt: RMSProp,
               gamma: float, slope: float = 0.01) -> float:
    """One RMSProp step on ``sum(delta**2)`` over the whole batch.

    Replay and trauma samples are weighted identically. Only ``net`` changes;
    the target network enters through the bootstrap term alone.
    """
    if len(batch) == 0:
        raise ValueError("empty batch")
    delta, cache = td_errors(batch, net, target, gamma, slope)
    grad_out = np.zeros((len(batch), net.sizes[-1]))
    grad_out[np.arange(len(batch)), batch.a] = -2.0 * delta
    opt.step(net, backward(net, cache, grad_out, slope))
    return float(np.sum(delta * delta))


def sync_target(net: QNetworkParams) -> QNetworkParams:
    return net.copy()


def epsilon_at(episode: int, cfg: Config) -> float:
    """Linear decay from ``epsilon_start`` to ``epsilon_end``, then constant."""
    if cfg.epsilon_decay_episodes == 0 or episode >= cfg.epsilon_decay_episodes:
        return cfg.epsilon_end
    frac = episode / cfg.epsilon_decay_episodes
    return cfg.epsilon_start + frac * (cfg.epsilon_end - cfg.epsilon_start)


class DQNAgent:
    """Online network, target network, optimizer and both memories."""

    def __init__(self, cfg: Config, rng: np.random.Generator):
        self.cfg = cfg
        self.slope = cfg.leaky_slope
        init_rng, self.act_rng, self.batch_rng = rng.spawn(3)
        self.net = init_params(cfg.layer_sizes, init_rng)
        self.target = sync_target(self.net)
        self.opt = RMSProp(self.net, cfg.learning_rate, cfg.rmsprop_decay, cfg.rmsprop_eps)
        self.replay = ReplayMemory(cfg.replay_capacity)
        self.trauma = TraumaMemory(cfg.trauma_capacity)
        self.train_steps = 0
        self.last_loss = float("nan")

    def act(self, obs, epsilon: float) -> Action:
        return select_action(self.net, obs, epsilon, self.act_rng, self.slope)

    def remember(self, t: Transition):
        push_transition(self.replay, self.trauma if self.cfg.trauma else None, t)

    def learn(self) -> float | None:
        """Train on one batch if the replay memory is ready; sync the target
        network every ``target_sync`` steps."""
        trauma = self.trauma if self.cfg.trauma else None
        batch = sample_batch(self.replay, trauma, self.cfg, self.batch_rng)
        if batch is None:
            return None
        loss = train_step(self.net, self.target, batch, self.opt, self.cfg.gamma, self.slope)
        if not np.isfinite(loss):
            raise FloatingPointError(f"non-finite loss at training step {self.train_steps}")
        self.train_steps += 1
        if self.train_steps % self.cfg.target_sync == 0:
            self.target = sync_target(self.net)
        self.last_loss = loss
        return loss
