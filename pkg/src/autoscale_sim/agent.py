"""Dueling DQN agent: numpy network, replay buffer, epsilon-greedy policy.

The Q-network is a 4 -> 64 -> 64 ReLU trunk with a scalar value head and a
three-way advantage head, combined as ``Q = V + A - mean(A)``.  Parameters
are plain dicts of float64 arrays so they can be copied, compared and
archived without any framework.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

Params = dict[str, np.ndarray]

DQN_TENSORS = ("W1", "b1", "W2", "b2", "Wv", "bv", "Wa", "ba")


class ScalingAction(enum.IntEnum):
    SCALE_DOWN = -1
    KEEP_SAME = 0
    SCALE_UP = 1

    @property
    def index(self) -> int:
        return int(self) + 1

    @classmethod
    def from_index(cls, i: int) -> "ScalingAction":
        return cls(int(i) - 1)


ACTIONS = (ScalingAction.SCALE_DOWN, ScalingAction.KEEP_SAME, ScalingAction.SCALE_UP)


class InsufficientExperiences(ValueError):
    pass


@dataclass(frozen=True)
class StateVector:
    """Agent observation: s1..s3 are percentages, s4 a replica count."""

    predicted_mem_pct: float
    cpu_pct: float
    mem_pct: float
    replicas: int

    def normalized(self, max_replicas: int) -> np.ndarray:
        return np.array([self.predicted_mem_pct / 100.0, self.cpu_pct / 100.0,
                         self.mem_pct / 100.0, self.replicas / max_replicas])

    def as_list(self) -> list[float]:
        return [self.predicted_mem_pct, self.cpu_pct, self.mem_pct, float(self.replicas)]


@dataclass(frozen=True)
class Experience:
    state: StateVector
    action: ScalingAction
    reward: float
    next_state: StateVector
    done: bool = False


class ReplayBuffer:
    """Fixed-capacity ring buffer; a push at capacity overwrites the oldest entry."""

    def __init__(self, capacity: int = 10_000):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._items: list[Experience] = []
        self._next = 0
        self.insertions = 0

    def push(self, exp: Experience) -> "ReplayBuffer":
        if not np.isfinite(exp.reward):
            raise ValueError("experience reward must be finite")
        if len(self._items) < self.capacity:
            self._items.append(exp)
        else:
            self._items[self._next] = exp
        self._next = (self._next + 1) % self.capacity
        self.insertions += 1
        return self

    def sample(self, batch: int, rng: np.random.Generator) -> list[Experience]:
        if len(self._items) < batch:
            raise InsufficientExperiences(f"buffer holds {len(self._items)} < batch {batch}")
        idx = rng.choice(len(self._items), size=batch, replace=False)
        return [self._items[i] for i in idx]

    def ordered(self) -> list[Experience]:
        """Contents oldest first."""
        if len(self._items) < self.capacity:
            return list(self._items)
        return self._items[self._next:] + self._items[:self._next]

    def __len__(self) -> int:
        return len(self._items)


# ---------------------------------------------------------------- network

def init_params(rng: np.random.Generator, hidden: int = 64, state_dim: int = 4,
                n_actions: int = 3) -> Params:
    def layer(fan_in, fan_out):
        k = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-k, k, (fan_in, fan_out)), rng.uniform(-k, k, fan_out)

    p = {}
    p["W1"], p["b1"] = layer(state_dim, hidden)
    p["W2"], p["b2"] = layer(hidden, hidden)
    p["Wv"], p["bv"] = layer(hidden, 1)
    p["Wa"], p["ba"] = layer(hidden, n_actions)
    return p


def copy_params(p: Params) -> Params:
    return {k: v.copy() for k, v in p.items()}


def _forward(p: Params, x: np.ndarray):
    z1 = x @ p["W1"] + p["b1"]
    h1 = np.maximum(z1, 0.0)
    z2 = h1 @ p["W2"] + p["b2"]
    h2 = np.maximum(z2, 0.0)
    v = h2 @ p["Wv"] + p["bv"]
    a = h2 @ p["Wa"] + p["ba"]
    q = v + a - a.mean(axis=1, keepdims=True)
    return q, (x, z1, h1, z2, h2)


def q_values(p: Params, x: np.ndarray) -> np.ndarray:
    """Q-values for one normalized state (shape (3,)) or a batch (shape (n, 3))."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return _forward(p, x[None, :])[0][0]
    return _forward(p, x)[0]


def select_action(p: Params, x: np.ndarray, epsilon: float, rng: np.random.Generator) -> ScalingAction:
    """Epsilon-greedy; greedy ties go to KeepSame, then to the lowest index."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    if epsilon > 0.0 and rng.random() < epsilon:
        return ScalingAction.from_index(int(rng.integers(3)))
    return greedy_action(q_values(p, x))


def greedy_action(q: np.ndarray) -> ScalingAction:
    best = np.flatnonzero(q == q.max())
    if ScalingAction.KEEP_SAME.index in best:
        return ScalingAction.KEEP_SAME
    return ScalingAction.from_index(int(best[0]))


# ---------------------------------------------------------------- TD learning

@dataclass
class Batch:
    states: np.ndarray
    actions: np.ndarray  # action indices
    rewards: np.ndarray
    next_states: np.ndarray
    dones: np.ndarray

    @classmethod
    def from_experiences(cls, exps: Sequence[Experience], max_replicas: int) -> "Batch":
        return cls(
            states=np.stack([e.state.normalized(max_replicas) for e in exps]),
            actions=np.array([ScalingAction(e.action).index for e in exps]),
            rewards=np.array([e.reward for e in exps], dtype=float),
            next_states=np.stack([e.next_state.normalized(max_replicas) for e in exps]),
            dones=np.array([e.done for e in exps], dtype=bool),
        )


def td_targets(target: Params, batch: Batch, gamma: float) -> np.ndarray:
    q_next = _forward(target, batch.next_states)[0].max(axis=1)
    return np.where(batch.dones, batch.rewards, batch.rewards + gamma * q_next)


def huber(d: np.ndarray, delta: float = 1.0) -> np.ndarray:
    a = np.abs(d)
    return np.where(a <= delta, 0.5 * d * d, delta * (a - 0.5 * delta))


def td_loss_and_grads(main: Params, batch: Batch, y: np.ndarray, delta: float = 1.0):
    q, (x, z1, h1, z2, h2) = _forward(main, batch.states)
    n = len(y)
    rows = np.arange(n)
    err = y - q[rows, batch.actions]
    loss = float(huber(err, delta).mean())

    dq = np.zeros_like(q)
    dq[rows, batch.actions] = -np.clip(err, -delta, delta) / n
    dv = dq.sum(axis=1, keepdims=True)
    da = dq - dq.mean(axis=1, keepdims=True)
    g = {"Wv": h2.T @ dv, "bv": dv.sum(axis=0), "Wa": h2.T @ da, "ba": da.sum(axis=0)}
    dh2 = dv @ main["Wv"].T + da @ main["Wa"].T
    dz2 = dh2 * (z2 > 0)
    g["W2"] = h1.T @ dz2
    g["b2"] = dz2.sum(axis=0)
    dz1 = (dz2 @ main["W2"].T) * (z1 > 0)
    g["W1"] = x.T @ dz1
    g["b1"] = dz1.sum(axis=0)
    return loss, g


def clip_by_global_norm(grads: Params, max_norm: float) -> Params:
    norm = np.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    if norm <= max_norm or norm == 0.0:
        return grads
    scale = max_norm / norm
    return {k: g * scale for k, g in grads.items()}


class Adam:
    def __init__(self, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m: Params = {}
        self.v: Params = {}
        self.t = 0

    def step(self, params: Params, grads: Params, lr: float | None = None) -> Params:
        lr = self.lr if lr is None else lr
        self.t += 1
        out = {}
        for k, g in grads.items():
            m = self.m.get(k, np.zeros_like(g)) * self.beta1 + (1 - self.beta1) * g
            v = self.v.get(k, np.zeros_like(g)) * self.beta2 + (1 - self.beta2) * g * g
            self.m[k], self.v[k] = m, v
            m_hat = m / (1 - self.beta1 ** self.t)
            v_hat = v / (1 - self.beta2 ** self.t)
            out[k] = params[k] - lr * m_hat / (np.sqrt(v_hat) + self.eps)
        return out


def td_train_step(main: Params, target: Params, batch: Batch, gamma: float = 0.99,
                  lr: float = 1e-3, optimizer: Adam | None = None, clip_norm: float = 10.0,
                  delta: float = 1.0) -> tuple[Params, float]:
    """One gradient step on the mean Huber TD loss; returns (new params, pre-step loss).

    Without an optimizer the step is plain gradient descent.
    """
    if len(batch.rewards) == 0:
        raise ValueError("empty batch")
    y = td_targets(target, batch, gamma)
    loss, grads = td_loss_and_grads(main, batch, y, delta)
    grads = clip_by_global_norm(grads, clip_norm)
    if optimizer is None:
        return {k: main[k] - lr * grads[k] for k in main}, loss
    return optimizer.step(main, grads, lr), loss


def sync_target(main: Params) -> Params:
    return copy_params(main)


def relative_error(a: np.ndarray, b: np.ndarray, floor: float = 1e-8) -> float:
    """Norm-based relative error; 0 when both norms are below ``floor``."""
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na < floor and nb < floor:
        return 0.0
    return float(np.linalg.norm(a - b)) / max(na, nb)


def dqn_grad_check(main: Params, target: Params, batch: Batch, gamma: float = 0.99,
                   step: float = 1e-5,
                   grad_fn: Callable[[Params, Batch, np.ndarray], Params] | None = None) -> float:
    """Worst per-tensor relative error between analytic and central-difference gradients.

    TD targets are held fixed, as they are during training.
    """
    y = td_targets(target, batch, gamma)
    if grad_fn is None:
        analytic = td_loss_and_grads(main, batch, y)[1]
    else:
        analytic = grad_fn(main, batch, y)
    worst = 0.0
    for name in DQN_TENSORS:
        theta = main[name]
        numeric = np.zeros_like(theta)
        for i in np.ndindex(theta.shape):
            orig = theta[i]
            theta[i] = orig + step
            up = td_loss_and_grads(main, batch, y)[0]
            theta[i] = orig - step
            down = td_loss_and_grads(main, batch, y)[0]
            theta[i] = orig
            numeric[i] = (up - down) / (2 * step)
        worst = max(worst, relative_error(analytic[name], numeric))
    return worst


# ---------------------------------------------------------------- agent

@dataclass
class AgentConfig:
    gamma: float = 0.99
    lr: float = 1e-3
    buffer_capacity: int = 10_000
    batch_size: int = 32
    target_sync_every: int = 100
    epsilon_start: float = 1.0
    epsilon_min: float = 0.05
    epsilon_decay: float = 0.995
    hidden: int = 64
    max_replicas: int = 10


@dataclass
class DqnAgent:
    """Main/target networks, replay buffer and exploration schedule."""

    config: AgentConfig = field(default_factory=AgentConfig)
    seed: int = 0
    main: Params = field(default=None)
    target: Params = field(default=None)

    def __post_init__(self):
        self.rng = np.random.default_rng(self.seed)
        if self.main is None:
            self.main = init_params(self.rng, self.config.hidden)
        if self.target is None:
            self.target = sync_target(self.main)
        self.buffer = ReplayBuffer(self.config.buffer_capacity)
        self.optimizer = Adam(self.config.lr)
        self.epsilon = self.config.epsilon_start
        self.train_steps = 0
        self.syncs = 0
        self.losses: list[float] = []

    def act(self, state: StateVector, epsilon: float | None = None) -> ScalingAction:
        eps = self.epsilon if epsilon is None else epsilon
        return select_action(self.main, state.normalized(self.config.max_replicas), eps, self.rng)

    def q(self, state: StateVector) -> np.ndarray:
        return q_values(self.main, state.normalized(self.config.max_replicas))

    def decay_epsilon(self) -> None:
        self.epsilon = max(self.config.epsilon_min, self.epsilon * self.config.epsilon_decay)

    def remember(self, exp: Experience) -> None:
        self.buffer.push(exp)

    def train_step(self) -> float | None:
        """One TD update if the buffer holds a full batch; syncs the target every N steps."""
        cfg = self.config
        if len(self.buffer) < cfg.batch_size:
            return None
        batch = Batch.from_experiences(self.buffer.sample(cfg.batch_size, self.rng), cfg.max_replicas)
        self.main, loss = td_train_step(self.main, self.target, batch, cfg.gamma, cfg.lr, self.optimizer)
        self.train_steps += 1
        if self.train_steps % cfg.target_sync_every == 0:
            self.target = sync_target(self.main)
            self.syncs += 1
        self.losses.append(loss)
        return loss
