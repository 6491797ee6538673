"""Q-learning stacks.

The deep learner shares one network across all products: each step does a
batched forward pass per product, one joint capacity projection, one shared
pipeline push/pop, and writes one transition per product into a shared
replay buffer.  The delay-resolved variant ("drdqn") feeds information
states (base features plus the order buffer); the baseline ("dqn") feeds
base features only.  Everything else is identical, so at zero delay the two
coincide exactly.

A tabular learner over discrete delayed environments backs the exact-MDP
certification.
"""
from __future__ import annotations

import time
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .catalog import Catalog
from .delay import (
    DelayConfig,
    Observation,
    make_delayed_env,
    sample_episode_delay,
    SLOT_WIDTH,
)
from .qnet import (
    QNetwork,
    batch_epsilon_greedy,
    gradient,
    sync_target,
    td_targets,
)
from .replay import ReplayBuffer
from .store import ConstraintConfig, NUM_ACTIONS, NUM_BASE_FEATURES, RewardParams

ALGORITHMS = ("dqn", "drdqn")
HIDDEN_SIZES = (64, 64)


@dataclass(frozen=True)
class TrainConfig:
    gamma: float = 0.99
    learning_rate: float = 1e-3
    batch_size: int = 32
    replay_capacity: int = 50_000
    target_sync: int = 1_000
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_steps: int = 50_000
    horizon: int = 100
    episodes: int = 300
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must be in [0, 1), got {self.gamma}")
        if self.epsilon_end > self.epsilon_start:
            raise ValueError("epsilon_end must not exceed epsilon_start")
        for name in ("learning_rate", "batch_size", "replay_capacity",
                     "target_sync", "epsilon_decay_steps", "horizon", "episodes"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def epsilon_at(cfg: TrainConfig, step: int) -> float:
    frac = min(1.0, step / cfg.epsilon_decay_steps)
    return cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * frac


@dataclass(frozen=True)
class EnvSetup:
    """Everything that defines the simulated store, minus the delay.

    Episodes open with `initial_stock_steps` typical demands of staggered-age
    stock, so the store starts in operation rather than starved.
    """

    catalog: Catalog
    constraints: ConstraintConfig
    reward_params: RewardParams
    demand_source: object
    initial_stock_steps: int = 3


@dataclass
class RunResult:
    """Per-episode series plus the trained network."""

    episode_rewards: np.ndarray
    delays: np.ndarray
    sales: np.ndarray
    wastage: np.ndarray
    unmet: np.ndarray
    holding: np.ndarray
    epsilons: np.ndarray
    wall_ms: np.ndarray
    network: QNetwork
    algorithm: str


def state_dim(algorithm: str, k_max: int) -> int:
    if algorithm == "dqn":
        return NUM_BASE_FEATURES
    return NUM_BASE_FEATURES + SLOT_WIDTH * k_max


def _view(obs: Observation, algorithm: str) -> np.ndarray:
    if algorithm == "dqn":
        return obs.base
    return obs.information_state()


def run_streams(seed: int):
    """Independent generator streams so the environment realization does not
    depend on the algorithm's parameter count or exploration pattern."""
    init, policy, env, delay, replay = np.random.SeedSequence(seed).spawn(5)
    return (np.random.default_rng(init), np.random.default_rng(policy),
            np.random.default_rng(env), np.random.default_rng(delay),
            np.random.default_rng(replay))


def train(setup: EnvSetup, delay_cfg: DelayConfig, train_cfg: TrainConfig,
          algorithm: str = "drdqn", on_episode=None) -> RunResult:
    """Train one agent; deterministic given the config seed.

    `on_episode(index, record)` is called after each episode with the metric
    record for incremental logging.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    init_rng, policy_rng, env_rng, delay_rng, replay_rng = run_streams(train_cfg.seed)

    n = setup.catalog.n
    dim = state_dim(algorithm, delay_cfg.k_max)
    net = QNetwork.init([dim, *HIDDEN_SIZES, NUM_ACTIONS], init_rng)
    target = net.copy()
    replay = ReplayBuffer(train_cfg.replay_capacity, dim)

    episodes = train_cfg.episodes
    out = RunResult(
        episode_rewards=np.zeros(episodes),
        delays=np.zeros(episodes, dtype=np.int64),
        sales=np.zeros(episodes, dtype=np.int64),
        wastage=np.zeros(episodes, dtype=np.int64),
        unmet=np.zeros(episodes, dtype=np.int64),
        holding=np.zeros(episodes, dtype=np.int64),
        epsilons=np.zeros(episodes),
        wall_ms=np.zeros(episodes),
        network=net,
        algorithm=algorithm,
    )

    global_step = 0
    for ep in range(episodes):
        t0 = time.perf_counter()
        k = sample_episode_delay(delay_cfg, delay_rng)
        env = make_delayed_env(delay_cfg.mode, setup.catalog, setup.constraints,
                               setup.reward_params, setup.demand_source,
                               delay=k, k_max=delay_cfg.k_max,
                               initial_stock_steps=setup.initial_stock_steps)
        obs = env.reset()
        s = _view(obs, algorithm)
        reward_acc = 0.0
        eps = epsilon_at(train_cfg, global_step)
        for t in range(train_cfg.horizon):
            eps = epsilon_at(train_cfg, global_step)
            qvals = net.forward(s)
            actions = batch_epsilon_greedy(qvals, eps, policy_rng)
            obs2, rewards, outcome = env.step_decisions(actions, env_rng)
            s2 = _view(obs2, algorithm)
            terminal = t == train_cfg.horizon - 1

            replay.push_batch(s, actions, rewards, s2, terminal)
            if replay.size >= train_cfg.batch_size:
                batch = replay.sample(train_cfg.batch_size, replay_rng)
                targets = td_targets(batch.rewards, batch.next_states,
                                     batch.terminals, target, train_cfg.gamma)
                grads = gradient(net, batch.states, batch.actions, targets)
                net.apply_gradients(grads, train_cfg.learning_rate)

            global_step += 1
            if global_step % train_cfg.target_sync == 0:
                sync_target(net, target)

            reward_acc += float(rewards.mean())
            out.sales[ep] += int(outcome.sales.sum())
            out.wastage[ep] += int(outcome.wastage.sum())
            out.unmet[ep] += int(outcome.unmet.sum())
            out.holding[ep] += int(outcome.holding.sum())
            s = s2

        out.episode_rewards[ep] = reward_acc / train_cfg.horizon
        out.delays[ep] = k
        out.epsilons[ep] = eps
        out.wall_ms[ep] = (time.perf_counter() - t0) * 1e3
        if on_episode is not None:
            on_episode(ep, out)
    return out


class QTable(dict):
    """State -> Q-value array; missing entries read as zeros."""

    def __init__(self, n_actions: int):
        super().__init__()
        self.n_actions = n_actions

    def qvalues(self, state) -> np.ndarray:
        got = self.get(state)
        return np.zeros(self.n_actions) if got is None else got


def tabular_q_learning(env, gamma: float, episodes: int, horizon: int,
                       rng: np.random.Generator, alpha=1.0,
                       epsilon: float = 1.0):
    """One-step Q-learning over a discrete (delayed) environment.

    `alpha` is a constant or a callable of the (s, a) visit count.  Episode
    ends are horizon truncations of a continuing task, so every update
    bootstraps; with a deterministic environment and alpha = 1 this is
    asynchronous value iteration and converges to the exact fixed point.

    Returns (QTable, per-state visit counts at decision time).
    """
    q = QTable(env.n_actions)
    visits: dict = defaultdict(int)
    sa_visits: dict = defaultdict(int)
    alpha_fn = alpha if callable(alpha) else (lambda _n: alpha)
    for _ in range(episodes):
        state = env.reset(rng)
        for _t in range(horizon):
            qvals = q.qvalues(state)
            if rng.random() < epsilon:
                action = int(rng.integers(0, env.n_actions))
            else:
                action = int(np.argmax(qvals))
            next_state, reward = env.step(action, rng)
            visits[state] += 1
            sa_visits[(state, action)] += 1
            a = alpha_fn(sa_visits[(state, action)])
            target = reward + gamma * q.qvalues(next_state).max()
            if state not in q:
                q[state] = np.zeros(env.n_actions)
            q[state][action] += a * (target - q[state][action])
            state = next_state
    return q, dict(visits)
