"""Lead times as action delays, plus the observation-delay variant.

An order placed at step t with delay k arrives at step t + k.  The agent's
state is the base feature vector plus a fixed-length buffer of the not yet
delivered orders (one-hot action index and the normalized post-projection
quantity per slot, zero slots padding the tail), which restores the Markov
property under delay.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .catalog import Catalog
from .store import (
    ConstraintConfig,
    FeatureScales,
    NUM_ACTIONS,
    NUM_BASE_FEATURES,
    RewardParams,
    StoreState,
    decode_actions,
    feature_matrix,
    project_actions,
    step,
    step_rewards,
)

SLOT_WIDTH = NUM_ACTIONS + 1   # one-hot action + normalized quantity
ACTION_DELAY = "action_delay"
OBSERVATION_DELAY = "observation_delay"

# Quantity-channel scale: largest action multiplier times a typical forecast.
QUANTITY_SCALE_MULTIPLIER = 6.0


@dataclass(frozen=True)
class DelayConfig:
    """Delay mode and magnitude; k_max fixes the buffer length."""

    mode: str = ACTION_DELAY
    kind: str = "constant"
    k: int = 0
    k_max: int = 0

    def __post_init__(self) -> None:
        if self.mode not in (ACTION_DELAY, OBSERVATION_DELAY):
            raise ValueError(f"unknown delay mode {self.mode!r}")
        if self.kind not in ("constant", "stochastic"):
            raise ValueError(f"unknown delay kind {self.kind!r}")
        if self.kind == "constant":
            if not 0 <= self.k <= self.k_max:
                raise ValueError(
                    f"constant delay requires 0 <= k <= k_max, got k={self.k}, k_max={self.k_max}")
        else:
            if self.k_max < 1:
                raise ValueError(f"stochastic delay requires k_max >= 1, got {self.k_max}")


def sample_episode_delay(cfg: DelayConfig, rng: np.random.Generator) -> int:
    """Delay for one episode: fixed, or uniform on {1, ..., k_max}."""
    if cfg.kind == "constant":
        return cfg.k
    return int(rng.integers(1, cfg.k_max + 1))


@dataclass(frozen=True)
class InFlightOrder:
    product: int
    quantity: int
    agent_action_index: int
    placed_at: int
    arrives_at: int


class _Wave:
    """One push: every product orders in lockstep, so orders travel together."""

    __slots__ = ("placed_at", "arrives_at", "actions", "quantities")

    def __init__(self, placed_at, arrives_at, actions, quantities):
        self.placed_at = placed_at
        self.arrives_at = arrives_at
        self.actions = actions
        self.quantities = quantities


class ActionPipeline:
    """Queue of in-flight replenishment orders, sorted by arrival step."""

    def __init__(self, n_products: int) -> None:
        self.n = n_products
        self._waves: deque[_Wave] = deque()

    def push_orders(self, decisions, quantities, t: int, k: int) -> None:
        """Append one order per product, arriving at t + k."""
        decisions = np.asarray(decisions, dtype=np.int64)
        quantities = np.asarray(quantities, dtype=np.int64)
        if decisions.shape != (self.n,) or quantities.shape != (self.n,):
            raise ValueError("one decision and quantity per product required")
        self._waves.append(_Wave(t, t + k, decisions.copy(), quantities.copy()))
        if len(self._waves) > 1 and self._waves[-2].arrives_at > t + k:
            self._waves = deque(sorted(self._waves, key=lambda w: w.arrives_at))

    def pop_due(self, t: int) -> np.ndarray:
        """Remove orders arriving exactly at t; return summed quantities."""
        arriving = np.zeros(self.n, dtype=np.int64)
        kept = deque()
        for wave in self._waves:
            if wave.arrives_at == t:
                arriving += wave.quantities
            else:
                kept.append(wave)
        self._waves = kept
        return arriving

    def in_flight(self) -> int:
        return len(self._waves)

    def in_flight_quantity(self) -> np.ndarray:
        total = np.zeros(self.n, dtype=np.int64)
        for wave in self._waves:
            total += wave.quantities
        return total

    def orders_for(self, product: int) -> list[InFlightOrder]:
        """Product's in-flight orders, oldest arrival first."""
        return [
            InFlightOrder(product=product,
                          quantity=int(w.quantities[product]),
                          agent_action_index=int(w.actions[product]),
                          placed_at=w.placed_at,
                          arrives_at=w.arrives_at)
            for w in sorted(self._waves, key=lambda w: w.arrives_at)
        ]

    def slot_tensor(self, k_max: int, quantity_scale: np.ndarray) -> np.ndarray:
        """(n, k_max * SLOT_WIDTH) buffer: oldest arrival first, zero padded."""
        if len(self._waves) > k_max:
            raise ValueError(
                f"{len(self._waves)} in-flight orders exceed the buffer bound k_max={k_max}")
        slots = np.zeros((self.n, k_max, SLOT_WIDTH), dtype=np.float64)
        rows = np.arange(self.n)
        for j, wave in enumerate(sorted(self._waves, key=lambda w: w.arrives_at)):
            slots[rows, j, wave.actions] = 1.0
            slots[:, j, NUM_ACTIONS] = wave.quantities / quantity_scale
        return slots.reshape(self.n, k_max * SLOT_WIDTH)


def encode_slot(action_index: int, quantity: float, quantity_scale: float) -> np.ndarray:
    slot = np.zeros(SLOT_WIDTH, dtype=np.float64)
    slot[action_index] = 1.0
    slot[NUM_ACTIONS] = quantity / quantity_scale
    return slot


def augment(base: np.ndarray, pipeline: ActionPipeline, product: int,
            k_max: int, quantity_scale: float) -> np.ndarray:
    """Information state for one product: base features then the order buffer.

    Output length is exactly len(base) + SLOT_WIDTH * k_max; an all-zero slot
    is never a real order since every real slot carries a one-hot entry.
    """
    orders = pipeline.orders_for(product)
    if len(orders) > k_max:
        raise ValueError(
            f"{len(orders)} in-flight orders exceed the buffer bound k_max={k_max}")
    slots = np.zeros((k_max, SLOT_WIDTH), dtype=np.float64)
    for j, order in enumerate(orders):
        slots[j] = encode_slot(order.agent_action_index, order.quantity, quantity_scale)
    return np.concatenate([np.asarray(base, dtype=np.float64), slots.ravel()])


class Observation(NamedTuple):
    """Base features plus the action-buffer block, per product."""

    base: np.ndarray    # (n, 7)
    slots: np.ndarray   # (n, SLOT_WIDTH * k_max)

    def information_state(self) -> np.ndarray:
        return np.hstack([self.base, self.slots])


def quantity_scales(typical_forecast: np.ndarray) -> np.ndarray:
    return QUANTITY_SCALE_MULTIPLIER * np.maximum(1.0, typical_forecast)


class ActionDelayEnv:
    """Store wrapped with an order pipeline: decisions arrive k steps later.

    Within a step the current decision is decoded, projected and pushed
    before due orders pop, so k = 0 reduces bit-for-bit to driving the bare
    store directly.  Episodes start with the pipeline holding k no-op orders,
    so the buffer always describes exactly k in-flight orders.
    """

    def __init__(self, catalog: Catalog, constraints: ConstraintConfig,
                 reward_params: RewardParams, demand_source, k: int, k_max: int,
                 initial_stock_steps: int = 0) -> None:
        if not 0 <= k <= k_max:
            raise ValueError(f"need 0 <= k <= k_max, got k={k}, k_max={k_max}")
        self.catalog = catalog
        self.constraints = constraints
        self.reward_params = reward_params
        self.source = demand_source
        self.k = k
        self.k_max = k_max
        self.initial_stock_steps = initial_stock_steps
        self.scales = FeatureScales.for_catalog(catalog, constraints)
        self.qty_scale = quantity_scales(demand_source.typical())
        self.state: StoreState | None = None
        self.pipeline: ActionPipeline | None = None

    def reset(self) -> Observation:
        self.state = StoreState.steady(self.catalog, self.source.typical(),
                                       self.initial_stock_steps)
        self.pipeline = ActionPipeline(self.catalog.n)
        zeros = np.zeros(self.catalog.n, dtype=np.int64)
        for a in range(self.k):
            self.pipeline.push_orders(zeros, zeros, t=a - self.k, k=self.k)
        base = feature_matrix(self.state.on_hand(), self.source.forecast(0),
                              self.catalog, self.scales)
        return Observation(base, self.pipeline.slot_tensor(self.k_max, self.qty_scale))

    def step_decisions(self, decisions, rng: np.random.Generator):
        """Apply one decision per product; returns (obs, rewards, outcome)."""
        t = self.state.time
        fc = self.source.forecast(t)
        quantities = decode_actions(decisions, fc)
        projected = project_actions(quantities, self.catalog, self.constraints)
        self.pipeline.push_orders(decisions, projected, t, self.k)
        arriving = self.pipeline.pop_due(t)
        demand = self.source.demand(t, rng)
        self.state, outcome = step(self.state, arriving, demand, self.catalog)
        rewards = step_rewards(outcome, fc, self.reward_params)
        base = feature_matrix(outcome.holding, self.source.forecast(t + 1),
                              self.catalog, self.scales)
        obs = Observation(base, self.pipeline.slot_tensor(self.k_max, self.qty_scale))
        return obs, rewards, outcome


class ObservationDelayEnv:
    """Decisions apply immediately, but the agent sees the state d steps old.

    The returned observation pairs the base features from d steps before the
    next decision with the d actions taken since (oldest first); both are
    zero before enough history exists, so d = 0 reduces to the bare store.
    """

    def __init__(self, catalog: Catalog, constraints: ConstraintConfig,
                 reward_params: RewardParams, demand_source, d: int, k_max: int,
                 initial_stock_steps: int = 0) -> None:
        if not 0 <= d <= k_max:
            raise ValueError(f"need 0 <= d <= k_max, got d={d}, k_max={k_max}")
        self.catalog = catalog
        self.constraints = constraints
        self.reward_params = reward_params
        self.source = demand_source
        self.d = d
        self.k_max = k_max
        self.initial_stock_steps = initial_stock_steps
        self.scales = FeatureScales.for_catalog(catalog, constraints)
        self.qty_scale = quantity_scales(demand_source.typical())
        self.state: StoreState | None = None
        self._features: list[np.ndarray] = []
        self._actions: list[tuple[np.ndarray, np.ndarray]] = []

    def _observe(self) -> Observation:
        tau = len(self._actions)
        n = self.catalog.n
        if tau - self.d >= 0:
            base = self._features[tau - self.d]
        else:
            base = np.zeros((n, NUM_BASE_FEATURES), dtype=np.float64)
        slots = np.zeros((n, self.k_max, SLOT_WIDTH), dtype=np.float64)
        rows = np.arange(n)
        for j in range(self.d):
            u = tau - self.d + j
            if u < 0:
                continue
            acts, qtys = self._actions[u]
            slots[rows, j, acts] = 1.0
            slots[:, j, NUM_ACTIONS] = qtys / self.qty_scale
        return Observation(base, slots.reshape(n, self.k_max * SLOT_WIDTH))

    def reset(self) -> Observation:
        self.state = StoreState.steady(self.catalog, self.source.typical(),
                                       self.initial_stock_steps)
        base0 = feature_matrix(self.state.on_hand(), self.source.forecast(0),
                               self.catalog, self.scales)
        self._features = [base0]
        self._actions = []
        return self._observe()

    def step_decisions(self, decisions, rng: np.random.Generator):
        t = self.state.time
        fc = self.source.forecast(t)
        decisions = np.asarray(decisions, dtype=np.int64)
        quantities = decode_actions(decisions, fc)
        projected = project_actions(quantities, self.catalog, self.constraints)
        demand = self.source.demand(t, rng)
        self.state, outcome = step(self.state, projected, demand, self.catalog)
        rewards = step_rewards(outcome, fc, self.reward_params)
        base = feature_matrix(outcome.holding, self.source.forecast(t + 1),
                              self.catalog, self.scales)
        self._features.append(base)
        self._actions.append((decisions.copy(), projected))
        return self._observe(), rewards, outcome


def make_delayed_env(mode: str, catalog, constraints, reward_params,
                     demand_source, delay: int, k_max: int,
                     initial_stock_steps: int = 0):
    if mode == ACTION_DELAY:
        return ActionDelayEnv(catalog, constraints, reward_params, demand_source,
                              k=delay, k_max=k_max,
                              initial_stock_steps=initial_stock_steps)
    if mode == OBSERVATION_DELAY:
        return ObservationDelayEnv(catalog, constraints, reward_params,
                                   demand_source, d=delay, k_max=k_max,
                                   initial_stock_steps=initial_stock_steps)
    raise ValueError(f"unknown delay mode {mode!r}")
