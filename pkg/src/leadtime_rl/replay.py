"""Uniform experience replay over fixed-size numpy rings."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np


class Batch(NamedTuple):
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    terminals: np.ndarray


class ReplayBuffer:
    """Ring of transitions with seeded uniform sampling."""

    def __init__(self, capacity: int, state_dim: int) -> None:
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.states = np.empty((capacity, state_dim), dtype=np.float64)
        self.next_states = np.empty((capacity, state_dim), dtype=np.float64)
        self.actions = np.empty(capacity, dtype=np.int64)
        self.rewards = np.empty(capacity, dtype=np.float64)
        self.terminals = np.empty(capacity, dtype=np.float64)
        self.size = 0
        self._pos = 0

    def __len__(self) -> int:
        return self.size

    def push(self, state, action, reward, next_state, terminal) -> None:
        i = self._pos
        self.states[i] = state
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_states[i] = next_state
        self.terminals[i] = float(terminal)
        self._pos = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def push_batch(self, states, actions, rewards, next_states, terminal) -> None:
        """Insert one transition per row; `terminal` applies to all rows."""
        m = states.shape[0]
        if self._pos + m <= self.capacity:
            idx = slice(self._pos, self._pos + m)
        else:
            idx = (self._pos + np.arange(m)) % self.capacity
        self.states[idx] = states
        self.actions[idx] = actions
        self.rewards[idx] = rewards
        self.next_states[idx] = next_states
        self.terminals[idx] = float(terminal)
        self._pos = int((self._pos + m) % self.capacity)
        self.size = min(self.size + m, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        if batch_size > self.size:
            raise ValueError(
                f"cannot sample {batch_size} transitions from a buffer of {self.size}")
        idx = rng.integers(0, self.size, size=batch_size)
        return Batch(self.states[idx], self.actions[idx], self.rewards[idx],
                     self.next_states[idx], self.terminals[idx])
