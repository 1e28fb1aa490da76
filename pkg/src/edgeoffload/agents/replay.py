"""Fixed-capacity FIFO experience replay."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InsufficientDataError


@dataclass
class Transition:
    state: np.ndarray
    action: np.ndarray
    reward: float
    next_state: np.ndarray
    done: bool


@dataclass
class Batch:
    state: np.ndarray
    action: np.ndarray
    reward: np.ndarray
    next_state: np.ndarray
    done: np.ndarray

    def __len__(self):
        return len(self.reward)


class ReplayBuffer:
    """Ring buffer; once full, each push overwrites the oldest transition."""

    def __init__(self, capacity: int, obs_dim: int, act_dim: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = int(capacity)
        self.state = np.zeros((self.capacity, obs_dim))
        self.action = np.zeros((self.capacity, act_dim))
        self.reward = np.zeros(self.capacity)
        self.next_state = np.zeros((self.capacity, obs_dim))
        self.done = np.zeros(self.capacity)
        self.size = 0
        self._head = 0

    def __len__(self):
        return self.size

    def push(self, t: Transition) -> None:
        i = self._head
        self.state[i] = t.state
        self.action[i] = t.action
        self.reward[i] = t.reward
        self.next_state[i] = t.next_state
        self.done[i] = float(t.done)
        self._head = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def _slot(self, k: int) -> int:
        # k-th oldest stored transition
        start = self._head - self.size
        return (start + k) % self.capacity

    def transitions(self) -> list[Transition]:
        """Stored transitions, oldest first."""
        out = []
        for k in range(self.size):
            i = self._slot(k)
            out.append(Transition(self.state[i].copy(), self.action[i].copy(), float(self.reward[i]),
                                  self.next_state[i].copy(), bool(self.done[i])))
        return out

    def sample_indices(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.size < n:
            raise InsufficientDataError(f"buffer holds {self.size} transitions, {n} requested")
        return rng.integers(self.size, size=n)

    def sample(self, n: int, rng: np.random.Generator) -> Batch:
        """``n`` uniform draws with replacement."""
        idx = self.sample_indices(n, rng)
        return Batch(self.state[idx], self.action[idx], self.reward[idx], self.next_state[idx], self.done[idx])
