"""Myopic baseline: pick the sampled action with the best immediate reward."""
from __future__ import annotations

import numpy as np

from .. import seeding


def greedy_candidates(n_servers: int, m_candidates: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Every one-hot partition at full frequency, then uniform-simplex x uniform-frequency draws."""
    k = n_servers
    cands = [np.concatenate([np.eye(k)[j], np.ones(k)]) for j in range(min(k, m_candidates))]
    for _ in range(m_candidates - len(cands)):
        part = rng.dirichlet(np.ones(k))
        cands.append(np.concatenate([part, rng.uniform(0.0, 1.0, k)]))
    return cands


def greedy_act(env, m_candidates: int, rng: np.random.Generator, return_scores: bool = False):
    """Argmax of the one-step reward over the candidate set; ties go to the lowest index.

    ``env.preview`` evaluates against the live state without mutating it.
    """
    cands = greedy_candidates(env.n_servers, m_candidates, rng)
    scores = [env.preview(c).reward for c in cands]
    best = int(np.argmax(scores))
    if return_scores:
        return cands[best], cands, scores
    return cands[best]


class GreedyAgent:
    kind = "greedy"

    def __init__(self, n_servers: int, m_candidates: int = 64, seed: int = 0):
        self.n_servers = n_servers
        self.m_candidates = m_candidates
        self.rng = seeding.stream(seed, "greedy", seeding.AGENT_OFFSETS["greedy"])

    @property
    def learns(self) -> bool:
        return False

    def begin_episode(self) -> None:
        pass

    def act(self, obs, explore: bool = True, env=None):
        if env is None:
            raise ValueError("greedy agent needs the environment to evaluate candidates")
        a = greedy_act(env, self.m_candidates, self.rng)
        return a, a
