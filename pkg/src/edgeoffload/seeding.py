"""Named random sub-streams derived from a single 64-bit seed.

Every stream is ``np.random.default_rng(SeedSequence([seed, offset]))`` where
``offset`` is fixed per stream name:

    servers            0   server hardware (max frequencies)
    channels           1   per-episode (user, server) SNR jitter
    tasks              2   per-episode task stream
    episodes           3   episode seed derivation
    init              10   network initialisation
    replay            11   minibatch sampling
    smoothing         12   target-policy smoothing noise
    explore_freq      20   frequency-branch exploration noise
    explore_partition 21   partition-branch exploration
    greedy            22   greedy candidate sampling

Agent-owned streams additionally add an agent offset (``AGENT_OFFSETS``) so that
agents run side by side on the same environment seed explore independently.
"""
from __future__ import annotations

import numpy as np

SEED_MASK = (1 << 64) - 1

STREAMS = {
    "servers": 0,
    "channels": 1,
    "tasks": 2,
    "episodes": 3,
    "init": 10,
    "replay": 11,
    "smoothing": 12,
    "explore_freq": 20,
    "explore_partition": 21,
    "greedy": 22,
}

AGENT_OFFSETS = {
    "d3pg": 0,
    "ddpg": 1000,
    "ddpg_softmax": 2000,
    "td3": 3000,
    "greedy": 4000,
}


def stream(seed: int, name: str, offset: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed) & SEED_MASK, STREAMS[name] + offset]))


def episode_seed(run_seed: int, episode: int) -> int:
    """Seed for one episode of a run; shared by every agent given the same run seed."""
    ss = np.random.SeedSequence([int(run_seed) & SEED_MASK, STREAMS["episodes"], int(episode)])
    return int(ss.generate_state(1, np.uint64)[0])
