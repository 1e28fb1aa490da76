"""The interaction / learning loop shared by every agent."""
from __future__ import annotations

import logging

from .. import seeding
from ..errors import DivergenceError
from ..metrics import RunMetrics, episode_metrics
from .replay import Transition

log = logging.getLogger(__name__)


def run_episode(agent, env, seed: int, explore: bool = True, buffer=None, learn_hook=None) -> list:
    """Play one episode; stores transitions in ``buffer`` and calls ``learn_hook()`` after each step."""
    obs = env.reset(seed)
    agent.begin_episode()
    outcomes = []
    while not env.done:
        stored, action = agent.act(obs, explore=explore, env=env)
        out = env.step(action)
        outcomes.append(out)
        if buffer is not None:
            # time-limit truncation still bootstraps; only overload is terminal
            buffer.push(Transition(obs, stored, out.reward, out.next_observation, out.overloaded))
        if learn_hook is not None:
            learn_hook()
        obs = out.next_observation
    return outcomes


def train(agent, env, episodes: int, run_seed: int = 0, learn: bool = True, buffer=None, callback=None) -> list[RunMetrics]:
    """Train for ``episodes`` episodes and return one metrics row per episode.

    Learning starts once ``warmup_steps`` transitions have been collected and the
    buffer holds a full batch; before that the agent only explores.
    """
    metrics: list[RunMetrics] = []
    learning = learn and agent.learns
    if agent.learns and buffer is None:
        buffer = agent.make_buffer()
    steps = 0

    def hook():
        nonlocal steps
        steps += 1
        cfg = agent.cfg
        if learning and steps >= cfg.warmup_steps and buffer.size >= cfg.batch_size:
            agent.learn(buffer)

    for ep in range(episodes):
        try:
            outcomes = run_episode(agent, env, seeding.episode_seed(run_seed, ep), explore=True,
                                   buffer=buffer if agent.learns else None,
                                   learn_hook=hook if agent.learns else None)
        except DivergenceError as exc:
            exc.episode = ep
            raise
        row = episode_metrics(outcomes, ep)
        metrics.append(row)
        if callback is not None:
            callback(row)
    return metrics


def evaluate(agent, env, episodes: int, run_seed: int = 0, explore: bool = False) -> list[RunMetrics]:
    """Roll out without learning, on seeds disjoint from the training episodes."""
    rows = []
    for ep in range(episodes):
        seed = seeding.episode_seed(run_seed, 1_000_000 + ep)
        rows.append(episode_metrics(run_episode(agent, env, seed, explore=explore), ep))
    return rows
