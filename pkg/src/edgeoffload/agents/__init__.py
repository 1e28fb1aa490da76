from .actor_critic import (
    VARIANTS,
    ActorCriticAgent,
    actor_update,
    critic_update,
    project_to_simplex,
    td_target,
)
from .config import AgentConfig
from .greedy import GreedyAgent, greedy_act, greedy_candidates
from .replay import Batch, ReplayBuffer, Transition
from .training import evaluate, run_episode, train

AGENT_KINDS = ("d3pg", "ddpg", "ddpg_softmax", "td3", "greedy")


def make_agent(kind: str, obs_dim: int, n_servers: int, cfg: AgentConfig | None = None, seed: int = 0):
    cfg = cfg or AgentConfig()
    if kind == "greedy":
        return GreedyAgent(n_servers, cfg.greedy_candidates, seed)
    return ActorCriticAgent(kind, obs_dim, n_servers, cfg, seed)
