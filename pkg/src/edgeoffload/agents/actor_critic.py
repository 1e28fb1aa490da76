"""Deterministic-policy-gradient agents: D3PG, DDPG, DDPG-softmax and TD3.

All four share one actor/critic skeleton. The actor emits ``2K`` pre-activations:
the first ``K`` feed the partition head, the last ``K`` pass through a sigmoid
to give frequency fractions. The variants differ in

* the partition head: Dirichlet (d3pg), softmax (ddpg_softmax) or an
  unconstrained sigmoid projected onto the simplex at submission (ddpg, td3);
* the number of critics (two for td3) and the actor/target update delay;
* whether target-policy smoothing noise is applied (frequency branch only).
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .. import nn, policy, seeding
from ..errors import DivergenceError
from ..nn import Adam, DenseNet, init_xavier, sigmoid, soft_update
from .config import AgentConfig
from .replay import ReplayBuffer


@dataclass(frozen=True)
class Variant:
    head: str
    n_critics: int
    delayed: bool
    smoothing: bool


VARIANTS = {
    "d3pg": Variant("dirichlet", 1, True, True),
    "ddpg": Variant("raw", 1, False, False),
    "ddpg_softmax": Variant("softmax", 1, True, True),
    "td3": Variant("raw", 2, True, True),
}


def project_to_simplex(raw) -> np.ndarray:
    """Clamp to [0, 1] and renormalise; an all-zero vector maps to the uniform split."""
    r = np.clip(np.asarray(raw, dtype=np.float64), 0.0, 1.0)
    s = r.sum(axis=-1, keepdims=True)
    k = r.shape[-1]
    return np.where(s > 0, r / np.where(s > 0, s, 1.0), 1.0 / k)


def td_target(reward, done, next_q, gamma: float) -> np.ndarray:
    """``y = r + gamma * (1 - done) * Q'(s', mu'(s'))``."""
    reward = np.asarray(reward, dtype=np.float64)
    return reward + gamma * (1.0 - np.asarray(done, dtype=np.float64)) * np.asarray(next_q, dtype=np.float64)


def critic_update(critic: DenseNet, opt: Adam, inputs: np.ndarray, target_y: np.ndarray) -> float:
    """One Adam step on the mean squared TD error; returns the pre-step loss."""
    q, cache = critic.forward(inputs)
    q = q[:, 0]
    err = q - target_y
    loss = float(np.mean(err * err))
    if not np.isfinite(loss):
        raise DivergenceError(f"critic loss is {loss}")
    grads, _ = critic.backward(cache, (2.0 / len(err)) * err[:, None])
    opt.step(grads)
    return loss


def actor_update(actor: DenseNet, critic: DenseNet, opt: Adam, obs: np.ndarray, head) -> float:
    """Ascend the batch-mean critic value of the actor's deterministic action.

    ``head(pre) -> (action, backward)`` maps actor pre-activations to a flat
    action and returns the vector-Jacobian product for them.
    """
    pre, acache = actor.forward(obs)
    action, head_backward = head(pre)
    n = len(obs)
    q, ccache = critic.forward(np.concatenate([obs, action], axis=1))
    objective = float(q.mean())
    _, g_in = critic.backward(ccache, np.full((n, 1), 1.0 / n), need_param_grads=False)
    g_pre = head_backward(g_in[:, obs.shape[1]:])
    grads, _ = actor.backward(acache, -g_pre)
    opt.step(grads)
    return objective


class ActorCriticAgent:
    kind: str

    def __init__(self, kind: str, obs_dim: int, n_servers: int, cfg: AgentConfig | None = None, seed: int = 0):
        if kind not in VARIANTS:
            raise ValueError(f"unknown agent kind {kind!r}; expected one of {sorted(VARIANTS)}")
        self.kind = kind
        self.variant = VARIANTS[kind]
        self.cfg = cfg = cfg or AgentConfig()
        self.obs_dim = obs_dim
        self.n_servers = k = n_servers
        self.act_dim = 2 * k
        self.policy_delay = cfg.policy_delay if self.variant.delayed else 1
        # the softmax variant differs from d3pg only in its partition head, so it
        # shares every stream except partition exploration
        off = seeding.AGENT_OFFSETS["d3pg" if kind == "ddpg_softmax" else kind]
        init_rng = seeding.stream(seed, "init", off)
        hidden = list(cfg.hidden_sizes)
        self.actor = init_xavier([obs_dim] + hidden + [self.act_dim], init_rng)
        if self.variant.head == "dirichlet" and cfg.dirichlet_init_concentration != 1.0:
            self.actor.biases[-1][:k] = np.log(cfg.dirichlet_init_concentration)
        self.critics = [init_xavier([obs_dim + self.act_dim] + hidden + [1], init_rng) for _ in range(self.variant.n_critics)]
        self.actor_target = self.actor.copy()
        self.critic_targets = [c.copy() for c in self.critics]
        self.actor_opt = Adam(self.actor, lr=cfg.lr)
        self.critic_opts = [Adam(c, lr=cfg.lr) for c in self.critics]
        self.rng_freq = seeding.stream(seed, "explore_freq", off)
        self.rng_partition = seeding.stream(seed, "explore_partition", seeding.AGENT_OFFSETS[kind])
        self.rng_replay = seeding.stream(seed, "replay", off)
        self.rng_smoothing = seeding.stream(seed, "smoothing", off)
        self.ou_freq = policy.OUState.zeros(k, theta=cfg.ou_theta, sigma=cfg.ou_sigma)
        self.ou_partition = policy.OUState.zeros(k, theta=cfg.ou_theta, sigma=cfg.ou_sigma)
        self.critic_steps = 0
        self.actor_steps = 0

    @property
    def learns(self) -> bool:
        return True

    def make_buffer(self) -> ReplayBuffer:
        return ReplayBuffer(self.cfg.buffer_capacity, self.obs_dim, self.act_dim)

    def begin_episode(self) -> None:
        self.ou_freq.reset()
        self.ou_partition.reset()

    # -- heads -------------------------------------------------------------

    def head(self, pre: np.ndarray):
        """Deterministic action and its backward map, batched over rows."""
        k, eps = self.n_servers, self.cfg.dirichlet_eps
        zp, zf = pre[:, :k], pre[:, k:]
        f = sigmoid(zf)
        h = self.variant.head
        if h == "dirichlet":
            p = policy.dirichlet_mean_from_logits(zp, eps)
            back_p = lambda g: policy.dirichlet_mean_backward(zp, g, eps)
        elif h == "softmax":
            p = policy.softmax(zp)
            back_p = lambda g: policy.softmax_backward(p, g)
        else:
            p = sigmoid(zp)
            back_p = lambda g: g * p * (1.0 - p)

        def backward(g):
            return np.concatenate([back_p(g[:, :k]), g[:, k:] * f * (1.0 - f)], axis=1)

        return np.concatenate([p, f], axis=1), backward

    def act(self, obs, explore: bool = True, env=None):
        """Return ``(stored_action, env_action)`` as flat ``[partition, freq]`` vectors.

        ``stored_action`` is what the critic sees; it differs from ``env_action``
        only for the unconstrained heads, whose raw output is projected onto the
        simplex before submission.
        """
        k = self.n_servers
        pre, _ = self.actor.forward(obs)
        zp, zf = pre[:k], pre[k:]
        freq = sigmoid(zf)
        h = self.variant.head
        if explore:
            freq = np.clip(freq + policy.ou_step(self.ou_freq, self.rng_freq), 0.0, 1.0)
        if h == "dirichlet":
            params = policy.concentration_from_logits(zp, self.cfg.dirichlet_eps)
            part = policy.dirichlet_sample(params, self.rng_partition) if explore else policy.dirichlet_mean(params)
        elif h == "softmax":
            if explore:
                zp = zp + self.rng_partition.normal(0.0, self.cfg.softmax_noise_sigma, size=k)
            part = policy.softmax(zp)
        else:
            part = sigmoid(zp)
            if explore:
                part = np.clip(part + policy.ou_step(self.ou_partition, self.rng_partition), 0.0, 1.0)
            stored = np.concatenate([part, freq])
            return stored, np.concatenate([project_to_simplex(part), freq])
        a = np.concatenate([part, freq])
        return a, a

    def target_action(self, next_obs: np.ndarray) -> np.ndarray:
        pre, _ = self.actor_target.forward(next_obs)
        a, _ = self.head(pre)
        if self.variant.smoothing:
            k = self.n_servers
            noise = policy.clipped_noise(self.cfg.smoothing_sigma, self.cfg.smoothing_clip, a[:, k:].shape, self.rng_smoothing)
            a[:, k:] = np.clip(a[:, k:] + noise, 0.0, 1.0)
        return a

    # -- learning ----------------------------------------------------------

    def learn(self, buffer: ReplayBuffer) -> dict:
        cfg = self.cfg
        b = buffer.sample(cfg.batch_size, self.rng_replay)
        a_next = self.target_action(b.next_state)
        nxt = np.concatenate([b.next_state, a_next], axis=1)
        q_next = self.critic_targets[0].forward(nxt)[0][:, 0]
        for ct in self.critic_targets[1:]:
            q_next = np.minimum(q_next, ct.forward(nxt)[0][:, 0])
        y = td_target(b.reward, b.done, q_next, cfg.gamma)
        inputs = np.concatenate([b.state, b.action], axis=1)
        losses = [critic_update(c, opt, inputs, y) for c, opt in zip(self.critics, self.critic_opts)]
        self.critic_steps += 1
        out = {"critic_loss": losses[0]}
        if self.critic_steps % self.policy_delay == 0:
            out["actor_objective"] = actor_update(self.actor, self.critics[0], self.actor_opt, b.state, self.head)
            self.actor_steps += 1
            soft_update(self.actor_target, self.actor, cfg.tau)
            for t, c in zip(self.critic_targets, self.critics):
                soft_update(t, c, cfg.tau)
        return out

    # -- checkpoints -------------------------------------------------------

    def _named(self):
        nets = [("actor", self.actor, self.actor_opt), ("actor_target", self.actor_target, None)]
        for i, (c, t, o) in enumerate(zip(self.critics, self.critic_targets, self.critic_opts)):
            nets += [(f"critic{i}", c, o), (f"critic{i}_target", t, None)]
        return nets

    def save(self, directory) -> None:
        os.makedirs(directory, exist_ok=True)
        for name, net, opt in self._named():
            nn.save_net(net, os.path.join(directory, f"{name}.dnet"))
            if opt is not None:
                nn.save_adam(opt.state, net, os.path.join(directory, f"{name}.adam"))

    def load(self, directory) -> None:
        for name, net, opt in self._named():
            net.load_params_from(nn.load_net(os.path.join(directory, f"{name}.dnet")))
            if opt is not None:
                opt.state = nn.load_adam(os.path.join(directory, f"{name}.adam"))
