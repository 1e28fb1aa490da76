"""Discrete-time multi-server offloading environment with a gym-like reset/step API."""
from __future__ import annotations

import copy
import math
from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .. import seeding
from ..errors import LifecycleError
from .config import EnvConfig
from .model import (
    ChannelState,
    EdgeServer,
    HybridAction,
    SubTask,
    TaskSpec,
    apply_partition,
    completion_flag,
    compute_energy,
    compute_time,
    remaining_time,
    step_reward,
    subtask_delay,
    transmission_energy,
    transmission_rate,
    transmission_time,
)


@dataclass
class StepOutcome:
    reward: float
    lambda_flag: int
    energy_j: float
    max_delay_s: float
    next_observation: np.ndarray
    done: bool
    completed_count: int
    expired_count: int
    overloaded: bool = False
    truncated: bool = False
    n_subtasks: int = 0

    @property
    def reward_parts(self) -> tuple[int, float, float]:
        return self.lambda_flag, self.energy_j, self.max_delay_s


@dataclass
class _Evaluation:
    subtasks: list
    delays: list
    flag: int
    energy_j: float
    max_delay_s: float
    reward: float


class MECEnv:
    """K edge servers fed one head-of-line task per decision slot.

    Each step the agent splits the head task across servers and picks a CPU
    frequency fraction per sub-task. Sub-tasks are queued FIFO per server and
    keep their own frequency for their whole service.
    """

    def __init__(self, cfg: EnvConfig):
        cfg.validate()
        self.cfg = cfg
        rng = seeding.stream(cfg.seed, "servers")
        f_max = rng.uniform(cfg.f_max_min_hz, cfg.f_max_max_hz, size=cfg.n_servers)
        self.f_max = f_max
        self.servers = [EdgeServer(index=j, f_max_hz=float(f_max[j])) for j in range(cfg.n_servers)]
        self.tx_power = np.full(cfg.n_servers, cfg.tx_power_w)
        self.rate_max = transmission_rate(self._channel_from_db(cfg.snr_db + cfg.snr_jitter_db))
        self.done = True
        self._snr_db = None

    @property
    def obs_dim(self) -> int:
        return self.cfg.obs_dim

    @property
    def action_dim(self) -> int:
        return self.cfg.action_dim

    @property
    def n_servers(self) -> int:
        return self.cfg.n_servers

    def _channel_from_db(self, snr_db: float) -> ChannelState:
        cfg = self.cfg
        # unit fading; path loss carries the composite SNR
        path_loss = 10.0 ** (snr_db / 10.0) * cfg.noise_power_w / cfg.tx_power_w
        return ChannelState(cfg.bandwidth_hz, cfg.tx_power_w, 1.0, path_loss, cfg.noise_power_w)

    def channel(self, user: int, server: int) -> ChannelState:
        return self._channel_from_db(float(self._snr_db[user, server]))

    # -- lifecycle ---------------------------------------------------------

    def reset(self, seed: Optional[int] = None) -> np.ndarray:
        cfg = self.cfg
        seed = cfg.seed if seed is None else seed
        ch_rng = seeding.stream(seed, "channels")
        self._snr_db = cfg.snr_db + ch_rng.uniform(-cfg.snr_jitter_db, cfg.snr_jitter_db, size=(cfg.n_users, cfg.n_servers))
        self.rates = np.array(
            [[transmission_rate(self.channel(u, j)) for j in range(cfg.n_servers)] for u in range(cfg.n_users)]
        )
        self._task_rng = seeding.stream(seed, "tasks")
        for s in self.servers:
            s.queue = deque()
            s.in_service = None
            s.remaining_cycles = 0.0
            s.busy_until_s = 0.0
        self._queued_s = [0.0] * cfg.n_servers
        self.now_s = 0.0
        self.step_count = 0
        self.completed_count = 0
        self.expired_count = 0
        self.subtasks_created = 0
        self.subtasks_finished_on_time = 0
        self.subtasks_finished_late = 0
        self._next_task_id = 0
        self.done = False
        self.task = self._draw_task()
        return self.observe()

    def _draw_task(self) -> TaskSpec:
        cfg, rng = self.cfg, self._task_rng
        user = int(rng.integers(cfg.n_users))
        d = rng.uniform(cfg.data_bits_min, cfg.data_bits_max)
        c = rng.uniform(cfg.cpu_cycles_min, cfg.cpu_cycles_max)
        dl = rng.uniform(cfg.deadline_min_s, cfg.deadline_max_s)
        task = TaskSpec(self._next_task_id, user, float(d), float(c), float(dl), self.step_count)
        self._next_task_id += 1
        return task

    def clone(self) -> "MECEnv":
        return copy.deepcopy(self)

    # -- state queries -----------------------------------------------------

    def backlog(self) -> np.ndarray:
        """Per-server remaining + queued compute time in seconds."""
        return np.array([remaining_time(s, self.now_s) + self._queued_s[j] for j, s in enumerate(self.servers)])

    def subtasks_in_system(self) -> int:
        return sum(len(s.queue) + (s.in_service is not None) for s in self.servers)

    def observe(self) -> np.ndarray:
        cfg = self.cfg
        backlog = self.backlog()
        per_server = np.empty((cfg.n_servers, 3))
        per_server[:, 0] = self.f_max / cfg.f_max_max_hz
        per_server[:, 1] = backlog / cfg.overload_queue_delay_s
        per_server[:, 2] = [len(s.queue) / cfg.queue_length_norm for s in self.servers]
        t = self.task
        head = [t.data_bits / cfg.data_bits_max, t.cpu_cycles / cfg.cpu_cycles_max, t.deadline_s / cfg.deadline_max_s]
        return np.concatenate([per_server.ravel(), self.rates[t.user_id] / self.rate_max, head])

    # -- dynamics ----------------------------------------------------------

    def _evaluate(self, action: HybridAction) -> _Evaluation:
        cfg, task = self.cfg, self.task
        subs = apply_partition(task, action, cfg)
        rates = self.rates[task.user_id]
        delays = []
        for st in subs:
            server = self.servers[st.server_index]
            st.effective_freq_hz = st.freq_fraction * server.f_max_hz
            st.tx_time_s = transmission_time(st.data_bits, rates[st.server_index])
            st.compute_time_s = compute_time(st.cpu_cycles, st.effective_freq_hz)
            st.delay_s = subtask_delay(
                st.tx_time_s,
                remaining_time(server, self.now_s),
                self._queued_s[st.server_index],
                st.compute_time_s,
            )
            st.on_time = st.delay_s <= task.deadline_s
            st.enqueue_time_s = self.now_s
            delays.append(st.delay_s)
        flag = completion_flag(delays, task.deadline_s)
        energy = transmission_energy(subs, rates, self.tx_power) + compute_energy(subs, self.servers)
        max_delay = max(delays)
        reward = step_reward(flag, max(energy, cfg.log_floor), max(max_delay, cfg.log_floor), cfg)
        return _Evaluation(subs, delays, flag, energy, max_delay, reward)

    def _as_action(self, action) -> HybridAction:
        if isinstance(action, HybridAction):
            return action
        return HybridAction.from_flat(action, self.cfg.n_servers)

    def preview(self, action) -> _Evaluation:
        """One-step reward of ``action`` against the current state, without mutating it."""
        if self.done:
            raise LifecycleError("episode is done; call reset()")
        return self._evaluate(self._as_action(action))

    def step(self, action) -> StepOutcome:
        if self.done:
            raise LifecycleError("step() called on a finished episode; call reset()")
        cfg = self.cfg
        ev = self._evaluate(self._as_action(action))
        for st in ev.subtasks:
            self.servers[st.server_index].queue.append(st)
            self._queued_s[st.server_index] += st.compute_time_s
        self.subtasks_created += len(ev.subtasks)
        if ev.flag:
            self.completed_count += 1
        else:
            self.expired_count += 1

        self._advance(cfg.slot_duration_s)
        self.step_count += 1
        backlog = self.backlog()
        overloaded = bool(np.any(backlog > cfg.overload_queue_delay_s))
        truncated = self.step_count >= cfg.max_steps and not overloaded
        self.done = overloaded or truncated
        self.task = self._draw_task()
        return StepOutcome(
            reward=ev.reward,
            lambda_flag=ev.flag,
            energy_j=ev.energy_j,
            max_delay_s=ev.max_delay_s,
            next_observation=self.observe(),
            done=self.done,
            completed_count=self.completed_count,
            expired_count=self.expired_count,
            overloaded=overloaded,
            truncated=truncated,
            n_subtasks=len(ev.subtasks),
        )

    def _advance(self, dt: float) -> None:
        for j, s in enumerate(self.servers):
            budget = dt
            while budget > 0.0:
                st = s.in_service
                if st is None:
                    if not s.queue:
                        break
                    st = s.queue.popleft()
                    self._queued_s[j] = self._queued_s[j] - st.compute_time_s if s.queue else 0.0
                    s.in_service = st
                    s.remaining_cycles = st.cpu_cycles
                need = s.remaining_cycles / st.effective_freq_hz
                if need <= budget:
                    budget -= need
                    s.in_service = None
                    s.remaining_cycles = 0.0
                    if st.on_time:
                        self.subtasks_finished_on_time += 1
                    else:
                        self.subtasks_finished_late += 1
                else:
                    s.remaining_cycles -= budget * st.effective_freq_hz
                    budget = 0.0
            s.busy_until_s = self.now_s + dt + remaining_time(s) + self._queued_s[j]
        self.now_s += dt
