"""Domain types and the delay / energy / reward equations of the offloading model."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..errors import (
    ConstraintError,
    DegenerateActionError,
    DomainError,
    InvalidChannelError,
    InvalidFrequencyError,
    InvalidStateError,
    UnreachableServerError,
)

#: effective switched capacitance of the edge CPUs
ENERGY_COEFF = 1e-26

SIMPLEX_TOL = 1e-9


@dataclass(frozen=True)
class TaskSpec:
    id: int
    user_id: int
    data_bits: float
    cpu_cycles: float
    deadline_s: float
    arrival_step: int


@dataclass(slots=True)
class SubTask:
    parent_task: int
    server_index: int
    fraction: float
    data_bits: float
    cpu_cycles: float
    freq_fraction: float
    tx_time_s: float = 0.0
    enqueue_time_s: float = 0.0
    effective_freq_hz: float = 0.0
    compute_time_s: float = 0.0
    # predicted end-to-end delay at dispatch and whether it met the parent deadline
    delay_s: float = 0.0
    on_time: bool = True


@dataclass
class EdgeServer:
    index: int
    f_max_hz: float
    queue: deque = field(default_factory=deque)
    in_service: Optional[SubTask] = None
    remaining_cycles: float = 0.0
    busy_until_s: float = 0.0

    def service_time(self, st: SubTask) -> float:
        if st.freq_fraction <= 0:
            raise InvalidStateError(f"sub-task of task {st.parent_task} has freq_fraction {st.freq_fraction}")
        return st.cpu_cycles / (st.freq_fraction * self.f_max_hz)


@dataclass(frozen=True)
class ChannelState:
    bandwidth_hz: float
    tx_power_w: float
    rayleigh_gain: float
    path_loss: float
    noise_power_w: float

    @property
    def snr(self) -> float:
        return self.tx_power_w * self.rayleigh_gain * self.path_loss / self.noise_power_w


@dataclass
class HybridAction:
    """Partition fractions over the K servers plus per-sub-task frequency fractions."""

    partition: np.ndarray
    freq: np.ndarray

    def __post_init__(self):
        self.partition = np.asarray(self.partition, dtype=float)
        self.freq = np.asarray(self.freq, dtype=float)

    def validate(self, n_servers: Optional[int] = None) -> None:
        p, f = self.partition, self.freq
        if p.ndim != 1 or f.shape != p.shape:
            raise ConstraintError(f"partition {p.shape} and freq {f.shape} must be equal-length vectors")
        if n_servers is not None and p.size != n_servers:
            raise ConstraintError(f"expected {n_servers} servers, action has {p.size}")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(f))):
            raise ConstraintError("action contains non-finite entries")
        if np.any(p < 0) or np.any(p > 1):
            raise ConstraintError("partition entries must lie in [0, 1]")
        if abs(p.sum() - 1.0) > SIMPLEX_TOL:
            raise ConstraintError(f"partition sums to {p.sum()!r}, not 1")
        if np.any(f < 0) or np.any(f > 1):
            raise ConstraintError("frequency fractions must lie in [0, 1]")

    def flat(self) -> np.ndarray:
        return np.concatenate([self.partition, self.freq])

    @classmethod
    def from_flat(cls, vec, n_servers: int) -> "HybridAction":
        vec = np.asarray(vec, dtype=float)
        return cls(vec[:n_servers].copy(), vec[n_servers:].copy())


def _check_nonneg_finite(name, x, exc):
    if not math.isfinite(x) or x < 0:
        raise exc(f"{name} must be finite and non-negative, got {x!r}")


def transmission_rate(ch: ChannelState) -> float:
    """Shannon rate ``B log2(1 + P h L / N0)`` in bit/s."""
    for name in ("bandwidth_hz", "tx_power_w", "rayleigh_gain", "path_loss"):
        _check_nonneg_finite(name, getattr(ch, name), InvalidChannelError)
    if not math.isfinite(ch.noise_power_w) or ch.noise_power_w <= 0:
        raise InvalidChannelError(f"noise_power_w must be positive, got {ch.noise_power_w!r}")
    return ch.bandwidth_hz * math.log2(1.0 + ch.snr)


def transmission_time(data_bits: float, rate_bps: float) -> float:
    if data_bits < 0 or rate_bps < 0:
        raise DomainError("data_bits and rate_bps must be non-negative")
    if data_bits == 0:
        return 0.0
    if rate_bps == 0:
        raise UnreachableServerError("zero transmission rate for a non-empty payload")
    return data_bits / rate_bps


def compute_time(cpu_cycles: float, effective_freq_hz: float) -> float:
    if not effective_freq_hz > 0:
        raise InvalidFrequencyError(f"effective frequency must be positive, got {effective_freq_hz!r}")
    return cpu_cycles / effective_freq_hz


def remaining_time(server: EdgeServer, now_s: float = 0.0) -> float:
    """Time left on the sub-task currently in service (0 when idle)."""
    st = server.in_service
    if st is None:
        return 0.0
    return server.remaining_cycles / (st.freq_fraction * server.f_max_hz)


def queue_delay(server: EdgeServer) -> float:
    """Sum of the compute times of every queued (not in-service) sub-task."""
    total = 0.0
    for st in server.queue:
        total += server.service_time(st)
    return total


def subtask_delay(tx: float, remaining: float, queue: float, compute: float) -> float:
    return tx + remaining + queue + compute


def completion_flag(delays: Sequence[float], deadline_s: float) -> int:
    if len(delays) == 0:
        raise DomainError("completion_flag needs at least one delay")
    return 1 if max(delays) <= deadline_s else 0


def transmission_energy(subtasks: Sequence[SubTask], rates: Sequence[float], powers: Sequence[float]) -> float:
    """Transmit energy; ``rates`` and ``powers`` are indexed by server."""
    total = 0.0
    for st in subtasks:
        j = st.server_index
        total += transmission_time(st.data_bits, rates[j]) * powers[j]
    return total


def compute_energy(subtasks: Sequence[SubTask], servers: Sequence[EdgeServer]) -> float:
    total = 0.0
    for st in subtasks:
        f = st.freq_fraction * servers[st.server_index].f_max_hz
        total += ENERGY_COEFF * f * f * st.cpu_cycles
    return total


def step_reward(flag: int, energy_j: float, max_delay_s: float, cfg) -> float:
    """Per-step reward: completion bonus minus log energy and log delay, plus incentive."""
    if not energy_j > 0 or not max_delay_s > 0:
        raise DomainError(f"log arguments must be positive (energy={energy_j!r}, delay={max_delay_s!r})")
    return (
        cfg.alpha * cfg.w1 * flag
        - (1.0 - cfg.alpha) * cfg.w2 * math.log(energy_j)
        - cfg.w3 * math.log(max_delay_s)
        + cfg.incentive_C
    )


def project_partition(partition: np.ndarray, prune_eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Drop entries below ``prune_eps`` and renormalise the rest; returns (indices, fractions)."""
    keep = np.flatnonzero(partition >= prune_eps)
    if keep.size == 0:
        raise DegenerateActionError("every partition entry was pruned")
    kept = partition[keep]
    return keep, kept / kept.sum()


def apply_partition(task: TaskSpec, action: HybridAction, cfg) -> list[SubTask]:
    action.validate(cfg.n_servers)
    keep, fracs = project_partition(action.partition, cfg.partition_prune_eps)
    out = []
    for j, frac in zip(keep.tolist(), fracs.tolist()):
        out.append(
            SubTask(
                parent_task=task.id,
                server_index=j,
                fraction=frac,
                data_bits=frac * task.data_bits,
                cpu_cycles=frac * task.cpu_cycles,
                freq_fraction=max(float(action.freq[j]), cfg.freq_floor),
            )
        )
    return out
