"""Environment configuration."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

from ..errors import ConfigError


@dataclass
class EnvConfig:
    n_servers: int = 5
    n_users: int = 50
    data_bits_min: float = 2e5
    data_bits_max: float = 2e7
    cpu_cycles_min: float = 8e6
    cpu_cycles_max: float = 1e7
    f_max_min_hz: float = 2e9
    f_max_max_hz: float = 8e9
    deadline_min_s: float = 0.1
    deadline_max_s: float = 1.0
    snr_db: float = 100.0
    snr_jitter_db: float = 10.0
    bandwidth_hz: float = 1e6
    tx_power_w: float = 0.5
    noise_power_w: float = 1.0
    alpha: float = 0.5
    w1: float = 2.0
    w2: float = 0.2
    w3: float = 0.05
    incentive_C: float = 0.05
    log_floor: float = 1e-6
    slot_duration_s: float = 1e-3
    max_steps: int = 1000
    overload_queue_delay_s: float = 10.0
    partition_prune_eps: float = 1e-3
    freq_floor: float = 0.05
    queue_length_norm: float = 100.0
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, float) and not math.isfinite(v):
                raise ConfigError(f"{f.name} must be finite, got {v!r}")
        if self.n_servers < 1 or self.n_users < 1:
            raise ConfigError("n_servers and n_users must be >= 1")
        for lo, hi in (
            ("data_bits_min", "data_bits_max"),
            ("cpu_cycles_min", "cpu_cycles_max"),
            ("f_max_min_hz", "f_max_max_hz"),
            ("deadline_min_s", "deadline_max_s"),
        ):
            a, b = getattr(self, lo), getattr(self, hi)
            if a > b:
                raise ConfigError(f"{lo}={a} exceeds {hi}={b}")
        if self.data_bits_min < 0 or self.cpu_cycles_min < 0:
            raise ConfigError("task sizes must be non-negative")
        if self.f_max_min_hz <= 0 or self.deadline_min_s <= 0:
            raise ConfigError("server frequency and deadline must be positive")
        if self.bandwidth_hz <= 0 or self.tx_power_w <= 0 or self.noise_power_w <= 0:
            raise ConfigError("bandwidth, tx power and noise power must be positive")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError("alpha must lie in [0, 1]")
        if self.log_floor <= 0 or self.slot_duration_s <= 0:
            raise ConfigError("log_floor and slot_duration_s must be positive")
        if self.max_steps < 1 or self.overload_queue_delay_s <= 0:
            raise ConfigError("max_steps and overload_queue_delay_s must be positive")
        if not 0.0 <= self.partition_prune_eps < 1.0:
            raise ConfigError("partition_prune_eps must lie in [0, 1)")
        if not 0.0 < self.freq_floor <= 1.0:
            raise ConfigError("freq_floor must lie in (0, 1]")
        if self.queue_length_norm <= 0:
            raise ConfigError("queue_length_norm must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "EnvConfig":
        known = {f.name: f for f in fields(cls)}
        unknown = set(d) - set(known)
        if unknown:
            raise ConfigError(f"unknown env keys: {sorted(unknown)}")
        kw = {}
        for k, v in d.items():
            kw[k] = int(v) if known[k].type in ("int", int) else float(v)
        return cls(**kw)

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def obs_dim(self) -> int:
        return 4 * self.n_servers + 3

    @property
    def action_dim(self) -> int:
        return 2 * self.n_servers
