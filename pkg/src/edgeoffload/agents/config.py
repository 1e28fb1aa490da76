from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields

from ..errors import ConfigError


@dataclass
class AgentConfig:
    gamma: float = 0.9
    batch_size: int = 256
    lr: float = 5e-4
    tau: float = 0.005
    buffer_capacity: int = 100_000
    warmup_steps: int = 1000
    policy_delay: int = 2
    smoothing_sigma: float = 0.2
    smoothing_clip: float = 0.5
    hidden_sizes: tuple = (64, 128, 64)
    ou_theta: float = 0.15
    ou_sigma: float = 0.2
    dirichlet_eps: float = 1e-6
    # initial per-server concentration of the Dirichlet head (sets the final partition bias to its log)
    dirichlet_init_concentration: float = 1.0
    softmax_noise_sigma: float = 0.2
    greedy_candidates: int = 64

    def __post_init__(self):
        self.hidden_sizes = tuple(int(h) for h in self.hidden_sizes)
        self.validate()

    def validate(self) -> None:
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError("gamma must lie in [0, 1]")
        if not 0.0 < self.tau <= 1.0:
            raise ConfigError("tau must lie in (0, 1]")
        if self.batch_size < 1 or self.buffer_capacity < 1 or self.policy_delay < 1:
            raise ConfigError("batch_size, buffer_capacity and policy_delay must be >= 1")
        if self.warmup_steps < 0 or self.lr < 0:
            raise ConfigError("warmup_steps and lr must be non-negative")
        if self.dirichlet_eps <= 0 or self.dirichlet_init_concentration <= 0:
            raise ConfigError("Dirichlet eps and initial concentration must be positive")
        if self.greedy_candidates < 1:
            raise ConfigError("greedy_candidates must be >= 1")
        for name in ("smoothing_sigma", "ou_sigma", "softmax_noise_sigma"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ConfigError(f"{name} must be finite and >= 0")

    @classmethod
    def from_dict(cls, d: dict) -> "AgentConfig":
        known = {f.name: f for f in fields(cls)}
        unknown = set(d) - set(known)
        if unknown:
            raise ConfigError(f"unknown agent keys: {sorted(unknown)}")
        kw = {}
        for k, v in d.items():
            t = known[k].type
            if k == "hidden_sizes":
                kw[k] = tuple(int(h) for h in v)
            elif t in ("int", int):
                kw[k] = int(v)
            else:
                kw[k] = float(v)
        return cls(**kw)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden_sizes"] = list(self.hidden_sizes)
        return d
