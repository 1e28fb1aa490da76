from .config import EnvConfig
from .env import MECEnv, StepOutcome
from .model import (
    ENERGY_COEFF,
    ChannelState,
    EdgeServer,
    HybridAction,
    SubTask,
    TaskSpec,
    apply_partition,
    completion_flag,
    compute_energy,
    compute_time,
    queue_delay,
    remaining_time,
    step_reward,
    subtask_delay,
    transmission_energy,
    transmission_rate,
    transmission_time,
)
