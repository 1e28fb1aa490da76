"""Experiment orchestration: config loading, seeded repetitions, aggregation and CSV output.

Run ``k`` of an experiment uses seed ``base_seed + k`` for the environment
(server draw, channels, task stream) and for the agent. Agents offset their
own exploration streams, so every agent kind sees the same environment for a
given seed and comparisons across kinds are paired.
"""
from __future__ import annotations

import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from importlib import resources

from . import __version__
from .agents import AGENT_KINDS, AgentConfig, evaluate, make_agent, train
from .errors import ConfigError, DivergenceError
from .metrics import CSV_COLUMNS, RunMetrics, episode_metrics, write_csv
from .sim import EnvConfig, MECEnv

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)

PROFILES = ("desk", "paper")

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "RunResult",
    "episode_metrics",
    "load_config",
    "load_profile",
    "mean_rows",
    "run_experiment",
    "run_single",
]


@dataclass
class ExperimentConfig:
    env: EnvConfig = field(default_factory=EnvConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    agent_kind: str = "d3pg"
    episodes: int = 300
    repetitions: int = 5
    base_seed: int = 0
    # explicit per-run seeds; when given, repetitions must equal their count
    seeds: tuple = ()
    eval_episodes: int = 0
    output_path: str = ""
    workers: int = 1
    save_checkpoints: bool = False

    def __post_init__(self):
        self.seeds = tuple(int(s) for s in self.seeds)
        self.validate()

    def validate(self) -> None:
        if self.agent_kind not in AGENT_KINDS:
            raise ConfigError(f"unknown agent kind {self.agent_kind!r}; expected one of {', '.join(AGENT_KINDS)}")
        if self.episodes < 0 or self.eval_episodes < 0:
            raise ConfigError("episode counts must be non-negative")
        if self.repetitions < 1 or self.workers < 1:
            raise ConfigError("repetitions and workers must be >= 1")
        if self.seeds and len(self.seeds) != self.repetitions:
            raise ConfigError(f"{len(self.seeds)} seeds given for {self.repetitions} repetitions")

    def run_seeds(self) -> list[int]:
        return list(self.seeds) if self.seeds else [self.base_seed + k for k in range(self.repetitions)]

    def to_dict(self) -> dict:
        exp = {f.name: getattr(self, f.name) for f in fields(self) if f.name not in ("env", "agent")}
        exp["seeds"] = list(self.seeds)
        return {"env": self.env.to_dict(), "agent": self.agent.to_dict(), "experiment": exp}

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        # "run" holds the metadata a finished experiment writes, so sidecars load back as configs
        unknown = set(d) - {"env", "agent", "experiment", "run"}
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        exp = dict(d.get("experiment", {}))
        bad = set(exp) - ({f.name for f in fields(cls)} - {"env", "agent"})
        if bad:
            raise ConfigError(f"unknown experiment keys: {sorted(bad)}")
        for k in ("episodes", "repetitions", "base_seed", "eval_episodes", "workers"):
            if k in exp:
                exp[k] = int(exp[k])
        return cls(env=EnvConfig.from_dict(d.get("env", {})), agent=AgentConfig.from_dict(d.get("agent", {})), **exp)


def _read_mapping(path) -> dict:
    path = os.fspath(path)
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror or exc}") from exc
    try:
        if path.endswith(".json"):
            return json.loads(raw)
        return tomllib.loads(raw.decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse config file {path}: {exc}") from exc


def _merge(base: dict, over: dict) -> dict:
    out = {k: dict(v) for k, v in base.items()}
    for sec, vals in over.items():
        if not isinstance(vals, dict):
            raise ConfigError(f"config section {sec!r} must be a table")
        out.setdefault(sec, {}).update(vals)
    return out


def profile_mapping(name: str) -> dict:
    if name not in PROFILES:
        raise ConfigError(f"unknown profile {name!r}; expected one of {', '.join(PROFILES)}")
    text = resources.files("edgeoffload.profiles").joinpath(f"{name}.toml").read_text()
    return tomllib.loads(text)


def load_profile(name: str) -> ExperimentConfig:
    """One of the bundled profiles: ``desk`` (CI-sized) or ``paper`` (full scale)."""
    return ExperimentConfig.from_dict(profile_mapping(name))


def load_config(path, profile: str | None = None) -> ExperimentConfig:
    """Read a TOML (or ``.json``) config; keys it omits come from ``profile`` if given, else the defaults."""
    over = _read_mapping(path)
    base = profile_mapping(profile) if profile else {}
    return ExperimentConfig.from_dict(_merge(base, over))


# -- running ---------------------------------------------------------------


@dataclass
class RunResult:
    seed: int
    rows: list
    eval_rows: list = field(default_factory=list)
    error: str = ""
    failed_episode: int = -1
    agent: object = None

    @property
    def ok(self) -> bool:
        return not self.error


@dataclass
class ExperimentResult:
    agent_kind: str
    runs: list
    mean: list
    eval_mean: list
    warnings: list

    @property
    def surviving(self) -> list:
        return [r for r in self.runs if r.ok]


def run_single(cfg: ExperimentConfig, seed: int, keep_agent: bool = False) -> RunResult:
    """Train one agent on one seed, then optionally evaluate it with exploration off."""
    env = MECEnv(replace(cfg.env, seed=seed))
    agent = make_agent(cfg.agent_kind, cfg.env.obs_dim, cfg.env.n_servers, cfg.agent, seed=seed)
    rows: list[RunMetrics] = []
    try:
        train(agent, env, cfg.episodes, run_seed=seed, callback=rows.append)
    except DivergenceError as exc:
        return RunResult(seed, rows, error=str(exc) or type(exc).__name__, failed_episode=exc.episode,
                         agent=agent if keep_agent else None)
    eval_rows = evaluate(agent, env, cfg.eval_episodes, run_seed=seed) if cfg.eval_episodes else []
    return RunResult(seed, rows, eval_rows, agent=agent if keep_agent else None)


def _run_job(args):
    cfg, seed, keep = args
    return run_single(cfg, seed, keep)


def mean_rows(runs: list[list[RunMetrics]]) -> list[RunMetrics]:
    """Arithmetic mean per episode index across runs (truncated to the shortest run)."""
    if not runs:
        return []
    n = min(len(r) for r in runs)
    out = []
    names = [f.name for f in fields(RunMetrics)][1:]
    for ep in range(n):
        vals = {k: sum(getattr(r[ep], k) for r in runs) / len(runs) for k in names}
        out.append(RunMetrics(episode=ep, **vals))
    return out


def run_experiment(cfg: ExperimentConfig, keep_agents: bool = False) -> ExperimentResult:
    """Run every repetition, aggregate the survivors and write CSVs when ``output_path`` is set."""
    seeds = cfg.run_seeds()
    if cfg.output_path:
        _ensure_writable(cfg.output_path)
    jobs = [(cfg, s, keep_agents or cfg.save_checkpoints) for s in seeds]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.workers, len(jobs))) as pool:
            runs = list(pool.map(_run_job, jobs))
    else:
        runs = [_run_job(j) for j in jobs]
    warnings = []
    for k, r in enumerate(runs):
        if not r.ok:
            msg = f"warning: run {k} (seed {r.seed}) diverged at episode {r.failed_episode}: {r.error}; excluded from the mean"
            log.warning(msg)
            warnings.append(msg)
    ok = [r for r in runs if r.ok]
    result = ExperimentResult(cfg.agent_kind, runs, mean_rows([r.rows for r in ok]),
                              mean_rows([r.eval_rows for r in ok if r.eval_rows]), warnings)
    if cfg.output_path:
        write_outputs(cfg, result)
    if not keep_agents:
        for r in runs:
            r.agent = None
    return result


def _ensure_writable(path) -> None:
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {path}: {exc.strerror or exc}") from exc
    if not os.access(path, os.W_OK):
        raise ConfigError(f"output directory {path} is not writable")


def write_outputs(cfg: ExperimentConfig, result: ExperimentResult) -> None:
    out, kind = cfg.output_path, cfg.agent_kind
    for k, r in enumerate(result.runs):
        notes = [] if r.ok else [f"diverged at episode {r.failed_episode}: {r.error}"]
        write_csv(os.path.join(out, f"{kind}_run{k}.csv"), r.rows, notes)
        if r.eval_rows:
            write_csv(os.path.join(out, f"{kind}_run{k}_eval.csv"), r.eval_rows)
        if cfg.save_checkpoints and r.agent is not None and hasattr(r.agent, "save"):
            r.agent.save(os.path.join(out, f"{kind}_run{k}_checkpoint"))
    write_csv(os.path.join(out, f"{kind}_mean.csv"), result.mean, result.warnings)
    if result.eval_mean:
        write_csv(os.path.join(out, f"{kind}_eval_mean.csv"), result.eval_mean, result.warnings)
    meta = cfg.to_dict()
    meta["run"] = {"package_version": __version__, "seeds": cfg.run_seeds(), "csv_columns": list(CSV_COLUMNS)}
    with open(os.path.join(out, f"{kind}_config.json"), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
