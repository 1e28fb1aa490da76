"""Command-line entry point: ``edgeoffload --profile desk --agent all --out runs/``."""
from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import replace

from .agents import AGENT_KINDS
from .errors import ConfigError
from .harness import PROFILES, load_config, load_profile, run_experiment


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="edgeoffload", description="Train offloading agents on the MEC simulator and write per-episode CSVs.")
    p.add_argument("--config", metavar="PATH", help="TOML or JSON experiment config ([env], [agent], [experiment])")
    p.add_argument("--profile", choices=PROFILES, help="bundled base profile; defaults to desk when no --config is given")
    p.add_argument("--agent", choices=AGENT_KINDS + ("all",), help="agent kind, or 'all' for every kind on paired seeds")
    p.add_argument("--episodes", type=int, metavar="N", help="training episodes per run")
    p.add_argument("--seed", type=int, metavar="N", help="base seed; run k uses seed N+k")
    p.add_argument("--repetitions", type=int, metavar="N", help="independent runs per agent")
    p.add_argument("--eval-episodes", type=int, metavar="N", help="greedy-policy evaluation episodes after training")
    p.add_argument("--workers", type=int, metavar="N", help="parallel processes for the repetitions")
    p.add_argument("--out", metavar="DIR", help="output directory for CSVs and the config sidecar")
    p.add_argument("-q", "--quiet", action="store_true", help="only report errors")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO, format="%(message)s")
    log = logging.getLogger("edgeoffload")
    try:
        if args.config:
            cfg = load_config(args.config, args.profile)
        else:
            cfg = load_profile(args.profile or "desk")
        overrides = {
            "episodes": args.episodes,
            "base_seed": args.seed,
            "repetitions": args.repetitions,
            "eval_episodes": args.eval_episodes,
            "workers": args.workers,
            "output_path": args.out,
        }
        overrides = {k: v for k, v in overrides.items() if v is not None}
        if "base_seed" in overrides or "repetitions" in overrides:
            overrides["seeds"] = ()
        cfg = replace(cfg, **overrides)
        if not cfg.output_path:
            raise ConfigError("no output directory: pass --out or set experiment.output_path")
        kinds = AGENT_KINDS if args.agent == "all" else (args.agent or cfg.agent_kind,)
        for kind in kinds:
            run_cfg = replace(cfg, agent_kind=kind)
            t0 = time.perf_counter()
            res = run_experiment(run_cfg)
            last = res.mean[-1] if res.mean else None
            summary = f"final-episode mean reward {last.total_reward:.3f}" if last else "no episodes"
            log.info("%s: %d/%d runs ok, %s (%.1fs)", kind, len(res.surviving), len(res.runs), summary, time.perf_counter() - t0)
            for w in res.warnings:
                log.warning("%s: %s", kind, w)
    except ConfigError as exc:
        print(f"edgeoffload: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"edgeoffload: error: {exc}", file=sys.stderr)
        return 1
    return 0
