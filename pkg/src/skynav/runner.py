"""Batch execution of a policy over a corpus: run directory layout, resume,
bounded parallelism and gateway usage accounting."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor, as_completed
from pathlib import Path

from .agent import NavigationAgent
from .episode import EpisodeConfig, EpisodeLog, run_episode
from .gateway import GatewayHandle, UsageLedger
from .policies import (
    ActionSamplingPolicy,
    LmmLanguagePolicy,
    OraclePolicy,
    PolicyHandle,
    RandomPolicy,
)
from .scenario import Scenario

POLICY_NAMES = ("random", "sampling", "oracle", "lmm", "agent")


def build_policy(name: str, scenario: Scenario, seed: int,
                 gateway: GatewayHandle | None = None,
                 enhancements: tuple[str, ...] = ()) -> PolicyHandle:
    """Fresh policy instance for one episode (policies are never shared)."""
    if name == "random":
        return RandomPolicy(seed)
    if name == "sampling":
        return ActionSamplingPolicy(seed)
    if name == "oracle":
        return OraclePolicy(scenario.world, scenario.goal_position, scenario.epsilon,
                            scenario.motion)
    if name == "lmm":
        if gateway is None:
            raise ValueError("lmm policy needs a gateway")
        return LmmLanguagePolicy(gateway)
    if name == "agent":
        if gateway is None:
            raise ValueError("agent policy needs a gateway")
        return NavigationAgent(gateway, scenario.world, motion=scenario.motion,
                               enhancements=enhancements)
    raise ValueError(f"unknown policy {name!r}; choose from {POLICY_NAMES}")


def episode_path(run_dir, scenario_id: str) -> Path:
    return Path(run_dir) / f"{scenario_id}.jsonl"


def _is_complete(path: Path) -> bool:
    if not path.exists():
        return False
    try:
        return EpisodeLog.load(path).outcome is not None
    except Exception:
        return False


def run_corpus(scenarios: list[Scenario], policy_name: str, run_dir,
               cfg: EpisodeConfig = EpisodeConfig(), jobs: int = 1,
               gateway: GatewayHandle | None = None,
               enhancements: tuple[str, ...] = (), resume: bool = False,
               config_snapshot: dict | None = None) -> list[EpisodeLog]:
    """Run every scenario, one JSONL per episode plus config + usage ledger."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    snapshot = {"policy": policy_name, "max_steps": cfg.max_steps,
                "epsilon_override": cfg.epsilon, "seed": cfg.seed, "jobs": jobs,
                "enhancements": list(enhancements),
                "episodes": [s.id for s in scenarios]}
    if config_snapshot:
        snapshot.update(config_snapshot)
    (run_dir / "config.json").write_text(json.dumps(snapshot, indent=2, sort_keys=True))

    def one(index_scenario) -> EpisodeLog:
        index, scenario = index_scenario
        path = episode_path(run_dir, scenario.id)
        if resume and _is_complete(path):
            return EpisodeLog.load(path)
        policy = build_policy(policy_name, scenario, seed=cfg.seed + index,
                              gateway=gateway, enhancements=enhancements)
        log = run_episode(scenario, policy, cfg)
        log.save(path)
        return log

    items = list(enumerate(scenarios))
    if jobs <= 1:
        logs = [one(item) for item in items]
    else:
        logs = [None] * len(items)
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = {pool.submit(one, item): item[0] for item in items}
            for fut in as_completed(futures):
                logs[futures[fut]] = fut.result()

    ledger = gateway.ledger if gateway is not None else UsageLedger()
    ledger.save(run_dir / "ledger.json")
    return logs


def load_run(run_dir) -> list[EpisodeLog]:
    """Load every completed episode log of a run, config order preserved.

    Directories without a config snapshot (e.g. teleoperation session logs)
    fall back to globbing, sorted by file name.
    """
    run_dir = Path(run_dir)
    config_path = run_dir / "config.json"
    if config_path.exists():
        config = json.loads(config_path.read_text())
        paths = [episode_path(run_dir, sid) for sid in config["episodes"]]
    else:
        paths = sorted(run_dir.glob("*.jsonl"))
    return [EpisodeLog.load(p) for p in paths if p.exists()]
