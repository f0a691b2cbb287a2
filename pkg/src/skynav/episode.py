"""Episode engine: observe -> policy -> act loop, termination, logging.

The Episode stepper is also driven directly by the control service so human
sessions and policy runs produce byte-identical log structures.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .camera import CameraIntrinsics, SemanticObservation, render
from .policies import PolicyError, PolicyHandle
from .world import Action, AgentPose, apply_action, distance_to_goal

OUTCOME_SUCCESS = "success"
OUTCOME_TIMEOUT = "failure_timeout"
OUTCOME_STOPPED_FAR = "failure_stopped_far"


@dataclass(frozen=True)
class EpisodeConfig:
    max_steps: int = 50
    epsilon: float | None = None   # None -> use the scenario's own epsilon
    seed: int = 0

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.epsilon is not None and self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


@dataclass(frozen=True)
class StepRecord:
    index: int
    pose: AgentPose
    action: Action
    blocked: bool
    distance_to_goal: float
    rationale: str = ""

    def to_dict(self) -> dict:
        return {"type": "step", "index": self.index, "pose": self.pose.to_dict(),
                "action": self.action.value, "blocked": self.blocked,
                "distance_to_goal": self.distance_to_goal, "rationale": self.rationale}

    @classmethod
    def from_dict(cls, d: dict) -> "StepRecord":
        return cls(index=d["index"], pose=AgentPose.from_dict(d["pose"]),
                   action=Action(d["action"]), blocked=d["blocked"],
                   distance_to_goal=d["distance_to_goal"],
                   rationale=d.get("rationale", ""))


@dataclass
class EpisodeLog:
    scenario_id: str
    epsilon: float
    max_steps: int
    initial_pose: AgentPose
    initial_distance: float
    steps: list[StepRecord] = field(default_factory=list)
    outcome: str | None = None
    final_distance: float | None = None

    def distance_series(self) -> list[float]:
        """Distance to goal per moment; length is steps + 1 (initial included)."""
        return [self.initial_distance] + [s.distance_to_goal for s in self.steps]

    def traveled_length(self) -> float:
        """Sum of consecutive pose distances; blocked steps contribute zero."""
        positions = [self.initial_pose.position] + [s.pose.position for s in self.steps]
        return float(sum(np.linalg.norm(b - a) for a, b in zip(positions, positions[1:])))

    def succeeded(self) -> bool:
        return self.outcome == OUTCOME_SUCCESS

    # --- JSONL persistence: header object first, then one object per step ----

    def to_jsonl(self) -> str:
        header = {"type": "header", "scenario_id": self.scenario_id,
                  "epsilon": self.epsilon, "max_steps": self.max_steps,
                  "initial_pose": self.initial_pose.to_dict(),
                  "initial_distance": self.initial_distance}
        lines = [json.dumps(header)]
        lines += [json.dumps(s.to_dict()) for s in self.steps]
        lines.append(json.dumps({"type": "outcome", "outcome": self.outcome,
                                 "final_distance": self.final_distance}))
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_jsonl())

    @classmethod
    def from_jsonl(cls, text: str) -> "EpisodeLog":
        records = [json.loads(line) for line in text.splitlines() if line.strip()]
        if not records or records[0].get("type") != "header":
            raise ValueError("episode log must start with a header object")
        h = records[0]
        log = cls(scenario_id=h["scenario_id"], epsilon=h["epsilon"],
                  max_steps=h["max_steps"],
                  initial_pose=AgentPose.from_dict(h["initial_pose"]),
                  initial_distance=h["initial_distance"])
        for rec in records[1:]:
            if rec.get("type") == "step":
                log.steps.append(StepRecord.from_dict(rec))
            elif rec.get("type") == "outcome":
                log.outcome = rec["outcome"]
                log.final_distance = rec["final_distance"]
        return log

    @classmethod
    def load(cls, path) -> "EpisodeLog":
        return cls.from_jsonl(Path(path).read_text())


class Episode:
    """Single navigation attempt driven step by step.

    Wraps the world dynamics plus termination bookkeeping; callers feed actions
    (from a policy or a human) and read back the observation and progress.
    """

    def __init__(self, scenario, cfg: EpisodeConfig = EpisodeConfig(),
                 intr: CameraIntrinsics = CameraIntrinsics()):
        self.scenario = scenario
        self.cfg = cfg
        self.intr = intr
        self.world = scenario.world
        self.motion = scenario.motion
        self.goal = np.asarray(scenario.goal_position, dtype=float)
        self.epsilon = cfg.epsilon if cfg.epsilon is not None else scenario.epsilon
        self.pose: AgentPose = scenario.start
        self.done = False
        self.log = EpisodeLog(
            scenario_id=scenario.id, epsilon=self.epsilon, max_steps=cfg.max_steps,
            initial_pose=self.pose,
            initial_distance=distance_to_goal(self.pose, self.goal))

    @property
    def step_count(self) -> int:
        return len(self.log.steps)

    def observe(self) -> SemanticObservation:
        return render(self.world, self.pose, self.intr, timestamp=self.step_count)

    def distance(self) -> float:
        return distance_to_goal(self.pose, self.goal)

    def step(self, action: Action, rationale: str = "") -> StepRecord:
        """Apply one action; finishes the episode on stop or when the cap hits."""
        if self.done:
            raise RuntimeError("episode already finished")
        blocked = False
        if action == Action.STOP:
            self._finish(stopped=True)
        else:
            self.pose, blocked = apply_action(self.pose, action, self.world, self.motion)
        record = StepRecord(index=self.step_count, pose=self.pose, action=action,
                            blocked=blocked, distance_to_goal=self.distance(),
                            rationale=rationale)
        self.log.steps.append(record)
        if not self.done and self.step_count >= self.cfg.max_steps:
            self._finish(stopped=False)
        return record

    def _finish(self, stopped: bool) -> None:
        self.done = True
        final = self.distance()
        self.log.final_distance = final
        if final <= self.epsilon:
            self.log.outcome = OUTCOME_SUCCESS
        elif stopped:
            self.log.outcome = OUTCOME_STOPPED_FAR
        else:
            self.log.outcome = OUTCOME_TIMEOUT

def run_episode(scenario, policy: PolicyHandle,
                cfg: EpisodeConfig = EpisodeConfig(),
                intr: CameraIntrinsics = CameraIntrinsics()) -> EpisodeLog:
    """Run one full episode: render, query the policy, apply, until done."""
    episode = Episode(scenario, cfg, intr)
    observation = episode.observe()
    try:
        policy.reset(scenario.instruction, observation)
        while not episode.done:
            action, rationale = policy.next_action(observation)
            episode.step(action, rationale)
            if not episode.done:
                observation = episode.observe()
    except PolicyError:
        # Backend gave out after retries: keep the partial log, score a timeout.
        episode.done = True
        episode.log.final_distance = episode.distance()
        episode.log.outcome = OUTCOME_TIMEOUT
    return episode.log
