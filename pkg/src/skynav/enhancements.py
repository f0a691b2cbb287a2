"""Four capability boosters: grounded centering control, cross-view input,
simulator-backed imagination loop, and FOV-overlap sparse memory admission."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Iterator

import numpy as np

from .camera import CameraIntrinsics, SemanticObservation, fov_overlap, render
from .world import Action, AgentPose, CityWorld, MOTION_ACTIONS, MotionConfig, apply_action

ENHANCEMENT_NAMES = ("grounding", "crossview", "imagination", "sparse_memory")

DEFAULT_DEAD_ZONE = 56.0  # px; 10% of image width


class UnknownLabel(Exception):
    """The requested label exists nowhere in the world."""


@dataclass(frozen=True)
class GroundingResult:
    found: bool
    label: str
    pixel_box: tuple[float, float, float, float] | None = None
    center: tuple[float, float] | None = None


@dataclass(frozen=True)
class SparseMemoryConfig:
    threshold: float = 0.7   # admit when max recent overlap drops below this
    lookback: int = 5
    samples: int = 256

    def __post_init__(self):
        if not 0.0 < self.threshold <= 1.0:
            raise ValueError("threshold must be in (0, 1]")
        if self.lookback < 1:
            raise ValueError("lookback must be >= 1")


def ground_target(world: CityWorld, pose: AgentPose, intr: CameraIntrinsics,
                  label: str) -> GroundingResult:
    """Simulator-oracle grounding: locate a labeled entity in the current frame."""
    known = {m.label for m in world.landmarks} | {b.label for b in world.buildings}
    base = label.split(":")[0]
    if label not in known and base not in known:
        raise UnknownLabel(label)
    obs = render(world, pose, intr)
    for e in obs.entities:
        if e.label == label or e.label.split(":")[0] == label:
            u0, v0, u1, v1 = e.box
            return GroundingResult(found=True, label=e.label, pixel_box=e.box,
                                   center=((u0 + u1) / 2.0, (v0 + v1) / 2.0))
    return GroundingResult(found=False, label=label)


def grounded_controller_step(g: GroundingResult, dead_zone: float = DEFAULT_DEAD_ZONE,
                             intr: CameraIntrinsics = CameraIntrinsics()) -> Action:
    """Deterministic centering controller: turn, then tilt, then advance."""
    if not g.found or g.center is None:
        raise ValueError("controller needs a successful grounding result")
    u, v = g.center
    if abs(u - intr.cx) > dead_zone:
        return Action.TURN_RIGHT if u > intr.cx else Action.TURN_LEFT
    if abs(v - intr.cy) > dead_zone:
        return Action.GIMBAL_DOWN if v > intr.cy else Action.GIMBAL_UP
    return Action.MOVE_FORTH


def imagination_loop(world: CityWorld, pose: AgentPose,
                     scorer: Callable[[Action, AgentPose, SemanticObservation], float],
                     proposer: Iterable[Action] | Iterator[Action],
                     max_iters: int = 10,
                     cfg: MotionConfig = MotionConfig(),
                     intr: CameraIntrinsics = CameraIntrinsics(),
                     accept_threshold: float = 0.0) -> Action:
    """Preview candidate actions against the simulator before committing.

    The scorer sees the ground-truth post-action (pose, observation) without the
    episode state changing; a score above `accept_threshold` accepts the
    candidate immediately, otherwise the best-scored candidate seen is returned.
    """
    it = iter(proposer)
    best: tuple[float, Action] | None = None
    for _ in range(max_iters):
        try:
            candidate = next(it)
        except StopIteration:
            break
        probe_pose, blocked = apply_action(pose, candidate, world, cfg)
        probe_obs = render(world, probe_pose, intr)
        score = scorer(candidate, probe_pose, probe_obs)
        if blocked:
            score -= 1e6  # a rejected move can still win the exhaustion path
        if score > accept_threshold:
            return candidate
        if best is None or score > best[0]:
            best = (score, candidate)
    if best is None:
        raise ValueError("proposer yielded no candidates")
    return best[1]


def sparse_memory_admit(world: CityWorld, new_pose: AgentPose,
                        stored_poses: list[AgentPose],
                        cfg: SparseMemoryConfig = SparseMemoryConfig(),
                        intr: CameraIntrinsics = CameraIntrinsics()) -> bool:
    """Admit a frame only when it overlaps little with recently stored views."""
    if not stored_poses:
        return True
    recent = stored_poses[-cfg.lookback:]
    worst = max(fov_overlap(world, new_pose, p, intr, samples=cfg.samples)
                for p in recent)
    return worst < cfg.threshold


def greedy_distance_scorer(goal: np.ndarray, current_pose: AgentPose) -> Callable:
    """Accept-iff-closer scorer for the imagination loop."""
    goal = np.asarray(goal, dtype=float)
    base = float(np.linalg.norm(current_pose.position - goal))

    def score(action: Action, pose: AgentPose, obs: SemanticObservation) -> float:
        return base - float(np.linalg.norm(pose.position - goal))

    return score


def canonical_proposer() -> Iterator[Action]:
    """Candidate actions in canonical order (used when no LMM drives the loop)."""
    return iter(MOTION_ACTIONS)
