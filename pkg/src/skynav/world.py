"""City world geometry, agent pose and the discrete-action dynamics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .geometry import (
    Box,
    heading_vector,
    left_vector,
    normalize_yaw,
    quantize,
    segment_hits_any,
)

GIMBAL_MIN = -90.0
GIMBAL_MAX = 0.0


class Action(str, Enum):
    """The ten discrete motion commands plus the terminal stop."""

    TURN_LEFT = "turn_left"
    TURN_RIGHT = "turn_right"
    MOVE_FORTH = "move_forth"
    MOVE_LEFT = "move_left"
    MOVE_RIGHT = "move_right"
    MOVE_BACK = "move_back"
    MOVE_UP = "move_up"
    MOVE_DOWN = "move_down"
    GIMBAL_UP = "gimbal_up"
    GIMBAL_DOWN = "gimbal_down"
    STOP = "stop"


# Canonical ordering of the 10 motion commands (stop excluded).
MOTION_ACTIONS: tuple[Action, ...] = (
    Action.TURN_LEFT, Action.TURN_RIGHT,
    Action.MOVE_FORTH, Action.MOVE_LEFT, Action.MOVE_RIGHT, Action.MOVE_BACK,
    Action.MOVE_UP, Action.MOVE_DOWN,
    Action.GIMBAL_UP, Action.GIMBAL_DOWN,
)

HORIZONTAL_ACTIONS = frozenset({Action.MOVE_FORTH, Action.MOVE_BACK,
                                Action.MOVE_LEFT, Action.MOVE_RIGHT})
VERTICAL_ACTIONS = frozenset({Action.MOVE_UP, Action.MOVE_DOWN})
ROTATION_ACTIONS = frozenset({Action.TURN_LEFT, Action.TURN_RIGHT,
                              Action.GIMBAL_UP, Action.GIMBAL_DOWN})


def action_category(action: Action) -> str:
    """Movement category used by the dataset statistics: horizontal/vertical/rotation."""
    if action in HORIZONTAL_ACTIONS:
        return "horizontal"
    if action in VERTICAL_ACTIONS:
        return "vertical"
    if action in ROTATION_ACTIONS:
        return "rotation"
    raise ValueError(f"{action} has no movement category")


@dataclass(frozen=True, eq=False)
class AgentPose:
    """Full controllable state: position (m), yaw (deg CCW from +x), gimbal pitch (deg)."""

    position: np.ndarray
    yaw: float = 0.0
    gimbal: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "position", quantize(self.position))
        object.__setattr__(self, "yaw", normalize_yaw(float(self.yaw)))
        g = float(self.gimbal)
        if not GIMBAL_MIN <= g <= GIMBAL_MAX:
            raise ValueError(f"gimbal {g} outside [{GIMBAL_MIN}, {GIMBAL_MAX}]")
        object.__setattr__(self, "gimbal", g)

    def with_(self, position=None, yaw=None, gimbal=None) -> "AgentPose":
        return AgentPose(
            self.position if position is None else position,
            self.yaw if yaw is None else yaw,
            self.gimbal if gimbal is None else gimbal,
        )

    def to_dict(self) -> dict:
        return {"position": [float(v) for v in self.position],
                "yaw": self.yaw, "gimbal": self.gimbal}

    @classmethod
    def from_dict(cls, d: dict) -> "AgentPose":
        return cls(np.asarray(d["position"], dtype=float), d["yaw"], d["gimbal"])

    def same_as(self, other: "AgentPose", angle_tol: float = 0.0) -> bool:
        return (bool(np.array_equal(self.position, other.position))
                and abs(self.yaw - other.yaw) <= angle_tol
                and abs(self.gimbal - other.gimbal) <= angle_tol)


@dataclass(frozen=True)
class MotionConfig:
    """Fixed per-action magnitudes and the collision safety margin."""

    translation_step: float = 10.0
    vertical_step: float = 10.0
    turn_step: float = 22.5
    gimbal_step: float = 45.0
    safety_radius: float = 1.0

    def __post_init__(self):
        for name in ("translation_step", "vertical_step", "turn_step",
                     "gimbal_step", "safety_radius"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if math.fmod(90.0, self.gimbal_step) != 0.0:
            raise ValueError("gimbal_step must divide 90")


@dataclass(frozen=True)
class Landmark:
    position: np.ndarray
    label: str
    parent: str | None = None  # label of the building it is attached to

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))


@dataclass
class CityWorld:
    """Immutable-after-construction world: box buildings, point landmarks, bounds."""

    buildings: list[Box] = field(default_factory=list)
    landmarks: list[Landmark] = field(default_factory=list)
    bounds: Box = field(default_factory=lambda: Box([-500, -500, 0], [500, 500, 200], "bounds"))
    z_min: float = 2.0

    def __post_init__(self):
        labels = [b.label for b in self.buildings] + [m.label for m in self.landmarks]
        dupes = {x for x in labels if labels.count(x) > 1}
        if dupes:
            raise ValueError(f"duplicate labels in world: {sorted(dupes)}")
        for m in self.landmarks:
            if not self.bounds.contains(m.position):
                raise ValueError(f"landmark {m.label!r} outside world bounds")

    def landmark(self, label: str) -> Landmark | None:
        for m in self.landmarks:
            if m.label == label:
                return m
        return None

    def building_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Stacked (lo, hi) arrays of all buildings, cached (world is immutable)."""
        cached = getattr(self, "_building_arrays", None)
        if cached is None:
            from .geometry import boxes_array

            cached = boxes_array(self.buildings)
            self._building_arrays = cached
        return cached

    def position_free(self, p: np.ndarray, safety_radius: float) -> bool:
        p = np.asarray(p, dtype=float)
        if not self.bounds.contains(p) or p[2] < self.z_min:
            return False
        for b in self.buildings:
            if b.inflate(safety_radius).contains(p):
                return False
        return True

    def to_dict(self) -> dict:
        return {
            "bounds": {"min": self.bounds.lo.tolist(), "max": self.bounds.hi.tolist()},
            "z_min": self.z_min,
            "buildings": [{"min": b.lo.tolist(), "max": b.hi.tolist(), "label": b.label}
                          for b in self.buildings],
            "landmarks": [{"position": m.position.tolist(), "label": m.label,
                           "parent": m.parent}
                          for m in self.landmarks],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CityWorld":
        return cls(
            buildings=[Box(b["min"], b["max"], b["label"]) for b in d["buildings"]],
            landmarks=[Landmark(np.asarray(m["position"]), m["label"], m.get("parent"))
                       for m in d["landmarks"]],
            bounds=Box(d["bounds"]["min"], d["bounds"]["max"], "bounds"),
            z_min=d["z_min"],
        )


EMPTY_WORLD = CityWorld()


def apply_action(pose: AgentPose, action: Action, world: CityWorld,
                 cfg: MotionConfig = MotionConfig()) -> tuple[AgentPose, bool]:
    """One step of the discrete dynamics. Returns (new pose, blocked flag).

    Translations move in the yaw frame; blocked translations leave the pose
    unchanged. Turns and gimbal moves never collide; gimbal clamps to its range.
    """
    if action == Action.STOP:
        raise ValueError("stop is a terminal meta-action, not a motion")

    if action == Action.TURN_LEFT:
        return pose.with_(yaw=pose.yaw + cfg.turn_step), False
    if action == Action.TURN_RIGHT:
        return pose.with_(yaw=pose.yaw - cfg.turn_step), False
    if action == Action.GIMBAL_UP:
        return pose.with_(gimbal=min(pose.gimbal + cfg.gimbal_step, GIMBAL_MAX)), False
    if action == Action.GIMBAL_DOWN:
        return pose.with_(gimbal=max(pose.gimbal - cfg.gimbal_step, GIMBAL_MIN)), False

    if action == Action.MOVE_FORTH:
        delta = cfg.translation_step * heading_vector(pose.yaw)
    elif action == Action.MOVE_BACK:
        delta = -cfg.translation_step * heading_vector(pose.yaw)
    elif action == Action.MOVE_LEFT:
        delta = cfg.translation_step * left_vector(pose.yaw)
    elif action == Action.MOVE_RIGHT:
        delta = -cfg.translation_step * left_vector(pose.yaw)
    elif action == Action.MOVE_UP:
        delta = np.array([0.0, 0.0, cfg.vertical_step])
    elif action == Action.MOVE_DOWN:
        delta = np.array([0.0, 0.0, -cfg.vertical_step])
    else:  # pragma: no cover - enum is exhaustive
        raise ValueError(f"unknown action {action}")

    new_position = quantize(pose.position + delta)
    if not world.bounds.contains(new_position) or new_position[2] < world.z_min:
        return pose, True
    if segment_hits_any(pose.position, new_position, world.buildings,
                        inflate=cfg.safety_radius):
        return pose, True
    return pose.with_(position=new_position), False


def distance_to_goal(pose: AgentPose, goal: np.ndarray) -> float:
    """Euclidean distance from the agent position to the goal point."""
    return float(np.linalg.norm(pose.position - np.asarray(goal, dtype=float)))
