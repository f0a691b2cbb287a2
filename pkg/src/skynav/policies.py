"""Policy contract and the basic baselines: random, action sampling, path
oracle and the plain action-as-language LMM policy with a 30-moment window."""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass, field

import numpy as np

from . import prompts
from .camera import SemanticObservation, observation_text
from .gateway import GatewayError, GatewayHandle, GatewayRequest
from .geometry import bearing_of, wrap_angle
from .planning import shortest_path
from .world import (
    Action,
    AgentPose,
    CityWorld,
    HORIZONTAL_ACTIONS,
    MOTION_ACTIONS,
    MotionConfig,
    ROTATION_ACTIONS,
    VERTICAL_ACTIONS,
    apply_action,
)

# Dataset-level action-category proportions (horizontal / vertical / rotation).
CATEGORY_WEIGHTS = {"horizontal": 0.450, "vertical": 0.282, "rotation": 0.268}

MEMORY_CAPACITY = 30


class PolicyError(Exception):
    """Unrecoverable policy failure (e.g. gateway retries exhausted)."""


class PolicyHandle:
    """Per-episode stateful policy: reset once, then next_action per step."""

    name = "policy"
    requires_backend = False

    def reset(self, instruction: str, initial_observation: SemanticObservation) -> None:
        pass

    def next_action(self, observation: SemanticObservation) -> tuple[Action, str]:
        raise NotImplementedError


# --- action parsing ---------------------------------------------------------

# Aliases cover the long command names and the angle_up/angle_down forms that
# appear in real model transcripts.
_ALIASES = {
    "adjust camera gimbal upwards": Action.GIMBAL_UP,
    "adjust camera gimbal downwards": Action.GIMBAL_DOWN,
    "adjust gimbal up": Action.GIMBAL_UP,
    "adjust gimbal down": Action.GIMBAL_DOWN,
    "angle up": Action.GIMBAL_UP,
    "angle down": Action.GIMBAL_DOWN,
    "move forward": Action.MOVE_FORTH,
    "move ahead": Action.MOVE_FORTH,
    "move backward": Action.MOVE_BACK,
    "halt": Action.STOP,
    "finish": Action.STOP,
}


def _canon(text: str) -> str:
    return re.sub(r"[\s_\-]+", " ", text.strip().lower())


def parse_action(text: str) -> Action | None:
    """Liberal parse of one action from model output; None when unrecognizable.

    Matching is case/spacing/punctuation-insensitive and scans the text for the
    first command mention when the whole string is not itself a command.
    """
    flat = _canon(text)
    canonical = {_canon(a.value): a for a in Action}
    if flat in canonical:
        return canonical[flat]
    if flat in _ALIASES:
        return _ALIASES[flat]
    candidates: list[tuple[int, Action]] = []
    for phrase, action in list(canonical.items()) + list(_ALIASES.items()):
        idx = flat.find(phrase)
        if idx >= 0:
            candidates.append((idx, action))
    if not candidates:
        return None
    candidates.sort(key=lambda c: (c[0], -len(c[1].value)))
    return candidates[0][1]


# --- memory window ----------------------------------------------------------

def select_window(history_length: int, capacity: int = MEMORY_CAPACITY) -> list[int]:
    """Indices of history moments kept in the prompt window.

    Uniform sampling with the first and most recent moments always preserved;
    returns everything when the history fits.
    """
    if capacity < 2:
        raise ValueError("capacity must be >= 2")
    if history_length <= 0:
        return []
    if history_length <= capacity:
        return list(range(history_length))
    out: list[int] = []
    for k in range(capacity):
        i = int(math.floor(k * (history_length - 1) / (capacity - 1) + 0.5))
        if not out or i != out[-1]:
            out.append(i)
    if out[0] != 0:
        out.insert(0, 0)
    if out[-1] != history_length - 1:
        out.append(history_length - 1)
    return out


@dataclass
class MemoryWindow:
    """Bounded per-episode history of (observation summary, action, rationale)."""

    capacity: int = MEMORY_CAPACITY
    entries: list[tuple[str, str, str]] = field(default_factory=list)

    def append(self, observation_summary: str, action: str, rationale: str) -> None:
        self.entries.append((observation_summary, action, rationale))

    def windowed(self) -> list[tuple[int, tuple[str, str, str]]]:
        idx = select_window(len(self.entries), self.capacity)
        return [(i, self.entries[i]) for i in idx]

    def render(self) -> str:
        if not self.entries:
            return "(no actions taken yet)"
        lines = []
        for i, (obs, action, rationale) in self.windowed():
            lines.append(f"[moment {i}] saw: {obs} | did: {action} | because: {rationale}")
        return "\n".join(lines)


# --- baselines --------------------------------------------------------------

class RandomPolicy(PolicyHandle):
    """Uniform over the 10 motion commands; never stops before the step cap."""

    name = "random"

    def __init__(self, seed: int = 0):
        self._rng = random.Random(seed)

    def reset(self, instruction, initial_observation):
        pass

    def next_action(self, observation):
        action = self._rng.choice(MOTION_ACTIONS)
        return action, "uniform random draw"


class ActionSamplingPolicy(PolicyHandle):
    """Samples a movement category with the dataset proportions, then uniform."""

    name = "sampling"
    _CATEGORIES = (
        ("horizontal", tuple(sorted(HORIZONTAL_ACTIONS, key=lambda a: a.value))),
        ("vertical", tuple(sorted(VERTICAL_ACTIONS, key=lambda a: a.value))),
        ("rotation", tuple(sorted(ROTATION_ACTIONS, key=lambda a: a.value))),
    )

    def __init__(self, seed: int = 0):
        self._rng = random.Random(seed)

    def next_action(self, observation):
        names = [c[0] for c in self._CATEGORIES]
        weights = [CATEGORY_WEIGHTS[n] for n in names]
        cat = self._rng.choices(names, weights=weights, k=1)[0]
        pool = dict(self._CATEGORIES)[cat]
        action = self._rng.choice(pool)
        return action, f"sampled {cat} category"


class OraclePolicy(PolicyHandle):
    """Follows the shortest-path oracle; the harness stand-in for a human pilot.

    Descends a static path potential (remaining arc length plus cross-track
    error), turning first when grossly misaligned and keeping the gimbal aimed
    at the goal slope. A visited-cell tabu lets it back out of lattice corners
    the 10 m steps cannot thread directly.
    """

    name = "oracle"
    _TRANSLATIONS = (Action.MOVE_FORTH, Action.MOVE_LEFT, Action.MOVE_RIGHT,
                     Action.MOVE_BACK, Action.MOVE_UP, Action.MOVE_DOWN)

    def __init__(self, world: CityWorld, goal: np.ndarray, epsilon: float = 20.0,
                 cfg: MotionConfig = MotionConfig()):
        self.world = world
        self.goal = np.asarray(goal, dtype=float)
        self.epsilon = epsilon
        self.cfg = cfg
        self._pts = np.zeros((0, 3))
        self._seg = np.zeros((0, 3))
        self._seg_len = np.zeros(0)
        self._cum = np.zeros(0)
        self._total = 0.0
        self._turning = False
        self._visited: set[tuple[int, int, int]] = set()

    def reset(self, instruction, initial_observation):
        start = initial_observation.camera_pose.position
        path, length = shortest_path(self.world, start, self.goal, self.cfg)
        self._pts = np.asarray(path, dtype=float)
        if len(path) < 2:
            self._pts = np.vstack([self._pts, self.goal])
        self._seg = self._pts[1:] - self._pts[:-1]
        self._seg_len = np.linalg.norm(self._seg, axis=1)
        self._cum = np.concatenate([[0.0], np.cumsum(self._seg_len)])
        self._total = float(self._cum[-1])
        self._turning = False
        self._visited = set()

    def _project(self, p: np.ndarray) -> tuple[float, float]:
        """(arc length of closest path point, cross-track distance)."""
        rel = p[None, :] - self._pts[:-1]
        denom = np.maximum(self._seg_len ** 2, 1e-12)
        t = np.clip(np.sum(rel * self._seg, axis=1) / denom, 0.0, 1.0)
        proj = self._pts[:-1] + t[:, None] * self._seg
        d = np.linalg.norm(p[None, :] - proj, axis=1)
        k = int(np.argmin(d))
        arc = float(self._cum[k] + t[k] * self._seg_len[k])
        return arc, float(d[k])

    def _potential(self, p: np.ndarray) -> float:
        arc, cross = self._project(p)
        return (self._total - arc) + cross

    def _lookahead(self, p: np.ndarray) -> np.ndarray:
        arc, _ = self._project(p)
        target_arc = min(arc + 2.0 * self.cfg.translation_step, self._total)
        k = int(np.searchsorted(self._cum, target_arc, side="right") - 1)
        k = min(max(k, 0), len(self._seg) - 1)
        frac = (target_arc - self._cum[k]) / max(self._seg_len[k], 1e-12)
        return self._pts[k] + frac * self._seg[k]

    def _gimbal_correction(self, pose: AgentPose) -> Action | None:
        """Aim the camera at the goal slope, with hysteresis against flapping."""
        rel = self.goal - pose.position
        elev = math.degrees(math.atan2(rel[2], math.hypot(rel[0], rel[1])))
        desired = float(np.clip(elev, -90.0, 0.0))
        if abs(desired - pose.gimbal) <= 0.75 * self.cfg.gimbal_step:
            return None
        return Action.GIMBAL_DOWN if desired < pose.gimbal else Action.GIMBAL_UP

    @staticmethod
    def _cell(p: np.ndarray) -> tuple[int, int, int]:
        return tuple(np.round(p * 10.0).astype(int))

    def next_action(self, observation):
        pose = observation.camera_pose
        if float(np.linalg.norm(pose.position - self.goal)) <= self.epsilon:
            return Action.STOP, f"within {self.epsilon:.0f} m of goal"
        self._visited.add(self._cell(pose.position))

        gimbal_action = self._gimbal_correction(pose)
        if gimbal_action is not None:
            return gimbal_action, "aiming camera at goal slope"

        ahead = self._lookahead(pose.position)
        v = ahead - pose.position
        err = wrap_angle(bearing_of(v) - pose.yaw) if math.hypot(v[0], v[1]) > 1e-6 else 0.0
        # Hysteresis: start turning on gross misalignment, stop once well
        # aligned; small offsets are absorbed by lateral moves.
        if abs(err) >= 2.0 * self.cfg.turn_step:
            self._turning = True
        if self._turning:
            if abs(err) >= self.cfg.turn_step / 2.0:
                action = Action.TURN_LEFT if err > 0 else Action.TURN_RIGHT
                return action, f"turning toward route (heading error {err:.1f} deg)"
            self._turning = False

        current = self._potential(pose.position)
        scored: list[tuple[float, Action, bool]] = []
        for action in self._TRANSLATIONS:
            candidate, blocked = apply_action(pose, action, self.world, self.cfg)
            if blocked:
                continue
            scored.append((self._potential(candidate.position), action,
                           self._cell(candidate.position) in self._visited))
        scored.sort(key=lambda s: s[0])
        for score, action, seen in scored:
            if score < current - 1e-6:
                return action, f"following route ({score:.1f} m of potential left)"
        for score, action, seen in scored:
            if not seen:
                return action, "backing out of a lattice corner"
        if scored:
            return scored[0][1], "retracing under pressure"
        return Action.TURN_LEFT, "boxed in; scanning"


class LmmLanguagePolicy(PolicyHandle):
    """Action-as-language: the model answers with a command and a rationale.

    With include_image=True each prompt additionally carries the rasterized
    schematic frame as a base64 data-URL part (for image-capable backends);
    the default stays text-only for deterministic desk-scale runs.
    """

    name = "lmm"
    requires_backend = True

    def __init__(self, gateway: GatewayHandle, template: str | None = None,
                 model: str = "default", include_image: bool = False):
        self.gateway = gateway
        self.template = template or prompts.load("language_policy")
        self.model = model
        self.include_image = include_image
        self.instruction = ""
        self.memory = MemoryWindow()

    def reset(self, instruction, initial_observation):
        self.instruction = instruction
        self.memory = MemoryWindow()

    def _prompt(self, observation: SemanticObservation) -> str:
        return prompts.fill(
            self.template,
            instruction=self.instruction,
            gimbal=f"{observation.camera_pose.gimbal:.1f}",
            memory=self.memory.render(),
            observation=observation_text(observation),
            commands=", ".join(a.value for a in MOTION_ACTIONS) + ", stop",
        )

    def _content(self, prompt: str, observation: SemanticObservation):
        if not self.include_image:
            return prompt
        import base64

        from .camera import observation_png

        png = base64.b64encode(observation_png(observation)).decode("ascii")
        return [
            {"type": "text", "text": prompt},
            {"type": "image_url",
             "image_url": {"url": f"data:image/png;base64,{png}"}},
        ]

    def _ask(self, prompt: str, observation: SemanticObservation) -> str:
        req = GatewayRequest(
            messages=[{"role": "user", "content": self._content(prompt, observation)}],
            model=self.model, tag="plain")
        return self.gateway.complete(req)

    def next_action(self, observation):
        prompt = self._prompt(observation)
        try:
            reply = self._ask(prompt, observation)
            action = parse_action(reply)
            if action is None:
                reply = self._ask(prompt + "\nAnswer with exactly one command "
                                           "from the list, nothing else.",
                                  observation)
                action = parse_action(reply)
        except GatewayError as e:
            raise PolicyError(str(e)) from e
        if action is None:
            action, rationale = Action.MOVE_FORTH, "parse-failure fallback"
        else:
            rationale = reply.strip()
        self.memory.append(observation_text(observation, max_entities=5),
                           action.value, rationale[:200])
        return action, rationale


def make_baseline(name: str, seed: int = 0, **kwargs) -> PolicyHandle:
    if name == "random":
        return RandomPolicy(seed)
    if name == "sampling":
        return ActionSamplingPolicy(seed)
    raise ValueError(f"unknown baseline {name!r}")
