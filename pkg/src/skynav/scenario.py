"""Scenario schema, JSON persistence and the procedural city/task generator.

Each scenario file is a self-contained JSON document (world embedded) so
fixtures are hermetic and diff-able. Ground truth comes from running the path
oracle, which also guarantees every generated scenario is solvable.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from .camera import SemanticObservation
from .episode import Episode, EpisodeConfig, EpisodeLog
from .geometry import Box
from .policies import OraclePolicy
from .world import Action, AgentPose, CityWorld, Landmark, MotionConfig

SCHEMA_VERSION = 1

RELATIONS = ("on top of", "at the entrance of", "behind", "left of", "right of", "near")

GROUP_TARGET_BANDS = {
    "short": (55.0, 110.0),
    "middle": (125.0, 215.0),
    "long": (230.0, 300.0),
}
GROUP_LIMIT_BANDS = {
    "short": (30.0, 118.2),
    "middle": (118.2, 223.6),
    "long": (223.6, 340.0),
}

LANDMARK_VOCAB = (
    "water tank", "red beacon", "glass pavilion", "antenna mast", "billboard",
    "rooftop garden", "loading dock", "charging pad", "solar array", "air vent",
)
BUILDING_COLORS = ("red", "blue", "gray", "white", "green", "brown", "glass", "amber")
BUILDING_FORMS = ("tower", "slab", "block", "hall", "court", "annex")


class SchemaError(Exception):
    """Scenario document violates the schema; message names the field path."""


class GenerationFailure(Exception):
    """Generator could not place a valid scenario within the attempt budget."""


@dataclass(frozen=True)
class GroundTruth:
    polyline: list
    actions: list[Action]
    length: float


@dataclass
class Scenario:
    id: str
    world: CityWorld
    start: AgentPose
    goal_position: np.ndarray
    epsilon: float
    instruction: str
    ground_truth: GroundTruth
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.goal_position = np.asarray(self.goal_position, dtype=float)
        if not self.instruction:
            raise ValueError("instruction must be non-empty")
        # Ground-truth flights terminate inside the success radius, so the
        # sanity bound is against the trajectory's own chord.
        poly = self.ground_truth.polyline
        if len(poly) >= 2:
            chord = float(np.linalg.norm(np.asarray(poly[-1]) - np.asarray(poly[0])))
            if self.ground_truth.length + 1e-6 < chord:
                raise ValueError("ground-truth length below its endpoint chord")

    @property
    def motion(self) -> MotionConfig:
        return MotionConfig()

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "id": self.id,
            "world": self.world.to_dict(),
            "start": self.start.to_dict(),
            "goal": {"position": self.goal_position.tolist(), "epsilon": self.epsilon,
                     "instruction": self.instruction},
            "ground_truth": {
                "polyline": [list(map(float, p)) for p in self.ground_truth.polyline],
                "actions": [a.value for a in self.ground_truth.actions],
                "length": self.ground_truth.length,
            },
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        validate_document(d)
        return cls(
            id=d["id"],
            world=CityWorld.from_dict(d["world"]),
            start=AgentPose.from_dict(d["start"]),
            goal_position=np.asarray(d["goal"]["position"], dtype=float),
            epsilon=d["goal"]["epsilon"],
            instruction=d["goal"]["instruction"],
            ground_truth=GroundTruth(
                polyline=[np.asarray(p, dtype=float) for p in d["ground_truth"]["polyline"]],
                actions=[Action(a) for a in d["ground_truth"]["actions"]],
                length=d["ground_truth"]["length"],
            ),
            meta=d.get("meta", {}),
        )


_VEC3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
_POSE = {"type": "object", "additionalProperties": False,
         "required": ["position", "yaw", "gimbal"],
         "properties": {"position": _VEC3, "yaw": {"type": "number"},
                        "gimbal": {"type": "number"}}}

SCENARIO_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version", "id", "world", "start", "goal", "ground_truth", "meta"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "id": {"type": "string", "minLength": 1},
        "world": {
            "type": "object", "additionalProperties": False,
            "required": ["bounds", "z_min", "buildings", "landmarks"],
            "properties": {
                "bounds": {"type": "object", "additionalProperties": False,
                           "required": ["min", "max"],
                           "properties": {"min": _VEC3, "max": _VEC3}},
                "z_min": {"type": "number"},
                "buildings": {"type": "array", "items": {
                    "type": "object", "additionalProperties": False,
                    "required": ["min", "max", "label"],
                    "properties": {"min": _VEC3, "max": _VEC3,
                                   "label": {"type": "string"}}}},
                "landmarks": {"type": "array", "items": {
                    "type": "object", "additionalProperties": False,
                    "required": ["position", "label", "parent"],
                    "properties": {"position": _VEC3, "label": {"type": "string"},
                                   "parent": {"type": ["string", "null"]}}}},
            },
        },
        "start": _POSE,
        "goal": {"type": "object", "additionalProperties": False,
                 "required": ["position", "epsilon", "instruction"],
                 "properties": {"position": _VEC3,
                                "epsilon": {"type": "number", "exclusiveMinimum": 0},
                                "instruction": {"type": "string", "minLength": 1}}},
        "ground_truth": {"type": "object", "additionalProperties": False,
                         "required": ["polyline", "actions", "length"],
                         "properties": {"polyline": {"type": "array", "items": _VEC3},
                                        "actions": {"type": "array",
                                                    "items": {"enum": [a.value for a in Action]}},
                                        "length": {"type": "number", "minimum": 0}}},
        "meta": {"type": "object"},
    },
}


def validate_document(doc: dict) -> None:
    if not isinstance(doc, dict) or "schema_version" not in doc:
        raise SchemaError("schema_version: missing")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise SchemaError(f"schema_version: unsupported value {doc['schema_version']!r}")
    try:
        jsonschema.validate(doc, SCENARIO_SCHEMA)
    except jsonschema.ValidationError as e:
        path = ".".join(str(p) for p in e.absolute_path) or "(document)"
        raise SchemaError(f"{path}: {e.message}") from e


def save_scenario(scenario: Scenario, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(scenario.to_dict(), indent=2, sort_keys=True) + "\n")


def load_scenario(path) -> Scenario:
    doc = json.loads(Path(path).read_text())
    return Scenario.from_dict(doc)


# --- spatial relation predicates ---------------------------------------------

def relation_holds(relation: str, landmark_pos: np.ndarray, building: Box,
                   start_position: np.ndarray) -> bool:
    """Geometric truth of an instruction's spatial relation."""
    p = np.asarray(landmark_pos, dtype=float)
    c = building.center()
    half = (building.hi - building.lo) / 2.0
    if relation == "on top of":
        above = p[2] >= building.hi[2] - 1.0
        inside = (building.lo[0] - 1 <= p[0] <= building.hi[0] + 1
                  and building.lo[1] - 1 <= p[1] <= building.hi[1] + 1)
        return above and inside and p[2] <= building.hi[2] + 12.0
    if relation == "at the entrance of":
        horiz = float(np.linalg.norm((p - c)[:2]))
        near_wall = horiz <= float(np.hypot(half[0], half[1])) + 8.0
        low = p[2] <= building.lo[2] + 12.0
        return near_wall and low
    u = (c - np.asarray(start_position, dtype=float))[:2]
    n = np.linalg.norm(u)
    if n == 0:
        return False
    u = u / n
    w = (p - c)[:2]
    along = float(np.dot(w, u))
    lateral = float(u[0] * w[1] - u[1] * w[0])  # + means left as seen from start
    if relation == "behind":
        return along > 0 and abs(lateral) <= along + max(half[0], half[1])
    if relation == "left of":
        return lateral > 0 and abs(along) <= abs(lateral) + max(half[0], half[1])
    if relation == "right of":
        return lateral < 0 and abs(along) <= abs(lateral) + max(half[0], half[1])
    if relation == "near":
        horiz = float(np.linalg.norm((p - c)[:2]))
        return horiz <= float(np.hypot(half[0], half[1])) + 25.0
    raise ValueError(f"unknown relation {relation!r}")


# --- generator ----------------------------------------------------------------

@dataclass(frozen=True)
class GeneratorParams:
    grid_cells: int = 6
    cell_size: float = 60.0
    building_count: tuple[int, int] = (9, 15)
    height_range: tuple[float, float] = (20.0, 85.0)
    footprint_range: tuple[float, float] = (18.0, 34.0)
    group: str = "short"
    epsilon: float = 20.0
    decoy_landmarks: int = 3
    max_attempts: int = 100
    vertical_fraction: tuple[float, float] = (0.35, 0.75)

    def __post_init__(self):
        if self.group not in GROUP_TARGET_BANDS:
            raise ValueError(f"group must be one of {tuple(GROUP_TARGET_BANDS)}")


class _BareScenario:
    """Minimal scenario stand-in for the generator's render-free self-check."""

    def __init__(self, world, start, goal, epsilon):
        self.id = "selfcheck"
        self.world = world
        self.motion = MotionConfig()
        self.goal_position = goal
        self.epsilon = epsilon
        self.start = start
        self.instruction = "selfcheck"


def _lean_oracle_run(world: CityWorld, start: AgentPose, goal: np.ndarray,
                     epsilon: float, max_steps: int = 50) -> EpisodeLog | None:
    """Run the oracle without rendering (it only reads the pose); None on failure."""
    policy = OraclePolicy(world, goal, epsilon)
    episode = Episode(_BareScenario(world, start, goal, epsilon),
                      EpisodeConfig(max_steps=max_steps))
    obs = SemanticObservation(camera_pose=episode.pose, entities=(), timestamp=0)
    try:
        policy.reset("selfcheck", obs)
    except Exception:
        return None
    while not episode.done:
        action, rationale = policy.next_action(obs)
        episode.step(action, rationale)
        obs = SemanticObservation(camera_pose=episode.pose, entities=(),
                                  timestamp=episode.step_count)
    return episode.log if episode.log.outcome == "success" else None


def _place_buildings(rng: random.Random, params: GeneratorParams) -> list[Box]:
    n_cells = params.grid_cells
    size = params.cell_size
    extent = n_cells * size / 2.0
    cells = [(i, j) for i in range(n_cells) for j in range(n_cells)]
    rng.shuffle(cells)
    count = rng.randint(*params.building_count)
    boxes: list[Box] = []
    used_names: set[str] = set()
    for (i, j) in cells[:count]:
        w = rng.uniform(*params.footprint_range)
        d = rng.uniform(*params.footprint_range)
        h = rng.uniform(*params.height_range)
        # jitter within the cell, keeping a street gap to neighbors
        margin_x = (size - w) / 2.0 - 6.0
        margin_y = (size - d) / 2.0 - 6.0
        cx = -extent + (i + 0.5) * size + rng.uniform(-margin_x, margin_x)
        cy = -extent + (j + 0.5) * size + rng.uniform(-margin_y, margin_y)
        name = f"{rng.choice(BUILDING_COLORS)} {rng.choice(BUILDING_FORMS)}"
        if name in used_names:
            name = f"{name} {len(boxes) + 1}"
        used_names.add(name)
        boxes.append(Box([cx - w / 2, cy - d / 2, 0.0], [cx + w / 2, cy + d / 2, h], name))
    return boxes


def _place_goal(rng: random.Random, world_boxes: list[Box], relation: str,
                anchor: Box, start_hint: np.ndarray) -> np.ndarray:
    c = anchor.center()
    half = (anchor.hi - anchor.lo) / 2.0
    if relation == "on top of":
        return np.array([c[0] + rng.uniform(-half[0] * 0.5, half[0] * 0.5),
                         c[1] + rng.uniform(-half[1] * 0.5, half[1] * 0.5),
                         anchor.hi[2] + rng.uniform(2.5, 6.0)])
    if relation == "at the entrance of":
        side = rng.choice([(1, 0), (-1, 0), (0, 1), (0, -1)])
        offset = (half[0] + rng.uniform(4.0, 8.0)) * side[0], \
                 (half[1] + rng.uniform(4.0, 8.0)) * side[1]
        return np.array([c[0] + offset[0], c[1] + offset[1], rng.uniform(4.0, 9.0)])
    u = (c - start_hint)[:2]
    n = np.linalg.norm(u)
    u = u / n if n > 0 else np.array([1.0, 0.0])
    lateral = np.array([-u[1], u[0]])
    reach = float(np.hypot(half[0], half[1]))
    if relation == "behind":
        direction = u
    elif relation == "left of":
        direction = lateral
    elif relation == "right of":
        direction = -lateral
    else:  # near
        ang = rng.uniform(0, 2 * math.pi)
        direction = np.array([math.cos(ang), math.sin(ang)])
    dist = reach + rng.uniform(5.0, 12.0)
    z = rng.uniform(5.0, max(8.0, anchor.hi[2] * 0.6))
    return np.array([c[0] + direction[0] * dist, c[1] + direction[1] * dist, z])


def generate(seed: int, params: GeneratorParams = GeneratorParams()) -> Scenario:
    """Deterministically build one solvable scenario in the requested group."""
    rng = random.Random(seed)
    lo_target, hi_target = GROUP_TARGET_BANDS[params.group]
    lo_limit, hi_limit = GROUP_LIMIT_BANDS[params.group]
    extent = params.grid_cells * params.cell_size / 2.0
    bounds = Box([-extent - 80, -extent - 80, 0], [extent + 80, extent + 80, 250], "bounds")

    for attempt in range(params.max_attempts):
        buildings = _place_buildings(rng, params)
        world_probe = CityWorld(buildings=buildings, landmarks=[], bounds=bounds)
        anchor = rng.choice(buildings)
        relation = rng.choice(RELATIONS)

        # Rough start hint used for view-dependent relations; refined below.
        hint_ang = rng.uniform(0, 2 * math.pi)
        target_len = rng.uniform(lo_target, hi_target)
        start_hint = anchor.center() + np.array(
            [math.cos(hint_ang), math.sin(hint_ang), 0.0]) * target_len

        goal = _place_goal(rng, buildings, relation, anchor, start_hint)
        if not world_probe.position_free(goal, 2.0):
            continue

        # Discrete flight is axis-aligned, so traveled length is near the
        # Manhattan length; size the straight-line radius accordingly.
        vf = rng.uniform(*params.vertical_fraction)
        manhattan = vf + math.sqrt(max(1.0 - vf * vf, 0.0))
        r = target_len / manhattan
        dz = vf * r
        goal_z = goal[2]
        start_z = goal_z + dz if goal_z + dz <= 200.0 else max(goal_z - dz, 12.0)
        horiz = math.sqrt(max(r ** 2 - (start_z - goal_z) ** 2, 100.0))
        start_pos = np.array([goal[0] + math.cos(hint_ang) * horiz,
                              goal[1] + math.sin(hint_ang) * horiz,
                              start_z])
        if not bounds.contains(start_pos) or not world_probe.position_free(start_pos, 3.0):
            continue
        if not relation_holds(relation, goal, anchor, start_pos):
            continue

        goal_label = rng.choice(LANDMARK_VOCAB)
        landmarks = [Landmark(goal, goal_label,
                              parent=anchor.label if relation == "on top of" else None)]
        decoys = [v for v in LANDMARK_VOCAB if v != goal_label]
        rng.shuffle(decoys)
        for k in range(min(params.decoy_landmarks, len(decoys))):
            host = rng.choice(buildings)
            pos = np.array([host.center()[0], host.center()[1],
                            host.hi[2] + rng.uniform(2.5, 5.0)])
            if world_probe.position_free(pos, 1.5) and bounds.contains(pos):
                landmarks.append(Landmark(pos, decoys[k], parent=host.label))

        try:
            world = CityWorld(buildings=buildings, landmarks=landmarks, bounds=bounds)
        except ValueError:
            continue

        # Pilots begin roughly facing the task area: bias the initial yaw toward
        # the goal so turn actions stay a seasoning, not the meal.
        goal_bearing = math.degrees(math.atan2(goal[1] - start_pos[1],
                                               goal[0] - start_pos[0]))
        yaw = (goal_bearing + rng.uniform(-65.0, 65.0)) // 22.5 * 22.5
        start = AgentPose(start_pos, yaw=yaw, gimbal=0.0)
        log = _lean_oracle_run(world, start, goal, params.epsilon)
        if log is None:
            continue
        length = log.traveled_length()
        if not (lo_limit < length < hi_limit):
            continue

        actions = [s.action for s in log.steps if s.action != Action.STOP]
        polyline = [start.position.tolist()] + [s.pose.position.tolist()
                                                for s in log.steps
                                                if s.action != Action.STOP]
        instruction = f"Fly to the {goal_label} {relation} the {anchor.label}."
        return Scenario(
            id=f"scn-{params.group}-{seed:08d}",
            world=world,
            start=start,
            goal_position=goal,
            epsilon=params.epsilon,
            instruction=instruction,
            ground_truth=GroundTruth(polyline=polyline, actions=actions, length=length),
            meta={"seed": seed, "template_id": relation, "group": params.group,
                  "attempt": attempt},
        )
    raise GenerationFailure(
        f"no valid scenario for seed {seed} group {params.group} "
        f"after {params.max_attempts} attempts")


# --- corpus ------------------------------------------------------------------

MANIFEST_NAME = "manifest.json"


def generate_corpus(seed: int, count: int, groups: list[str], out_dir,
                    params: GeneratorParams = GeneratorParams()) -> list[Scenario]:
    """Generate `count` scenarios cycling through `groups`; writes a manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scenarios = []
    entries = []
    for i in range(count):
        group = groups[i % len(groups)]
        p = GeneratorParams(**{**params.__dict__, "group": group})
        scenario = generate(seed * script_stride() + i, p)
        fname = f"{scenario.id}.json"
        save_scenario(scenario, out_dir / fname)
        scenarios.append(scenario)
        entries.append({"id": scenario.id, "file": fname, "group": group,
                        "gt_length": scenario.ground_truth.length})
    manifest = {"schema_version": SCHEMA_VERSION, "seed": seed, "count": count,
                "groups": groups, "scenarios": entries}
    (out_dir / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return scenarios


def script_stride() -> int:
    # Seed stride keeps per-scenario seeds disjoint across corpus seeds.
    return 100003


def load_corpus(corpus_dir) -> list[Scenario]:
    corpus_dir = Path(corpus_dir)
    manifest_path = corpus_dir / MANIFEST_NAME
    if not manifest_path.exists():
        raise FileNotFoundError(f"no {MANIFEST_NAME} in {corpus_dir}")
    manifest = json.loads(manifest_path.read_text())
    return [load_scenario(corpus_dir / entry["file"]) for entry in manifest["scenarios"]]


def load_manifest(corpus_dir) -> dict:
    return json.loads((Path(corpus_dir) / MANIFEST_NAME).read_text())
