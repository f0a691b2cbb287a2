"""Six-module navigation agent: localization, planning, imagination,
decision-making, active perception and memory, composed into a policy."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import prompts
from .camera import (
    CameraIntrinsics,
    SemanticObservation,
    ViewSet,
    observation_text,
    panorama,
    probe_views,
)
from .enhancements import (
    SparseMemoryConfig,
    UnknownLabel,
    ground_target,
    grounded_controller_step,
    sparse_memory_admit,
)
from .gateway import GatewayError, GatewayHandle, GatewayRequest
from .policies import MEMORY_CAPACITY, PolicyError, PolicyHandle, parse_action, select_window
from .world import Action, AgentPose, CityWorld, MOTION_ACTIONS, MotionConfig

ARRIVAL_MARKER = "GOAL_REACHED"
COMMAND_LIST = "\n".join(a.value for a in MOTION_ACTIONS)


@dataclass
class AgentMemory:
    """Per-step histories of observation summaries, plan texts and actions.

    The three lists share a step index; one triple is appended per step. With
    sparse admission, low-novelty observations are skipped (plans and actions
    always append), so the observation list may be shorter.
    """

    admission: str = "all"  # "all" | "sparse"
    observations: list[tuple[AgentPose, str]] = field(default_factory=list)
    plans: list[str] = field(default_factory=list)
    actions: list[Action] = field(default_factory=list)
    world: CityWorld | None = None
    sparse_cfg: SparseMemoryConfig = field(default_factory=SparseMemoryConfig)

    def __post_init__(self):
        if self.admission not in ("all", "sparse"):
            raise ValueError("admission must be 'all' or 'sparse'")
        if self.admission == "sparse" and self.world is None:
            raise ValueError("sparse admission needs a world for the overlap test")


def memory_update(memory: AgentMemory, observation: SemanticObservation,
                  plan_text: str, action: Action) -> AgentMemory:
    """Append one (observation, plan, action) triple, honoring the admission policy."""
    admit = True
    if memory.admission == "sparse":
        stored = [pose for pose, _ in memory.observations]
        admit = sparse_memory_admit(memory.world, observation.camera_pose, stored,
                                    memory.sparse_cfg)
    if admit:
        memory.observations.append((observation.camera_pose, observation_text(observation)))
    memory.plans.append(plan_text)
    memory.actions.append(action)
    return memory


def render_history(memory: AgentMemory, capacity: int = MEMORY_CAPACITY) -> str:
    """Windowed observation+action history for the localization prompt."""
    n = len(memory.actions)
    if n == 0:
        return "(no actions taken yet)"
    lines = []
    for i in select_window(n, capacity):
        obs_txt = memory.observations[i][1] if i < len(memory.observations) else "(frame skipped)"
        lines.append(f"[moment {i}] view: {obs_txt.splitlines()[0] if obs_txt else obs_txt}"
                     f" | action: {memory.actions[i].value}")
    return "\n".join(lines)


@dataclass
class PlanState:
    perception_plan: list[str]
    route_plan: tuple[str, str, str]
    progress_note: str = ""
    parse_flags: list[str] = field(default_factory=list)

    def as_text(self) -> str:
        steps = "\n".join(f"{i + 1}. {s}" for i, s in enumerate(self.perception_plan))
        s, f, e = self.route_plan
        return (f"Perception plan:\n{steps}\n"
                f"Route: start={s}; flight={f}; end={e}\nProgress: {self.progress_note}")


@dataclass(frozen=True)
class CandidateOutcome:
    action: Action
    predicted_effect: str
    score_hint: float | None = None


def _ask(gateway: GatewayHandle, tag: str, prompt: str, model: str) -> str:
    req = GatewayRequest(messages=[{"role": "user", "content": prompt}],
                         model=model, tag=tag)
    return gateway.complete(req)


def _obs_text(observation) -> str:
    """Accepts a SemanticObservation or an already-serialized view string."""
    if isinstance(observation, str):
        return observation
    return observation_text(observation)


def localize(memory: AgentMemory, observation, gateway: GatewayHandle,
             instruction: str, step: int, model: str = "default") -> str:
    """Summarize the agent's motion relative to scene anchors (one Q_loc call)."""
    prompt = prompts.fill(
        prompts.load("q_loc"),
        step=step, instruction=instruction,
        memory=render_history(memory),
        observation=_obs_text(observation),
    )
    text = _ask(gateway, "Q_loc", prompt, model)
    return text.strip() or "(localization unavailable)"


_SECTION_RE = re.compile(r"^\s*(REASONING|PERCEPTION PLAN|ROUTE|PROGRESS)\s*:\s*(.*)$",
                         re.IGNORECASE)


def plan(localization: str, observation, gateway: GatewayHandle,
         instruction: str, step: int, model: str = "default") -> PlanState:
    """One Q_plan call parsed into perception steps, route and progress."""
    prompt = prompts.fill(
        prompts.load("q_plan"),
        step=step, instruction=instruction, localization=localization,
        observation=_obs_text(observation),
    )
    reply = _ask(gateway, "Q_plan", prompt, model)
    return parse_plan_reply(reply)


def parse_plan_reply(reply: str) -> PlanState:
    sections: dict[str, list[str]] = {}
    current: str | None = None
    for line in reply.splitlines():
        m = _SECTION_RE.match(line)
        if m:
            current = m.group(1).upper()
            sections[current] = [m.group(2)] if m.group(2) else []
        elif current:
            sections[current].append(line)
    flags: list[str] = []

    perception: list[str] = []
    for line in sections.get("PERCEPTION PLAN", []):
        item = re.sub(r"^\s*(?:\d+[.)]|[-*])\s*", "", line).strip()
        if item:
            perception.append(item)
    if not perception:
        perception = ["locate goal"]
        flags.append("perception-plan-parse-failure")

    route_lines = [ln.strip() for ln in sections.get("ROUTE", []) if ln.strip()]
    route = {"start": "unspecified", "flight": "unspecified", "end": "unspecified"}
    for ln in route_lines:
        m = re.match(r"^(START|FLIGHT|END)\s*:\s*(.*)$", ln, re.IGNORECASE)
        if m:
            route[m.group(1).lower()] = m.group(2).strip()
    if any(v == "unspecified" for v in route.values()):
        flags.append("route-parse-incomplete")

    progress = " ".join(sections.get("PROGRESS", [])).strip()
    return PlanState(perception_plan=perception,
                     route_plan=(route["start"], route["flight"], route["end"]),
                     progress_note=progress, parse_flags=flags)


def imagine(plan_state: PlanState, localization: str, observation,
            gateway: GatewayHandle, step: int,
            model: str = "default") -> list[CandidateOutcome]:
    """Predict each motion command's effect in one batched Q_imgn call."""
    prompt = prompts.fill(
        prompts.load("q_imgn"),
        step=step, plan=plan_state.as_text(), localization=localization,
        observation=_obs_text(observation), commands=COMMAND_LIST,
    )
    reply = _ask(gateway, "Q_imgn", prompt, model)
    effects: dict[Action, str] = {}
    for line in reply.splitlines():
        if ":" not in line:
            continue
        head, tail = line.split(":", 1)
        action = parse_action(head)
        if action in MOTION_ACTIONS and action not in effects:
            effects[action] = tail.strip()
    outcomes = []
    for action in MOTION_ACTIONS:
        if action in effects:
            outcomes.append(CandidateOutcome(action, effects[action]))
        else:
            outcomes.append(CandidateOutcome(action, "unknown effect (backfilled)"))
    return outcomes


def _parse_decision(reply: str) -> tuple[Action, bool, str]:
    action = parse_action(reply)
    confident = bool(re.search(r"\bCONFIDENT\b", reply))
    if re.search(r"\bUNSURE\b", reply):
        confident = False
    if action not in MOTION_ACTIONS:
        return Action.MOVE_FORTH, False, f"illegal-decision-fallback: {reply.strip()[:160]}"
    return action, confident, reply.strip()


def decide(candidates: list[CandidateOutcome], plan_state: PlanState,
           gateway: GatewayHandle, step: int,
           model: str = "default") -> tuple[Action, bool, str]:
    """Select the command that best serves the plan; UNSURE unless stated."""
    if len(candidates) != len(MOTION_ACTIONS):
        raise ValueError("decide expects one outcome per motion command")
    listing = "\n".join(f"{c.action.value}: {c.predicted_effect}" for c in candidates)
    prompt = prompts.fill(
        prompts.load("q_dm"),
        step=step, plan=plan_state.as_text(), candidates=listing,
    )
    reply = _ask(gateway, "Q_DM", prompt, model)
    return _parse_decision(reply)


def describe_views(views: ViewSet) -> str:
    parts = []
    for tag, obs in views.views:
        parts.append(f"## {tag}\n{observation_text(obs)}")
    return "\n".join(parts)


def active_perceive(plan_state: PlanState, localization: str, world: CityWorld,
                    pose: AgentPose, gateway: GatewayHandle, step: int,
                    intr: CameraIntrinsics = CameraIntrinsics(),
                    model: str = "default") -> tuple[Action, str]:
    """Probe six directions and ask for a revised decision (one combined call)."""
    views = probe_views(world, pose, intr)
    prompt = prompts.fill(
        prompts.load("q_active"),
        step=step, plan=plan_state.as_text(), localization=localization,
        views=describe_views(views), commands=COMMAND_LIST,
    )
    reply = _ask(gateway, "Q_DM", prompt, model)
    action, _, rationale = _parse_decision(reply)
    return action, rationale


class NavigationAgent(PolicyHandle):
    """The full agent as a PolicyHandle; optional enhancements bolt on."""

    name = "agent"
    requires_backend = True

    def __init__(self, gateway: GatewayHandle, world: CityWorld,
                 intr: CameraIntrinsics = CameraIntrinsics(),
                 motion: MotionConfig = MotionConfig(),
                 enhancements: tuple[str, ...] = (),
                 sparse_cfg: SparseMemoryConfig = SparseMemoryConfig(),
                 model: str = "default"):
        self.gateway = gateway
        self.world = world
        self.intr = intr
        self.motion = motion
        self.enhancements = tuple(enhancements)
        self.sparse_cfg = sparse_cfg
        self.model = model
        self.instruction = ""
        self.memory = AgentMemory()
        self.step_idx = 0
        self._target_label: str | None = None

    def reset(self, instruction, initial_observation):
        self.instruction = instruction
        admission = "sparse" if "sparse_memory" in self.enhancements else "all"
        self.memory = AgentMemory(admission=admission, world=self.world,
                                  sparse_cfg=self.sparse_cfg)
        self.step_idx = 0
        self._target_label = self._match_target_label(instruction)

    def _match_target_label(self, instruction: str) -> str | None:
        text = instruction.lower()
        hits = [m.label for m in self.world.landmarks if m.label.lower() in text]
        return max(hits, key=len) if hits else None

    def _observation_for_prompts(self, observation: SemanticObservation):
        if "crossview" in self.enhancements:
            views = panorama(self.world, observation.camera_pose, self.intr,
                             timestamp=observation.timestamp)
            merged = describe_views(views)
            return observation, merged
        return observation, observation_text(observation)

    def next_action(self, observation):
        obs, obs_text = self._observation_for_prompts(observation)
        pose = observation.camera_pose
        try:
            loc = localize(self.memory, obs_text, self.gateway, self.instruction,
                           self.step_idx, self.model)
            plan_state = plan(loc, obs_text, self.gateway, self.instruction,
                              self.step_idx, self.model)
            candidates = imagine(plan_state, loc, obs_text,
                                 self.gateway, self.step_idx, self.model)
            action, confident, rationale = decide(candidates, plan_state,
                                                  self.gateway, self.step_idx, self.model)
            if not confident:
                action, rationale = active_perceive(plan_state, loc, self.world, pose,
                                                    self.gateway, self.step_idx,
                                                    self.intr, self.model)
        except GatewayError as e:
            raise PolicyError(str(e)) from e

        if ARRIVAL_MARKER in rationale:
            action = Action.STOP
        elif "grounding" in self.enhancements and self._target_label:
            try:
                g = ground_target(self.world, pose, self.intr, self._target_label)
            except UnknownLabel:
                g = None
            if g is not None and g.found:
                action = grounded_controller_step(g, intr=self.intr)
                rationale += f" [grounded on {g.label} at {g.center}]"

        if action != Action.STOP and "imagination" in self.enhancements:
            try:
                refined = self._imagination_refine(action, plan_state, pose)
            except GatewayError as e:
                raise PolicyError(str(e)) from e
            if refined != action:
                rationale += f" [imagination replanned {action.value} -> {refined.value}]"
                action = refined

        memory_update(self.memory, obs, plan_state.as_text(), action)
        self.step_idx += 1
        return action, rationale

    def _imagination_refine(self, proposed: Action, plan_state: PlanState,
                            pose: AgentPose) -> Action:
        """Preview candidates against the simulator; the model accepts or replans.

        The proposed command goes first, then the remaining candidates in
        canonical order; each iteration shows the ground-truth post-action view
        and asks for EXECUTE or REPLAN.
        """
        from .enhancements import imagination_loop

        counter = {"k": 0}

        def scorer(action, probe_pose, probe_obs) -> float:
            counter["k"] += 1
            prompt = (f"[step {self.step_idx}.{counter['k']}] Imagination preview.\n"
                      f"Plan:\n{plan_state.as_text()}\n"
                      f"Proposed command: {action.value}\n"
                      f"Simulated view after executing it:\n"
                      f"{observation_text(probe_obs)}\n"
                      f"Reply EXECUTE to commit this command or REPLAN to try another.")
            reply = _ask(self.gateway, "Q_imgn", prompt, self.model)
            return 1.0 if re.search(r"\bEXECUTE\b", reply) else -1.0

        order = [proposed] + [a for a in MOTION_ACTIONS if a != proposed]
        return imagination_loop(self.world, pose, scorer, iter(order),
                                max_iters=10, cfg=self.motion, intr=self.intr)

