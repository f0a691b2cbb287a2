"""HTTP facade over the episode engine for teleoperation and external drivers.

Sessions are in-memory and mutate under a per-session lock; finished episode
logs are flushed to disk so human runs are metric-comparable with policy runs.
"""

from __future__ import annotations

import threading
import uuid
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .camera import observation_svg, observation_text
from .episode import Episode, EpisodeConfig
from .scenario import Scenario, load_corpus
from .world import Action


class CreateSessionRequest(BaseModel):
    scenario_id: str
    mode: str = Field(default="human", pattern="^(human|policy)$")


class CreateSessionResponse(BaseModel):
    session_id: str
    scenario_id: str
    instruction: str
    epsilon: float
    max_steps: int
    mode: str


class PoseModel(BaseModel):
    position: list[float]
    yaw: float
    gimbal: float


class EntityModel(BaseModel):
    label: str
    box: list[float]
    depth: float
    occluded_fraction: float
    bearing: float
    elevation: float


class ObservationResponse(BaseModel):
    entities: list[EntityModel]
    camera_pose: PoseModel
    schematic_svg: str
    text: str
    step_count: int
    distance_to_goal: float
    status: str


class ActionRequest(BaseModel):
    kind: Action  # unknown kinds fail validation -> 422


class ActionResponse(BaseModel):
    pose: PoseModel
    blocked: bool
    distance_to_goal: float
    status: str
    step_count: int
    outcome: str | None = None


class ScenarioSummary(BaseModel):
    id: str
    instruction: str
    group: str | None = None
    gt_length: float
    epsilon: float


class _Session:
    def __init__(self, scenario: Scenario, mode: str, cfg: EpisodeConfig):
        self.id = uuid.uuid4().hex[:12]
        self.scenario = scenario
        self.mode = mode
        self.episode = Episode(scenario, cfg)
        self.lock = threading.Lock()

    @property
    def status(self) -> str:
        return "done" if self.episode.done else "active"


def create_app(scenarios: list[Scenario], cfg: EpisodeConfig = EpisodeConfig(),
               log_dir: str | Path | None = None,
               static_dir: str | Path | None = None,
               cors_origins: list[str] | None = None) -> FastAPI:
    app = FastAPI(title="skynav control service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=cors_origins or ["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    by_id = {s.id: s for s in scenarios}
    sessions: dict[str, _Session] = {}
    sessions_lock = threading.Lock()

    def get_session(session_id: str) -> _Session:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")
        return session

    @app.get("/scenarios", response_model=list[ScenarioSummary])
    def list_scenarios():
        return [ScenarioSummary(id=s.id, instruction=s.instruction,
                                group=s.meta.get("group"),
                                gt_length=s.ground_truth.length, epsilon=s.epsilon)
                for s in scenarios]

    @app.post("/sessions", response_model=CreateSessionResponse, status_code=201)
    def create_session(req: CreateSessionRequest):
        scenario = by_id.get(req.scenario_id)
        if scenario is None:
            raise HTTPException(status_code=404, detail=f"unknown scenario {req.scenario_id}")
        session = _Session(scenario, req.mode, cfg)
        with sessions_lock:
            sessions[session.id] = session
        return CreateSessionResponse(
            session_id=session.id, scenario_id=scenario.id,
            instruction=scenario.instruction, epsilon=session.episode.epsilon,
            max_steps=cfg.max_steps, mode=req.mode)

    @app.get("/sessions/{session_id}/observation", response_model=ObservationResponse)
    def observation(session_id: str):
        session = get_session(session_id)
        with session.lock:
            obs = session.episode.observe()
            return ObservationResponse(
                entities=[EntityModel(**e.to_dict()) for e in obs.entities],
                camera_pose=PoseModel(**obs.camera_pose.to_dict()),
                schematic_svg=observation_svg(obs),
                text=observation_text(obs),
                step_count=session.episode.step_count,
                distance_to_goal=session.episode.distance(),
                status=session.status)

    @app.post("/sessions/{session_id}/action", response_model=ActionResponse)
    def act(session_id: str, req: ActionRequest):
        session = get_session(session_id)
        with session.lock:
            if session.episode.done:
                raise HTTPException(status_code=409, detail="session already finished")
            record = session.episode.step(req.kind, rationale=f"{session.mode} input")
            if session.episode.done and log_dir is not None:
                session.episode.log.save(Path(log_dir) / f"{session.id}.jsonl")
            return ActionResponse(
                pose=PoseModel(**record.pose.to_dict()),
                blocked=record.blocked,
                distance_to_goal=record.distance_to_goal,
                status=session.status,
                step_count=session.episode.step_count,
                outcome=session.episode.log.outcome)

    @app.get("/sessions/{session_id}/log")
    def session_log(session_id: str):
        session = get_session(session_id)
        with session.lock:
            log = session.episode.log
            return {
                "scenario_id": log.scenario_id,
                "epsilon": log.epsilon,
                "max_steps": log.max_steps,
                "initial_pose": log.initial_pose.to_dict(),
                "initial_distance": log.initial_distance,
                "steps": [s.to_dict() for s in log.steps],
                "outcome": log.outcome,
                "final_distance": log.final_distance,
            }

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app


def create_app_from_corpus(corpus_dir, **kwargs) -> FastAPI:
    return create_app(load_corpus(corpus_dir), **kwargs)
