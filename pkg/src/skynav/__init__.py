"""Desk-scale harness for goal-oriented aerial navigation in synthetic cities."""

from .world import Action, AgentPose, CityWorld, Landmark, MotionConfig, apply_action, distance_to_goal
from .planning import NoPath, shortest_path
from .camera import CameraIntrinsics, SemanticObservation, fov_overlap, panorama, probe_views, render
from .episode import Episode, EpisodeConfig, EpisodeLog, run_episode
from .scenario import GenerationFailure, GeneratorParams, Scenario, SchemaError, generate, load_scenario, save_scenario

__version__ = "0.1.0"

__all__ = [
    "Action", "AgentPose", "CityWorld", "Landmark", "MotionConfig",
    "apply_action", "distance_to_goal", "NoPath", "shortest_path",
    "CameraIntrinsics", "SemanticObservation", "fov_overlap", "panorama",
    "probe_views", "render", "Episode", "EpisodeConfig", "EpisodeLog",
    "run_episode", "GenerationFailure", "GeneratorParams", "Scenario",
    "SchemaError", "generate", "load_scenario", "save_scenario", "__version__",
]
