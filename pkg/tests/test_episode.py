import numpy as np
import pytest

from skynav.episode import (
    Episode,
    EpisodeConfig,
    EpisodeLog,
    OUTCOME_STOPPED_FAR,
    OUTCOME_SUCCESS,
    OUTCOME_TIMEOUT,
    run_episode,
)
from skynav.policies import OraclePolicy, PolicyError, PolicyHandle, RandomPolicy
from skynav.world import Action, AgentPose, MotionConfig, distance_to_goal


class Scen:
    def __init__(self, world, start, goal, epsilon=20.0, sid="scen-1"):
        self.id = sid
        self.world = world
        self.motion = MotionConfig()
        self.start = start
        self.goal_position = np.asarray(goal, dtype=float)
        self.epsilon = epsilon
        self.instruction = "reach the goal"


class StopNow(PolicyHandle):
    name = "stopnow"

    def next_action(self, observation):
        return Action.STOP, "stopping immediately"


class AlwaysForth(PolicyHandle):
    name = "forth"

    def next_action(self, observation):
        return Action.MOVE_FORTH, "forth"


class Exploder(PolicyHandle):
    name = "exploder"

    def __init__(self, after=3):
        self.after = after
        self.n = 0

    def next_action(self, observation):
        self.n += 1
        if self.n > self.after:
            raise PolicyError("backend gone")
        return Action.MOVE_FORTH, "forth"


def scen_100m(empty_world):
    return Scen(empty_world, AgentPose(np.array([0.0, 0.0, 50.0]), 0.0, 0.0),
                [100.0, 0.0, 50.0])


class TestRunEpisode:
    def test_oracle_reaches_goal_quickly(self, empty_world):
        scenario = scen_100m(empty_world)
        policy = OraclePolicy(empty_world, scenario.goal_position, scenario.epsilon)
        log = run_episode(scenario, policy, EpisodeConfig(max_steps=50))
        assert log.outcome == OUTCOME_SUCCESS
        assert len(log.steps) <= 12
        assert log.steps[-1].action == Action.STOP

    def test_immediate_stop_far_from_goal(self, empty_world):
        log = run_episode(scen_100m(empty_world), StopNow(), EpisodeConfig())
        assert log.outcome == OUTCOME_STOPPED_FAR
        assert log.final_distance == pytest.approx(100.0)

    def test_one_step_cap_times_out(self, empty_world):
        scenario = Scen(empty_world, AgentPose(np.array([0.0, 0.0, 50.0]), 0.0, 0.0),
                        [300.0, 0.0, 50.0])
        log = run_episode(scenario, RandomPolicy(seed=1), EpisodeConfig(max_steps=1))
        assert log.outcome == OUTCOME_TIMEOUT
        assert len(log.steps) == 1

    def test_timeout_inside_epsilon_scores_success(self, empty_world):
        scenario = Scen(empty_world, AgentPose(np.array([0.0, 0.0, 50.0]), 0.0, 0.0),
                        [15.0, 0.0, 50.0], epsilon=20.0)
        log = run_episode(scenario, AlwaysForth(), EpisodeConfig(max_steps=1))
        assert log.outcome == OUTCOME_SUCCESS  # positional criterion

    def test_policy_error_partial_log(self, empty_world):
        log = run_episode(scen_100m(empty_world), Exploder(after=3), EpisodeConfig())
        assert log.outcome == OUTCOME_TIMEOUT
        assert len(log.steps) == 3

    def test_distance_series_recomputable(self, empty_world):
        scenario = scen_100m(empty_world)
        policy = OraclePolicy(empty_world, scenario.goal_position, scenario.epsilon)
        log = run_episode(scenario, policy, EpisodeConfig())
        series = log.distance_series()
        assert len(series) == len(log.steps) + 1
        for rec in log.steps:
            assert rec.distance_to_goal == pytest.approx(
                distance_to_goal(rec.pose, scenario.goal_position))

    def test_episode_length_bounded(self, empty_world):
        for max_steps in (1, 5, 17):
            log = run_episode(scen_100m(empty_world), RandomPolicy(seed=2),
                              EpisodeConfig(max_steps=max_steps))
            assert len(log.steps) <= max_steps + 1

    def test_determinism_bit_identical(self, empty_world):
        scenario = scen_100m(empty_world)
        a = run_episode(scenario, RandomPolicy(seed=9), EpisodeConfig(max_steps=30))
        b = run_episode(scenario, RandomPolicy(seed=9), EpisodeConfig(max_steps=30))
        assert a.to_jsonl() == b.to_jsonl()


class TestJsonl:
    def test_round_trip(self, empty_world, tmp_path):
        scenario = scen_100m(empty_world)
        log = run_episode(scenario, RandomPolicy(seed=4), EpisodeConfig(max_steps=10))
        path = tmp_path / "run" / f"{scenario.id}.jsonl"
        log.save(path)
        loaded = EpisodeLog.load(path)
        assert loaded.to_jsonl() == log.to_jsonl()
        assert loaded.outcome == log.outcome

    def test_header_first_then_steps(self, empty_world, tmp_path):
        import json

        scenario = scen_100m(empty_world)
        log = run_episode(scenario, StopNow(), EpisodeConfig())
        lines = [json.loads(s) for s in log.to_jsonl().splitlines()]
        assert lines[0]["type"] == "header"
        assert lines[0]["scenario_id"] == "scen-1"
        assert all(l["type"] == "step" for l in lines[1:-1])
        assert lines[-1]["type"] == "outcome"

    def test_malformed_log_rejected(self):
        with pytest.raises(ValueError):
            EpisodeLog.from_jsonl('{"type": "step"}\n')


class TestEpisodeStepping:
    def test_service_style_stepping_matches_run_episode(self, empty_world):
        scenario = scen_100m(empty_world)
        policy = OraclePolicy(empty_world, scenario.goal_position, scenario.epsilon)
        reference = run_episode(scenario, policy, EpisodeConfig(max_steps=50))

        episode = Episode(scenario, EpisodeConfig(max_steps=50))
        for rec in reference.steps:
            episode.step(rec.action, rec.rationale)
        assert episode.log.to_jsonl() == reference.to_jsonl()

    def test_step_after_done_raises(self, empty_world):
        episode = Episode(scen_100m(empty_world), EpisodeConfig())
        episode.step(Action.STOP)
        with pytest.raises(RuntimeError):
            episode.step(Action.MOVE_FORTH)
