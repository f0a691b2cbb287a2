import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from skynav.geometry import Box
from skynav.world import (
    Action,
    AgentPose,
    CityWorld,
    HORIZONTAL_ACTIONS,
    Landmark,
    MOTION_ACTIONS,
    MotionConfig,
    ROTATION_ACTIONS,
    VERTICAL_ACTIONS,
    apply_action,
    distance_to_goal,
)

CFG = MotionConfig()


def pose(x=0.0, y=0.0, z=50.0, yaw=0.0, gimbal=0.0):
    return AgentPose(np.array([x, y, z]), yaw, gimbal)


class TestTypes:
    def test_exactly_ten_motion_actions_plus_stop(self):
        assert len(MOTION_ACTIONS) == 10
        assert Action.STOP not in MOTION_ACTIONS
        assert len(list(Action)) == 11

    def test_categories_partition_motion_actions(self):
        union = HORIZONTAL_ACTIONS | VERTICAL_ACTIONS | ROTATION_ACTIONS
        assert union == set(MOTION_ACTIONS)
        assert (len(HORIZONTAL_ACTIONS), len(VERTICAL_ACTIONS),
                len(ROTATION_ACTIONS)) == (4, 2, 4)

    def test_pose_invariants(self):
        p = AgentPose(np.array([1, 2, 3]), yaw=-90.0, gimbal=-45.0)
        assert p.yaw == 270.0
        with pytest.raises(ValueError):
            AgentPose(np.zeros(3), 0.0, gimbal=5.0)
        with pytest.raises(ValueError):
            AgentPose(np.zeros(3), 0.0, gimbal=-95.0)

    def test_motion_config_validation(self):
        with pytest.raises(ValueError):
            MotionConfig(translation_step=0)
        with pytest.raises(ValueError):
            MotionConfig(gimbal_step=40.0)  # must divide 90

    def test_world_rejects_duplicate_labels(self):
        with pytest.raises(ValueError):
            CityWorld(buildings=[Box([0, 0, 0], [1, 1, 1], "a"),
                                 Box([5, 5, 0], [6, 6, 1], "a")])

    def test_world_rejects_landmark_outside_bounds(self):
        with pytest.raises(ValueError):
            CityWorld(landmarks=[Landmark(np.array([5000.0, 0, 10]), "far")])


class TestApplyAction:
    def test_move_forth_along_heading(self, empty_world):
        new, blocked = apply_action(pose(yaw=0.0), Action.MOVE_FORTH, empty_world, CFG)
        assert not blocked
        np.testing.assert_allclose(new.position, [10.0, 0.0, 50.0], atol=1e-9)

    def test_turn_left_adds_turn_step(self, empty_world):
        new, blocked = apply_action(pose(yaw=0.0), Action.TURN_LEFT, empty_world, CFG)
        assert not blocked and new.yaw == 22.5

    def test_gimbal_up_clamps_at_zero(self, empty_world):
        new, blocked = apply_action(pose(gimbal=0.0), Action.GIMBAL_UP, empty_world, CFG)
        assert not blocked and new.gimbal == 0.0

    def test_gimbal_down_clamps_at_minus_ninety(self, empty_world):
        p = pose(gimbal=-60.0)
        new, _ = apply_action(p, Action.GIMBAL_DOWN, empty_world, CFG)
        assert new.gimbal == -90.0

    def test_collision_rejects_and_reports(self):
        world = CityWorld(buildings=[Box([5, -10, 0], [25, 10, 100], "slab")],
                          bounds=Box([-100, -100, 0], [100, 100, 200], "b"))
        p = pose(yaw=0.0)
        new, blocked = apply_action(p, Action.MOVE_FORTH, world, CFG)
        assert blocked and new.same_as(p)

    def test_safety_radius_blocks_grazing_moves(self):
        # Path passes 0.5 m from the wall face: inside the 1 m safety margin.
        world = CityWorld(buildings=[Box([0, 0.5, 0], [20, 20, 100], "wall")],
                          bounds=Box([-100, -100, 0], [100, 100, 200], "b"))
        _, blocked = apply_action(pose(yaw=0.0), Action.MOVE_FORTH, world, CFG)
        assert blocked

    def test_bounds_and_floor_block(self, empty_world):
        edge = AgentPose(np.array([995.0, 0.0, 50.0]), 0.0, 0.0)
        _, blocked = apply_action(edge, Action.MOVE_FORTH, empty_world, CFG)
        assert blocked
        low = pose(z=11.0)
        new, blocked = apply_action(low, Action.MOVE_DOWN, empty_world, CFG)
        assert blocked and new.same_as(low)  # z_min keeps the drone airborne

    def test_left_move_at_yaw_zero_goes_north(self, empty_world):
        new, _ = apply_action(pose(yaw=0.0), Action.MOVE_LEFT, empty_world, CFG)
        np.testing.assert_allclose(new.position, [0.0, 10.0, 50.0], atol=1e-9)

    def test_stop_is_not_a_motion(self, empty_world):
        with pytest.raises(ValueError):
            apply_action(pose(), Action.STOP, empty_world, CFG)


INVERSES = [(Action.MOVE_FORTH, Action.MOVE_BACK),
            (Action.MOVE_LEFT, Action.MOVE_RIGHT),
            (Action.MOVE_UP, Action.MOVE_DOWN),
            (Action.TURN_LEFT, Action.TURN_RIGHT)]


class TestProperties:
    @given(x=st.floats(-500, 500), y=st.floats(-500, 500), z=st.floats(30, 400),
           yaw=st.floats(0, 359.999), pair=st.sampled_from(INVERSES))
    @settings(max_examples=200, deadline=None)
    def test_inverse_actions_cancel_exactly(self, x, y, z, yaw, pair):
        world = CityWorld(buildings=[], bounds=Box([-2000, -2000, 0],
                                                   [2000, 2000, 1000], "b"))
        p = AgentPose(np.array([x, y, z]), yaw, -45.0)
        fwd, back = pair
        q, b1 = apply_action(p, fwd, world, CFG)
        r, b2 = apply_action(q, back, world, CFG)
        assert not b1 and not b2
        assert np.array_equal(r.position, p.position)
        assert abs(((r.yaw - p.yaw + 180) % 360) - 180) < 1e-9

    @given(yaw=st.floats(0, 359.999))
    @settings(max_examples=100, deadline=None)
    def test_four_quarter_turns_identity(self, yaw):
        world = CityWorld(buildings=[], bounds=Box([-100, -100, 0], [100, 100, 200], "b"))
        cfg = MotionConfig(turn_step=90.0)
        p = pose(yaw=yaw)
        for _ in range(4):
            p, _ = apply_action(p, Action.TURN_LEFT, world, cfg)
        assert abs(((p.yaw - yaw + 180) % 360) - 180) < 1e-9

    def test_unblocked_translation_moves_exact_step(self, empty_world):
        rng = random.Random(11)
        for _ in range(300):
            p = AgentPose(np.array([rng.uniform(-500, 500), rng.uniform(-500, 500),
                                    rng.uniform(30, 300)]),
                          rng.uniform(0, 360), 0.0)
            action = rng.choice([a for a in MOTION_ACTIONS
                                 if a in HORIZONTAL_ACTIONS | VERTICAL_ACTIONS])
            q, blocked = apply_action(p, action, empty_world, CFG)
            assert not blocked
            assert math.isclose(float(np.linalg.norm(q.position - p.position)),
                                CFG.translation_step, rel_tol=0, abs_tol=1e-5)


class TestDistance:
    def test_three_four_five(self):
        assert distance_to_goal(pose(0, 0, 0.0 + 50), np.array([3, 4, 50])) == 5.0

    def test_zero_at_goal(self):
        assert distance_to_goal(pose(1, 1, 50), np.array([1, 1, 50])) == 0.0

    def test_axis_aligned(self):
        assert distance_to_goal(pose(1, 1, 1 + 49), np.array([1, 1, 11 + 49])) == 10.0
