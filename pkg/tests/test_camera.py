import math
import random

import numpy as np
import pytest

from skynav.camera import (
    CameraIntrinsics,
    fov_overlap,
    observation_svg,
    observation_text,
    panorama,
    probe_views,
    project_points,
    render,
    unproject_pixel,
)
from skynav.geometry import Box
from skynav.world import AgentPose, CityWorld, Landmark

from conftest import make_random_city, random_free_pose
from oracles import visible_entities_raymarch

INTR = CameraIntrinsics()


def pose(x=0.0, y=0.0, z=50.0, yaw=0.0, gimbal=0.0):
    return AgentPose(np.array([x, y, z]), yaw, gimbal)


class TestIntrinsics:
    def test_focal_length_is_280(self):
        assert math.isclose(INTR.focal, 280.0)

    def test_square_image_required(self):
        with pytest.raises(ValueError):
            CameraIntrinsics(width=640, height=480)


class TestProjection:
    def test_on_axis_point_maps_to_center(self):
        uv, z = project_points(np.array([[10.0, 0.0, 50.0]]), pose(), INTR)
        np.testing.assert_allclose(uv[0], [280.0, 280.0], atol=1e-9)
        assert z[0] == pytest.approx(10.0)

    def test_half_fov_bearing_maps_to_left_edge(self):
        # Bearing +45 deg (counterclockwise = left) lands at u = 0.
        p = np.array([[10.0 * math.cos(math.radians(45)),
                       10.0 * math.sin(math.radians(45)), 50.0]])
        uv, _ = project_points(p, pose(), INTR)
        assert uv[0, 0] == pytest.approx(0.0, abs=1e-6)

    def test_point_above_axis_has_v_below_center(self):
        uv, _ = project_points(np.array([[10.0, 0.0, 55.0]]), pose(), INTR)
        assert uv[0, 1] < 280.0

    def test_round_trip_unprojection(self):
        rng = random.Random(2)
        for _ in range(200):
            p = pose(yaw=rng.uniform(0, 360), gimbal=-rng.uniform(0, 90))
            # random direction inside the frustum
            s, t = rng.uniform(-0.95, 0.95), rng.uniform(-0.95, 0.95)
            from skynav.camera import camera_basis
            fwd, right, up = camera_basis(p.yaw, p.gimbal)
            point = p.position + rng.uniform(2, 150) * (fwd + s * right + t * up)
            uv, _ = project_points(point[None, :], p, INTR)
            depth = float(np.linalg.norm(point - p.position))
            rec = unproject_pixel(uv[0, 0], uv[0, 1], depth, p, INTR)
            np.testing.assert_allclose(rec, point, atol=1e-6)


class TestRender:
    def test_landmark_ahead_box_centered(self, beacon_world):
        obs = render(beacon_world, pose(), INTR)
        assert [e.label for e in obs.entities] == ["beacon"]
        e = obs.entities[0]
        u0, v0, u1, v1 = e.box
        assert (u0 + u1) / 2 == pytest.approx(280.0, abs=0.5)
        assert (v0 + v1) / 2 == pytest.approx(280.0, abs=0.5)
        assert e.depth == pytest.approx(10.0)

    def test_landmark_behind_absent(self, beacon_world):
        obs = render(beacon_world, pose(yaw=180.0), INTR)
        assert obs.entities == ()

    def test_fully_hidden_landmark_excluded(self):
        world = CityWorld(
            buildings=[Box([20, -15, 30], [30, 15, 70], "screen")],
            landmarks=[Landmark(np.array([50.0, 0.0, 50.0]), "hidden")],
            bounds=Box([-200, -200, 0], [200, 200, 200], "b"))
        obs = render(world, pose(), INTR)
        assert "hidden" not in [e.label for e in obs.entities]

    def test_partially_occluded_fraction_in_between(self):
        # Screen covers roughly the lower half of the landmark's sample cube.
        world = CityWorld(
            buildings=[Box([20, -15, 0], [30, 15, 50], "screen")],
            landmarks=[Landmark(np.array([50.0, 0.0, 50.5]), "peeking")],
            bounds=Box([-200, -200, 0], [200, 200, 200], "b"))
        obs = render(world, pose(), INTR)
        ent = {e.label: e for e in obs.entities}
        assert "peeking" in ent
        assert 0.0 < ent["peeking"].occluded_fraction < 1.0

    def test_entities_sorted_by_depth(self):
        world = make_random_city(3)
        obs = render(world, pose(x=-120, y=-120, z=60, yaw=45), INTR)
        depths = [e.depth for e in obs.entities]
        assert depths == sorted(depths)
        assert all(d > 0 for d in depths)

    def test_boxes_clipped_to_image(self):
        world = make_random_city(4)
        for seed in range(5):
            rng = random.Random(seed)
            obs = render(world, random_free_pose(world, rng), INTR)
            for e in obs.entities:
                u0, v0, u1, v1 = e.box
                assert 0 <= u0 <= u1 <= INTR.width
                assert 0 <= v0 <= v1 <= INTR.height

    def test_matches_raymarch_oracle_on_100_scenes(self):
        rng = random.Random(1234)
        for scene in range(100):
            world = make_random_city(9000 + scene, n_buildings=8, n_landmarks=4)
            p = random_free_pose(world, rng)
            got = {e.label for e in render(world, p, INTR).entities}
            expected = visible_entities_raymarch(world, p, INTR)
            assert got == expected, f"scene {scene}: {got ^ expected}"


class TestViewSets:
    def test_probe_tags_and_partition(self, beacon_world):
        views = probe_views(beacon_world, pose(yaw=180.0), INTR)
        assert views.tags() == ["front", "left", "back", "right", "up", "down"]
        hits = [tag for tag, obs in views.views
                if "beacon" in [e.label for e in obs.entities]]
        assert hits == ["back"]  # agent faces away; beacon behind it

    def test_landmark_below_only_in_down_view(self):
        world = CityWorld(
            landmarks=[Landmark(np.array([0.0, 0.0, 10.0]), "pad")],
            bounds=Box([-200, -200, 0], [200, 200, 200], "b"))
        views = probe_views(world, pose(z=80.0), INTR)
        hits = [tag for tag, obs in views.views
                if "pad" in [e.label for e in obs.entities]]
        assert hits == ["down"]

    def test_probe_views_empty_world(self, empty_world):
        views = probe_views(empty_world, pose(), INTR)
        assert all(obs.entities == () for _, obs in views.views)

    def test_probe_preserves_pose(self, beacon_world):
        p = pose(gimbal=-45.0)
        probe_views(beacon_world, p, INTR)
        assert p.gimbal == -45.0 and p.yaw == 0.0

    def test_panorama_covers_every_bearing(self, empty_world):
        for bearing in range(0, 360, 7):
            lm = Landmark(np.array([50 * math.cos(math.radians(bearing)),
                                    50 * math.sin(math.radians(bearing)), 50.0]),
                          "target")
            world = CityWorld(landmarks=[lm],
                              bounds=Box([-500, -500, 0], [500, 500, 300], "b"))
            views = panorama(world, pose(), INTR)
            found = any("target" in [e.label for e in obs.entities]
                        for _, obs in views.views)
            assert found, f"bearing {bearing} missed"

    def test_bearing_30_in_two_adjacent_views(self):
        lm = Landmark(np.array([50 * math.cos(math.radians(30)),
                                50 * math.sin(math.radians(30)), 50.0]), "target")
        world = CityWorld(landmarks=[lm],
                          bounds=Box([-500, -500, 0], [500, 500, 300], "b"))
        views = panorama(world, pose(), INTR)
        hits = [tag for tag, obs in views.views
                if "target" in [e.label for e in obs.entities]]
        assert hits == ["pano_000", "pano_060"]

    def test_panorama_deterministic(self):
        world = make_random_city(8)
        a = panorama(world, pose(x=-100, y=-100), INTR)
        b = panorama(world, pose(x=-100, y=-100), INTR)
        assert [(t, o.to_dict()) for t, o in a.views] == \
               [(t, o.to_dict()) for t, o in b.views]


class TestFovOverlap:
    def test_identity_is_one(self):
        world = make_random_city(12)
        rng = random.Random(0)
        for _ in range(5):
            p = random_free_pose(world, rng)
            assert fov_overlap(world, p, p, INTR) == 1.0

    def test_opposed_views_zero(self, empty_world):
        a = pose(yaw=0.0)
        b = pose(yaw=180.0)
        assert fov_overlap(empty_world, a, b, INTR) == 0.0

    def test_45_offset_in_band(self, empty_world):
        value = fov_overlap(empty_world, pose(yaw=0.0), pose(yaw=45.0), INTR)
        assert 0.4 < value < 0.6
        dense = fov_overlap(empty_world, pose(yaw=0.0), pose(yaw=45.0), INTR,
                            samples=512 * 512)
        assert abs(value - dense) < 0.05

    def test_non_increasing_with_yaw_difference(self, empty_world):
        values = [fov_overlap(empty_world, pose(yaw=0.0), pose(yaw=dy), INTR)
                  for dy in (0, 15, 30, 45, 60, 90, 120, 150, 180)]
        assert all(a >= b - 1e-9 for a, b in zip(values, values[1:]))


class TestSerialization:
    def test_observation_text_format(self, beacon_world):
        text = observation_text(render(beacon_world, pose(), INTR))
        assert text.startswith("beacon @ bearing 0.0")
        assert "distance 10.0 m" in text and "box [" in text

    def test_empty_observation_text(self, empty_world):
        assert "no entities" in observation_text(render(empty_world, pose(), INTR))

    def test_svg_contains_entities(self, beacon_world):
        svg = observation_svg(render(beacon_world, pose(), INTR), INTR)
        assert svg.startswith("<svg") and "beacon" in svg and "</svg>" in svg
