import random

import numpy as np
import pytest

from skynav.geometry import Box
from skynav.world import AgentPose, CityWorld, Landmark


@pytest.fixture
def empty_world():
    return CityWorld(buildings=[], landmarks=[],
                     bounds=Box([-1000, -1000, 0], [1000, 1000, 500], "bounds"),
                     z_min=2.0)


@pytest.fixture
def beacon_world():
    """One landmark 10 m straight ahead of the origin pose at z=50."""
    return CityWorld(
        buildings=[],
        landmarks=[Landmark(np.array([10.0, 0.0, 50.0]), "beacon")],
        bounds=Box([-1000, -1000, 0], [1000, 1000, 500], "bounds"))


@pytest.fixture
def wall_world():
    return CityWorld(
        buildings=[Box([40, -30, 0], [60, 30, 60], "wall")],
        landmarks=[],
        bounds=Box([-200, -200, 0], [200, 200, 200], "bounds"))


def make_random_city(seed: int, n_buildings: int = 10, n_landmarks: int = 5,
                     extent: float = 150.0) -> CityWorld:
    """Random test city; landmarks kept clear of building surfaces."""
    rng = random.Random(seed)
    boxes = []
    for i in range(n_buildings):
        w, d = rng.uniform(12, 28), rng.uniform(12, 28)
        x = rng.uniform(-extent, extent - w)
        y = rng.uniform(-extent, extent - d)
        h = rng.uniform(15, 70)
        boxes.append(Box([x, y, 0], [x + w, y + d, h], f"bldg_{i}"))
    landmarks = []
    attempts = 0
    while len(landmarks) < n_landmarks and attempts < 200:
        attempts += 1
        p = np.array([rng.uniform(-extent, extent), rng.uniform(-extent, extent),
                      rng.uniform(5, 90)])
        if all(not b.inflate(2.5).contains(p) for b in boxes):
            landmarks.append(Landmark(p, f"lm_{len(landmarks)}"))
    return CityWorld(buildings=boxes, landmarks=landmarks,
                     bounds=Box([-extent - 50, -extent - 50, 0],
                                [extent + 50, extent + 50, 300], "bounds"))


def random_free_pose(world: CityWorld, rng: random.Random,
                     clearance: float = 2.0) -> AgentPose:
    while True:
        p = np.array([rng.uniform(world.bounds.lo[0] + 5, world.bounds.hi[0] - 5),
                      rng.uniform(world.bounds.lo[1] + 5, world.bounds.hi[1] - 5),
                      rng.uniform(world.z_min + 3, 120)])
        if world.position_free(p, clearance):
            return AgentPose(p, yaw=rng.uniform(0, 360) // 22.5 * 22.5,
                             gimbal=-float(rng.choice([0, 45, 90])))
