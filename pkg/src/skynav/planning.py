"""Shortest-path oracle: A* on a voxel grid with line-of-sight smoothing.

Supplies ground-truth trajectories and the optimal lengths used by SPL. The
grid resolution is half the translation step so the oracle length is a valid
lower-bound denominator for paths flown with full-size steps.
"""

from __future__ import annotations

import heapq
import math

import numpy as np

from .geometry import segment_box_chords
from .world import CityWorld, MotionConfig


class NoPath(Exception):
    """Goal unreachable from start within the world bounds."""


# 26-connected neighbor offsets with Euclidean costs, precomputed once.
_OFFSETS = np.array([(dx, dy, dz)
                     for dx in (-1, 0, 1) for dy in (-1, 0, 1) for dz in (-1, 0, 1)
                     if (dx, dy, dz) != (0, 0, 0)], dtype=int)
_OFFSET_COSTS = np.linalg.norm(_OFFSETS, axis=1)


def _build_occupancy(world: CityWorld, lo: np.ndarray, shape: tuple[int, int, int],
                     res: float, margin: float) -> np.ndarray:
    """Boolean grid of voxel centers too close to a building / below z_min."""
    occ = np.zeros(shape, dtype=bool)
    zs = lo[2] + (np.arange(shape[2]) + 0.5) * res
    occ[:, :, zs < world.z_min] = True
    for b in world.buildings:
        blo = (b.lo - margin - lo) / res - 0.5
        bhi = (b.hi + margin - lo) / res - 0.5
        i0 = np.maximum(np.ceil(blo), 0).astype(int)
        i1 = np.minimum(np.floor(bhi), np.array(shape) - 1).astype(int)
        if np.all(i1 >= i0):
            occ[i0[0]:i1[0] + 1, i0[1]:i1[1] + 1, i0[2]:i1[2] + 1] = True
    return occ


def _line_free(world: CityWorld, p0: np.ndarray, p1: np.ndarray, margin: float) -> bool:
    lo, hi = world.building_arrays()
    if lo.shape[0] == 0:
        return True
    chords = segment_box_chords(np.asarray(p0, float)[None, :],
                                np.asarray(p1, float)[None, :],
                                lo - margin, hi + margin)
    return not bool(np.any(chords[0] > 1e-12))


def _smooth(world: CityWorld, points: list[np.ndarray], margin: float) -> list[np.ndarray]:
    """Greedy taut-string smoothing: skip ahead to the furthest visible vertex."""
    if len(points) <= 2:
        return points
    out = [points[0]]
    i = 0
    while i < len(points) - 1:
        j = len(points) - 1
        while j > i + 1 and not _line_free(world, points[i], points[j], margin):
            j -= 1
        out.append(points[j])
        i = j
    return out


def _densify(points: list[np.ndarray], max_seg: float) -> list[np.ndarray]:
    out = [points[0]]
    for a, b in zip(points, points[1:]):
        n = int(np.ceil(np.linalg.norm(b - a) / max_seg))
        for k in range(1, n + 1):
            out.append(a + (b - a) * (k / n))
    return out


_DESCENT_DIRS = np.vstack([np.eye(3), -np.eye(3)])


def _tighten(world: CityWorld, points: list[np.ndarray], margin: float) -> list[np.ndarray]:
    """String-pulling descent toward the true-margin taut path.

    Voxel centers sit behind the conservative grid inflation; coordinate
    descent with shrinking steps lets vertices slide along obstacle corners,
    which chord-projection alone cannot do.
    """
    if len(points) <= 2:
        return points
    pts = _densify(points, max_seg=15.0)
    for step in (6.0, 3.0, 1.5, 0.75):
        for _ in range(6):
            moved = False
            for i in range(1, len(pts) - 1):
                a, b, c = pts[i - 1], pts[i], pts[i + 1]
                base = np.linalg.norm(b - a) + np.linalg.norm(c - b)
                seg = c - a
                denom = float(seg @ seg)
                t = 0.0 if denom == 0 else float(np.clip((b - a) @ seg / denom, 0.0, 1.0))
                candidates = [a + t * seg]
                candidates += [b + step * d for d in _DESCENT_DIRS]
                for cand in candidates:
                    gain = base - (np.linalg.norm(cand - a) + np.linalg.norm(c - cand))
                    if gain <= 1e-9:
                        continue
                    if (_line_free(world, a, cand, margin)
                            and _line_free(world, cand, c, margin)):
                        pts[i] = cand
                        moved = True
                        break
            if not moved:
                break
    return pts


def shortest_path(world: CityWorld, start: np.ndarray, goal: np.ndarray,
                  cfg: MotionConfig = MotionConfig()) -> tuple[list[np.ndarray], float]:
    """Collision-free polyline from start to goal and its length in meters.

    Raises NoPath when the goal cannot be reached (e.g. inside a building).
    """
    start = np.asarray(start, dtype=float)
    goal = np.asarray(goal, dtype=float)
    res = cfg.translation_step / 2.0
    margin = cfg.safety_radius

    if not world.position_free(goal, margin):
        raise NoPath(f"goal {goal.tolist()} is not in free space")
    if not world.position_free(start, margin):
        raise NoPath(f"start {start.tolist()} is not in free space")

    if _line_free(world, start, goal, margin):
        length = float(np.linalg.norm(goal - start))
        return [start, goal], length

    # Search box: hull of start/goal padded so detours around buildings fit.
    pad = max(60.0, 0.5 * float(np.linalg.norm(goal - start)))
    lo = np.maximum(np.minimum(start, goal) - pad, world.bounds.lo)
    hi = np.minimum(np.maximum(start, goal) + pad, world.bounds.hi)
    inner_shape = np.maximum(np.ceil((hi - lo) / res).astype(int), 1)
    # Extra half-diagonal padding: distance to a convex box is 1-Lipschitz along
    # a segment, so steps between free voxel centers cannot dip inside the
    # safety margin even on 26-connectivity diagonals.
    grid_margin = margin + res * math.sqrt(3.0) / 2.0
    # One blocked border voxel around the grid makes neighbor indexing safe
    # without bounds checks.
    shape = tuple(inner_shape + 2)
    pad_lo = lo - res  # origin of the padded grid
    occ = np.ones(shape, dtype=bool)
    occ[1:-1, 1:-1, 1:-1] = _build_occupancy(world, lo, tuple(inner_shape),
                                             res, grid_margin)

    nx, ny, nz = shape
    sx, sy = ny * nz, nz

    def to_voxel(p):
        v = np.clip(((p - pad_lo) / res - 0.5).round().astype(int),
                    1, np.array(shape) - 2)
        return int(v[0]) * sx + int(v[1]) * sy + int(v[2])

    def center(idx):
        x, rem = divmod(idx, sx)
        y, z = divmod(rem, sy)
        return pad_lo + (np.array([x, y, z]) + 0.5) * res

    occ_flat = occ.ravel()
    start_idx, goal_idx = to_voxel(start), to_voxel(goal)
    # Endpoint voxel centers may clip the inflated occupancy even though the
    # endpoints themselves are free; allow them as entry/exit cells.
    occ_flat[start_idx] = False
    occ_flat[goal_idx] = False

    gx, grem = divmod(goal_idx, sx)
    gy, gz = divmod(grem, sy)
    neighbor_steps = [(int(dx) * sx + int(dy) * sy + int(dz), float(cost) * res)
                      for (dx, dy, dz), cost in zip(_OFFSETS, _OFFSET_COSTS)]
    # Inflated heuristic: breaks the massive f-ties of 26-connectivity; the
    # few-percent route sub-optimality is removed by smoothing/tightening.
    hw = 1.05 * res
    sqrt_fn = math.sqrt

    g_cost = np.full(occ_flat.shape[0], np.inf)
    parent = np.full(occ_flat.shape[0], -1, dtype=np.int64)
    g_cost[start_idx] = 0.0

    def heuristic(idx: int) -> float:
        x, rem = divmod(idx, sx)
        y, z = divmod(rem, sy)
        return hw * sqrt_fn((x - gx) ** 2 + (y - gy) ** 2 + (z - gz) ** 2)

    open_heap = [(heuristic(start_idx), 0.0, start_idx)]
    found = False
    while open_heap:
        f, g_at_push, idx = heapq.heappop(open_heap)
        if idx == goal_idx:
            found = True
            break
        base = g_cost[idx]
        if g_at_push > base + 1e-12:
            continue  # stale entry
        for dflat, cost in neighbor_steps:
            ni = idx + dflat
            if occ_flat[ni]:
                continue
            ng = base + cost
            if ng < g_cost[ni]:
                g_cost[ni] = ng
                parent[ni] = idx
                heapq.heappush(open_heap, (ng + heuristic(ni), ng, ni))
    if not found:
        raise NoPath(f"no route from {start.tolist()} to {goal.tolist()}")

    chain = [goal_idx]
    while chain[-1] != start_idx:
        chain.append(int(parent[chain[-1]]))
    chain.reverse()
    points = [start] + [center(i) for i in chain[1:-1]] + [goal]
    points = _smooth(world, points, margin)
    points = _smooth(world, _tighten(world, points, margin), margin)
    length = float(sum(np.linalg.norm(b - a) for a, b in zip(points, points[1:])))
    return points, length


def first_building_hits(origin: np.ndarray, targets: np.ndarray,
                        world: CityWorld, max_range: float) -> np.ndarray:
    """Anchor points for rays origin->target: first building hit, else the target.

    Used by the FOV-overlap measure; targets are expected to lie at max_range.
    """
    targets = np.atleast_2d(targets).astype(float)
    lo, hi = world.building_arrays()
    if lo.shape[0] == 0:
        return targets
    origins = np.broadcast_to(np.asarray(origin, float), targets.shape)
    d = targets - origins
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / d[:, None, :]
        t1 = (lo[None, :, :] - origins[:, None, :]) * inv
        t2 = (hi[None, :, :] - origins[:, None, :]) * inv
    tmin, tmax = np.minimum(t1, t2), np.maximum(t1, t2)
    par = (d[:, None, :] == 0.0)
    inside = (origins[:, None, :] > lo[None, :, :]) & (origins[:, None, :] < hi[None, :, :])
    par_b = np.broadcast_to(par, t1.shape)
    tmin = np.where(par_b, np.where(inside & par_b, -np.inf, np.inf), tmin)
    tmax = np.where(par_b, np.where(inside & par_b, np.inf, -np.inf), tmax)
    t_enter = np.max(tmin, axis=2)
    t_exit = np.min(tmax, axis=2)
    hit = (t_enter <= t_exit) & (t_exit > 0.0) & (t_enter <= 1.0)
    t_enter = np.where(hit, np.maximum(t_enter, 0.0), np.inf)
    t_best = np.min(t_enter, axis=1)
    t_best = np.where(np.isfinite(t_best), t_best, 1.0)
    return origins + t_best[:, None] * d
