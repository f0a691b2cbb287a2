"""Independent reference implementations used only by tests.

These deliberately use different numerical methods than the package code:
sphere-marching SDF rays instead of slab intersection for visibility, and
plain exhaustive Dijkstra with sampled-segment smoothing for path lengths.
"""

from __future__ import annotations

import heapq
import math

import numpy as np


def sdf_boxes(points: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Signed distance from each point to the nearest box (negative inside)."""
    c = (lo + hi) / 2.0
    h = (hi - lo) / 2.0
    q = np.abs(points[:, None, :] - c[None, :, :]) - h[None, :, :]
    outside = np.linalg.norm(np.maximum(q, 0.0), axis=2)
    inside = np.minimum(np.max(q, axis=2), 0.0)
    return np.min(outside + inside, axis=1)


def march_blocked(origin: np.ndarray, targets: np.ndarray, lo: np.ndarray,
                  hi: np.ndarray, min_step: float = 5e-3,
                  trim: float = 1e-6) -> np.ndarray:
    """Sphere-march each origin->target ray; True if it enters a box interior."""
    targets = np.atleast_2d(targets).astype(float)
    n = targets.shape[0]
    if lo.shape[0] == 0:
        return np.zeros(n, dtype=bool)
    origin = np.asarray(origin, dtype=float)
    d = targets - origin
    seg_len = np.linalg.norm(d, axis=1)
    t = np.full(n, trim)
    blocked = np.zeros(n, dtype=bool)
    active = seg_len > 0
    for _ in range(200_000):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        pts = origin + t[idx, None] * d[idx]
        sd = sdf_boxes(pts, lo, hi)
        hit = sd < -1e-9
        blocked[idx[hit]] = True
        active[idx[hit]] = False
        idx2 = idx[~hit]
        if idx2.size == 0:
            continue
        t[idx2] += np.maximum(sd[~hit], min_step) / seg_len[idx2]
        finished = t[idx2] >= 1.0 - trim
        active[idx2[finished]] = False
    else:
        raise RuntimeError("sphere march failed to terminate")
    return blocked


def visible_entities_raymarch(world, pose, intr) -> set[str]:
    """Entity set per the render contract, occlusion decided by sphere-marching."""
    from skynav.camera import entity_geometry, in_frustum

    labels, centers, samples = entity_geometry(world)
    if not labels:
        return set()
    lo, hi = world.building_arrays()
    vis = in_frustum(centers, pose, intr)
    out = set()
    for i in np.flatnonzero(vis):
        blocked = march_blocked(pose.position, samples[i], lo, hi)
        if not blocked.all():
            out.add(labels[i])
    return out


def exhaustive_path_length(world, start: np.ndarray, goal: np.ndarray,
                           margin: float, res: float = 2.0) -> float:
    """Plain Dijkstra on a fine grid plus sampled-segment string shortening."""
    start = np.asarray(start, dtype=float)
    goal = np.asarray(goal, dtype=float)
    lo_bound = np.minimum(start, goal) - 45.0
    hi_bound = np.maximum(start, goal) + 45.0
    lo_bound[2] = max(lo_bound[2], world.z_min)
    hi_bound[2] = min(hi_bound[2], float(world.bounds.hi[2]))
    shape = tuple(np.maximum(np.ceil((hi_bound - lo_bound) / res).astype(int), 1) + 2)
    origin = lo_bound - res  # one blocked border ring

    nx, ny, nz = shape
    xs = origin[0] + (np.arange(nx) + 0.5) * res
    ys = origin[1] + (np.arange(ny) + 0.5) * res
    zs = origin[2] + (np.arange(nz) + 0.5) * res
    occ = np.zeros(shape, dtype=bool)
    occ[[0, -1], :, :] = True
    occ[:, [0, -1], :] = True
    occ[:, :, [0, -1]] = True
    occ[:, :, zs < world.z_min] = True
    for b in world.buildings:
        bx = (xs > b.lo[0] - margin) & (xs < b.hi[0] + margin)
        by = (ys > b.lo[1] - margin) & (ys < b.hi[1] + margin)
        bz = (zs > b.lo[2] - margin) & (zs < b.hi[2] + margin)
        occ |= bx[:, None, None] & by[None, :, None] & bz[None, None, :]

    sx, sy = ny * nz, nz
    occ_flat = occ.ravel()

    def blocked_point(p) -> bool:
        if p[2] < world.z_min:
            return True
        return any(b.inflate(margin).contains(p, strict=True) for b in world.buildings)

    def center(idx):
        x, rem = divmod(idx, sx)
        y, z = divmod(rem, sy)
        return origin + (np.array([x, y, z], dtype=float) + 0.5) * res

    def to_voxel(p):
        v = np.clip(((p - origin) / res - 0.5).round().astype(int),
                    1, np.array(shape) - 2)
        return int(v[0]) * sx + int(v[1]) * sy + int(v[2])

    steps = [(int(dx) * sx + int(dy) * sy + int(dz),
              math.sqrt(dx * dx + dy * dy + dz * dz) * res)
             for dx in (-1, 0, 1) for dy in (-1, 0, 1) for dz in (-1, 0, 1)
             if (dx, dy, dz) != (0, 0, 0)]

    start_v, goal_v = to_voxel(start), to_voxel(goal)
    occ_flat[start_v] = False
    occ_flat[goal_v] = False
    dist = np.full(occ_flat.shape[0], np.inf)
    prev = np.full(occ_flat.shape[0], -1, dtype=np.int64)
    dist[start_v] = 0.0
    heap = [(0.0, start_v)]
    while heap:
        dcur, v = heapq.heappop(heap)
        if v == goal_v:
            break
        if dcur > dist[v] + 1e-12:
            continue
        for doff, cost in steps:
            nv = v + doff
            if occ_flat[nv]:
                continue
            nd = dcur + cost
            if nd < dist[nv]:
                dist[nv] = nd
                prev[nv] = v
                heapq.heappush(heap, (nd, nv))
    if not np.isfinite(dist[goal_v]):
        raise RuntimeError("oracle found no path")

    chain = [goal_v]
    while chain[-1] != start_v:
        chain.append(int(prev[chain[-1]]))
    chain.reverse()
    pts = [start] + [center(v) for v in chain[1:-1]] + [goal]

    def seg_free(a, b) -> bool:
        n = max(2, int(np.linalg.norm(b - a) / 0.2))
        for k in range(n + 1):
            if blocked_point(a + (b - a) * (k / n)):
                return False
        return True

    # Greedy shortcutting with sampled segments (independent of the slab test).
    out = [pts[0]]
    i = 0
    while i < len(pts) - 1:
        j = len(pts) - 1
        while j > i + 1 and not seg_free(pts[i], pts[j]):
            j -= 1
        out.append(pts[j])
        i = j
    return float(sum(np.linalg.norm(b - a) for a, b in zip(out, out[1:])))
