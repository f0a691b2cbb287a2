"""Low-level vector and box geometry shared by the world model, planner and camera.

Conventions: x east, y north, z up, all meters. Yaw in degrees, 0 along +x,
increasing counterclockwise. Gimbal pitch in degrees, 0 horizontal, -90 straight
down. Positions are quantized to 1e-6 m so that inverse motions cancel exactly.
"""

from __future__ import annotations

import math

import numpy as np

POSITION_QUANTUM = 1e-6


def quantize(p: np.ndarray) -> np.ndarray:
    """Snap a point to the micrometer grid (makes +step/-step round-trips exact)."""
    return np.round(np.asarray(p, dtype=float) / POSITION_QUANTUM) * POSITION_QUANTUM


def normalize_yaw(yaw: float) -> float:
    """Wrap a yaw angle into [0, 360)."""
    y = math.fmod(yaw, 360.0)
    return y + 360.0 if y < 0.0 else y


def wrap_angle(deg: float) -> float:
    """Wrap an angle difference into (-180, 180]."""
    a = math.fmod(deg, 360.0)
    if a > 180.0:
        a -= 360.0
    elif a <= -180.0:
        a += 360.0
    return a


def heading_vector(yaw_deg: float) -> np.ndarray:
    """Unit horizontal vector the agent is facing."""
    r = math.radians(yaw_deg)
    return np.array([math.cos(r), math.sin(r), 0.0])


def left_vector(yaw_deg: float) -> np.ndarray:
    """Unit horizontal vector 90 deg counterclockwise from the heading."""
    r = math.radians(yaw_deg)
    return np.array([-math.sin(r), math.cos(r), 0.0])


def bearing_of(v: np.ndarray) -> float:
    """Yaw angle (deg, [0,360)) of a horizontal direction vector."""
    return normalize_yaw(math.degrees(math.atan2(v[1], v[0])))


class Box:
    """Axis-aligned box with an optional semantic label."""

    __slots__ = ("lo", "hi", "label")

    def __init__(self, lo, hi, label: str = ""):
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        self.label = label
        if not np.all(self.hi > self.lo):
            raise ValueError(f"box {label!r} has non-positive extent: {lo} .. {hi}")

    def inflate(self, margin: float) -> "Box":
        return Box(self.lo - margin, self.hi + margin, self.label)

    def contains(self, p: np.ndarray, strict: bool = False) -> bool:
        p = np.asarray(p, dtype=float)
        if strict:
            return bool(np.all(p > self.lo) and np.all(p < self.hi))
        return bool(np.all(p >= self.lo) and np.all(p <= self.hi))

    def center(self) -> np.ndarray:
        return (self.lo + self.hi) / 2.0

    def corners(self) -> np.ndarray:
        lo, hi = self.lo, self.hi
        return np.array([[x, y, z] for x in (lo[0], hi[0])
                         for y in (lo[1], hi[1])
                         for z in (lo[2], hi[2])])

    def __repr__(self):
        return f"Box({self.lo.tolist()}, {self.hi.tolist()}, {self.label!r})"


def boxes_array(boxes: list) -> tuple[np.ndarray, np.ndarray]:
    """Stack boxes into (lo, hi) arrays of shape (B, 3) for vectorized tests."""
    if not boxes:
        return np.zeros((0, 3)), np.zeros((0, 3))
    lo = np.stack([b.lo for b in boxes])
    hi = np.stack([b.hi for b in boxes])
    return lo, hi


def segment_box_chords(p0: np.ndarray, p1: np.ndarray,
                       lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Chord lengths (in segment parameter units) of segments through boxes.

    p0, p1: (S, 3) segment endpoints. lo, hi: (B, 3) box bounds.
    Returns (S, B) array of max(t_exit - t_enter, 0) clipped to [0, 1].
    A zero chord means the segment misses or only touches the box.
    """
    p0 = np.atleast_2d(p0).astype(float)
    p1 = np.atleast_2d(p1).astype(float)
    d = p1 - p0                                         # (S, 3)
    if lo.shape[0] == 0:
        return np.zeros((p0.shape[0], 0))
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / d[:, None, :]                       # (S, 1, 3)
        t1 = (lo[None, :, :] - p0[:, None, :]) * inv    # (S, B, 3)
        t2 = (hi[None, :, :] - p0[:, None, :]) * inv
    tmin = np.minimum(t1, t2)
    tmax = np.maximum(t1, t2)
    # Parallel-to-slab axes: inside the slab -> (-inf, +inf); outside -> empty.
    par = d[:, None, :] == 0.0                          # broadcast (S, 1, 3)
    inside = (p0[:, None, :] > lo[None, :, :]) & (p0[:, None, :] < hi[None, :, :])
    par_b = np.broadcast_to(par, t1.shape)
    inside_b = inside & par_b
    outside_b = ~inside & par_b
    tmin = np.where(par_b, -np.inf, tmin)
    tmax = np.where(par_b, np.inf, tmax)
    t_enter = np.max(np.where(inside_b, -np.inf, tmin), axis=2)   # (S, B)
    t_exit = np.min(np.where(inside_b, np.inf, tmax), axis=2)
    miss = np.any(outside_b, axis=2)
    t_enter = np.clip(t_enter, 0.0, 1.0)
    t_exit = np.clip(t_exit, 0.0, 1.0)
    chord = np.where(miss, 0.0, np.maximum(t_exit - t_enter, 0.0))
    return chord


def segment_hits_any(p0: np.ndarray, p1: np.ndarray, boxes: list,
                     inflate: float = 0.0) -> bool:
    """True if the segment passes through the interior of any (inflated) box."""
    if not boxes:
        return False
    lo, hi = boxes_array(boxes)
    chords = segment_box_chords(np.asarray(p0)[None, :], np.asarray(p1)[None, :],
                                lo - inflate, hi + inflate)
    return bool(np.any(chords[0] > 1e-12))


def segment_first_hit(p0: np.ndarray, p1: np.ndarray,
                      lo: np.ndarray, hi: np.ndarray) -> float:
    """Earliest entry parameter t in (0, 1] of the segment into any box, or inf."""
    if lo.shape[0] == 0:
        return math.inf
    chords = segment_box_chords(np.asarray(p0)[None, :], np.asarray(p1)[None, :], lo, hi)[0]
    d = np.asarray(p1, float) - np.asarray(p0, float)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / d
        t1 = (lo - p0) * inv
        t2 = (hi - p0) * inv
    tmin = np.minimum(t1, t2)
    par = d == 0.0
    tmin = np.where(par, -np.inf, tmin)
    t_enter = np.max(tmin, axis=1)
    hit = chords > 1e-12
    if not np.any(hit):
        return math.inf
    return float(np.min(np.maximum(t_enter[hit], 0.0)))


def occluded_mask(origin: np.ndarray, targets: np.ndarray,
                  lo: np.ndarray, hi: np.ndarray, trim: float = 1e-6) -> np.ndarray:
    """Which camera->target segments are interrupted by a box interior.

    Endpoints are trimmed by `trim` (in parameter units) so targets lying on a
    box surface are not reported as occluded by their own face.
    """
    targets = np.atleast_2d(targets)
    if lo.shape[0] == 0:
        return np.zeros(targets.shape[0], dtype=bool)
    origins = np.broadcast_to(np.asarray(origin, float), targets.shape)
    d = targets - origins
    p0 = origins + trim * d
    p1 = origins + (1.0 - trim) * d
    chords = segment_box_chords(p0, p1, lo, hi)
    return np.any(chords > 1e-9, axis=1)
