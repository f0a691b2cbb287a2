"""Semantic pinhole camera: visibility, probe/panorama view sets, FOV overlap.

The "frame" is a structured entity list rather than pixels: each visible
landmark and building face is reported with its image-plane box, range and an
occlusion estimate. Image convention: u rightward, v downward, origin top-left.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import occluded_mask, wrap_angle
from .planning import first_building_hits
from .world import AgentPose, CityWorld

LANDMARK_HALF_SIZE = 1.0   # landmarks are rendered as 2 m cubes
OVERLAP_MAX_RANGE = 200.0  # open-space anchor distance for fov_overlap


@dataclass(frozen=True)
class CameraIntrinsics:
    width: int = 560
    height: int = 560
    horizontal_fov: float = 90.0

    def __post_init__(self):
        if self.width != self.height:
            raise ValueError("camera model assumes square images")

    @property
    def focal(self) -> float:
        return (self.width / 2.0) / math.tan(math.radians(self.horizontal_fov) / 2.0)

    @property
    def cx(self) -> float:
        return self.width / 2.0

    @property
    def cy(self) -> float:
        return self.height / 2.0


@dataclass(frozen=True)
class Entity:
    """One visible thing: semantic label, image box, range and occlusion."""

    label: str
    box: tuple[float, float, float, float]  # [u_min, v_min, u_max, v_max] px
    depth: float                            # Euclidean range, meters
    occluded_fraction: float
    bearing: float = 0.0                    # deg, CCW-positive relative to yaw
    elevation: float = 0.0                  # deg above horizontal

    def to_dict(self) -> dict:
        return {"label": self.label, "box": list(self.box), "depth": self.depth,
                "occluded_fraction": self.occluded_fraction,
                "bearing": self.bearing, "elevation": self.elevation}


@dataclass(frozen=True)
class SemanticObservation:
    camera_pose: AgentPose
    entities: tuple[Entity, ...]
    timestamp: int = 0

    def to_dict(self) -> dict:
        return {"camera_pose": self.camera_pose.to_dict(),
                "entities": [e.to_dict() for e in self.entities],
                "timestamp": self.timestamp}


@dataclass(frozen=True)
class ViewSet:
    views: tuple[tuple[str, SemanticObservation], ...]

    def tags(self) -> list[str]:
        return [tag for tag, _ in self.views]

    def get(self, tag: str) -> SemanticObservation:
        for t, obs in self.views:
            if t == tag:
                return obs
        raise KeyError(tag)


def camera_basis(yaw: float, pitch: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(forward, right, up) unit vectors for a camera at the given yaw/pitch."""
    yr, pr = math.radians(yaw), math.radians(pitch)
    forward = np.array([math.cos(pr) * math.cos(yr),
                        math.cos(pr) * math.sin(yr),
                        math.sin(pr)])
    right = np.array([math.sin(yr), -math.cos(yr), 0.0])
    up = np.cross(right, forward)
    return forward, right, up


def project_points(points: np.ndarray, pose: AgentPose, intr: CameraIntrinsics,
                   pitch: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Project world points to pixel coordinates.

    Returns (uv array (N, 2), forward-depth array (N,)); points with
    non-positive forward depth get uv = nan.
    """
    pitch = pose.gimbal if pitch is None else pitch
    fwd, right, up = camera_basis(pose.yaw, pitch)
    rel = np.atleast_2d(points) - pose.position
    z = rel @ fwd
    x = rel @ right
    y = rel @ up
    with np.errstate(divide="ignore", invalid="ignore"):
        u = intr.cx + intr.focal * x / z
        v = intr.cy - intr.focal * y / z
    uv = np.stack([u, v], axis=1)
    uv[z <= 0.0] = np.nan
    return uv, z


def unproject_pixel(u: float, v: float, depth: float, pose: AgentPose,
                    intr: CameraIntrinsics, pitch: float | None = None) -> np.ndarray:
    """Inverse of project_points for one pixel at a Euclidean range `depth`."""
    pitch = pose.gimbal if pitch is None else pitch
    fwd, right, up = camera_basis(pose.yaw, pitch)
    ray = fwd + ((u - intr.cx) / intr.focal) * right + ((intr.cy - v) / intr.focal) * up
    ray = ray / np.linalg.norm(ray)
    return pose.position + depth * ray


def in_frustum(points: np.ndarray, pose: AgentPose, intr: CameraIntrinsics,
               pitch: float | None = None, tol: float = 1e-9) -> np.ndarray:
    """Frustum membership for world points (square FOV both axes)."""
    pitch = pose.gimbal if pitch is None else pitch
    fwd, right, up = camera_basis(pose.yaw, pitch)
    rel = np.atleast_2d(points) - pose.position
    z = rel @ fwd
    x = rel @ right
    y = rel @ up
    half = math.tan(math.radians(intr.horizontal_fov) / 2.0)
    with np.errstate(invalid="ignore"):
        ok = (z > 0.0) & (np.abs(x) <= (half + tol) * z) & (np.abs(y) <= (half + tol) * z)
    return ok


def entity_geometry(world: CityWorld) -> tuple[list[str], np.ndarray, np.ndarray]:
    """(labels, centers (E,3), sample points (E,9,3)) for landmarks and faces.

    Cached on the world instance; worlds are immutable after construction.
    """
    cached = getattr(world, "_entity_geometry", None)
    if cached is not None:
        return cached
    labels: list[str] = []
    centers: list[np.ndarray] = []
    samples: list[np.ndarray] = []
    for m in world.landmarks:
        c = m.position
        h = LANDMARK_HALF_SIZE
        corners = np.array([[c[0] + sx * h, c[1] + sy * h, c[2] + sz * h]
                            for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)])
        labels.append(m.label)
        centers.append(c)
        samples.append(np.vstack([c, corners]))
    face_names = ("west", "east", "south", "north", "bottom", "top")
    for b in world.buildings:
        for axis in range(3):
            for side in (0, 1):
                coord = b.lo[axis] if side == 0 else b.hi[axis]
                other = [a for a in range(3) if a != axis]
                g0 = np.linspace(b.lo[other[0]], b.hi[other[0]], 3)
                g1 = np.linspace(b.lo[other[1]], b.hi[other[1]], 3)
                pts = np.zeros((9, 3))
                gg0, gg1 = np.meshgrid(g0, g1, indexing="ij")
                pts[:, axis] = coord
                pts[:, other[0]] = gg0.ravel()
                pts[:, other[1]] = gg1.ravel()
                labels.append(f"{b.label}:{face_names[axis * 2 + side]}")
                centers.append(pts[4])
                samples.append(pts)
    geom = (labels,
            np.stack(centers) if centers else np.zeros((0, 3)),
            np.stack(samples) if samples else np.zeros((0, 9, 3)))
    world._entity_geometry = geom
    return geom


def render(world: CityWorld, pose: AgentPose, intr: CameraIntrinsics = CameraIntrinsics(),
           timestamp: int = 0, pitch: float | None = None) -> SemanticObservation:
    """Render the semantic frame seen from `pose`.

    An entity appears iff its center is inside the frustum and at least one of
    its 9 sample points has a clear ray from the camera. Entities are sorted by
    range (ties by label).
    """
    labels, centers, samples = entity_geometry(world)
    if not labels:
        return SemanticObservation(camera_pose=pose, entities=(), timestamp=timestamp)
    lo, hi = world.building_arrays()
    cam = pose.position
    eff_pitch = pose.gimbal if pitch is None else pitch

    vis = in_frustum(centers, pose, intr, pitch=eff_pitch)
    idx = np.flatnonzero(vis)
    if idx.size == 0:
        return SemanticObservation(camera_pose=pose, entities=(), timestamp=timestamp)

    flat_samples = samples[idx].reshape(-1, 3)               # (K*9, 3)
    occluded = occluded_mask(cam, flat_samples, lo, hi).reshape(idx.size, 9)
    frac = occluded.mean(axis=1)
    keep = frac < 1.0
    idx, frac = idx[keep], frac[keep]
    if idx.size == 0:
        return SemanticObservation(camera_pose=pose, entities=(), timestamp=timestamp)

    uv, z = project_points(samples[idx].reshape(-1, 3), pose, intr, pitch=eff_pitch)
    uv = uv.reshape(idx.size, 9, 2)
    u = np.clip(uv[:, :, 0], 0.0, intr.width)
    v = np.clip(uv[:, :, 1], 0.0, intr.height)
    with np.errstate(invalid="ignore"):
        u0, u1 = np.nanmin(u, axis=1), np.nanmax(u, axis=1)
        v0, v1 = np.nanmin(v, axis=1), np.nanmax(v, axis=1)

    rel = centers[idx] - cam
    depth = np.linalg.norm(rel, axis=1)
    horiz = np.hypot(rel[:, 0], rel[:, 1])
    bearing = np.degrees(np.arctan2(rel[:, 1], rel[:, 0])) - pose.yaw
    elevation = np.degrees(np.arctan2(rel[:, 2], horiz))

    entities = [Entity(label=labels[e],
                       box=(float(u0[k]), float(v0[k]), float(u1[k]), float(v1[k])),
                       depth=float(depth[k]),
                       occluded_fraction=float(frac[k]),
                       bearing=wrap_angle(float(bearing[k])),
                       elevation=float(elevation[k]))
                for k, e in enumerate(idx)]
    entities.sort(key=lambda e: (e.depth, e.label))
    return SemanticObservation(camera_pose=pose, entities=tuple(entities),
                               timestamp=timestamp)


PROBE_TAGS = ("front", "left", "back", "right", "up", "down")


def probe_views(world: CityWorld, pose: AgentPose,
                intr: CameraIntrinsics = CameraIntrinsics(),
                timestamp: int = 0) -> ViewSet:
    """Six transient sensor sweeps; the persistent pose/gimbal is untouched."""
    specs = [("front", pose.yaw, 0.0), ("left", pose.yaw + 90.0, 0.0),
             ("back", pose.yaw + 180.0, 0.0), ("right", pose.yaw + 270.0, 0.0),
             ("up", pose.yaw, 90.0), ("down", pose.yaw, -90.0)]
    views = []
    for tag, yaw, pitch in specs:
        probe = AgentPose(pose.position, yaw, 0.0)
        views.append((tag, render(world, probe, intr, timestamp, pitch=pitch)))
    return ViewSet(views=tuple(views))


def panorama(world: CityWorld, pose: AgentPose,
             intr: CameraIntrinsics = CameraIntrinsics(),
             timestamp: int = 0) -> ViewSet:
    """Six views at 60 deg yaw spacing covering all horizontal bearings."""
    views = []
    for k in range(6):
        yaw = pose.yaw + 60.0 * k
        probe = AgentPose(pose.position, yaw, pose.gimbal)
        views.append((f"pano_{k * 60:03d}", render(world, probe, intr, timestamp)))
    return ViewSet(views=tuple(views))


def fov_overlap(world: CityWorld, pose_a: AgentPose, pose_b: AgentPose,
                intr: CameraIntrinsics = CameraIntrinsics(),
                samples: int = 256) -> float:
    """Fraction of pose_a's view content that pose_b also sees.

    Rays on a uniform grid in a's frustum are anchored at the first building
    hit (or at 200 m in open space); the result is the fraction of anchors
    inside b's frustum and unoccluded from b.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    n = max(1, round(math.sqrt(samples)))
    half = math.tan(math.radians(intr.horizontal_fov) / 2.0)
    # Pixel-center spacing keeps ray directions strictly inside the frustum.
    coords = (2.0 * (np.arange(n) + 0.5) / n - 1.0) * half
    ss, tt = np.meshgrid(coords, coords, indexing="ij")
    fwd, right, up = camera_basis(pose_a.yaw, pose_a.gimbal)
    dirs = (fwd[None, :] + ss.ravel()[:, None] * right[None, :]
            + tt.ravel()[:, None] * up[None, :])
    dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    targets = pose_a.position + OVERLAP_MAX_RANGE * dirs
    anchors = first_building_hits(pose_a.position, targets, world, OVERLAP_MAX_RANGE)
    visible = in_frustum(anchors, pose_b, intr)
    if np.any(visible):
        lo, hi = world.building_arrays()
        blocked = occluded_mask(pose_b.position, anchors[visible], lo, hi)
        visible_idx = np.flatnonzero(visible)
        visible[visible_idx[blocked]] = False
    return float(np.mean(visible))


def observation_text(obs: SemanticObservation, max_entities: int | None = None) -> str:
    """Prompt-friendly one-line-per-entity serialization."""
    ents = obs.entities if max_entities is None else obs.entities[:max_entities]
    if not ents:
        return "(no entities visible)"
    lines = []
    for e in ents:
        u0, v0, u1, v1 = e.box
        lines.append(
            f"{e.label} @ bearing {e.bearing:.1f}°, elevation {e.elevation:.1f}°, "
            f"distance {e.depth:.1f} m, box [{u0:.0f},{v0:.0f},{u1:.0f},{v1:.0f}]")
    return "\n".join(lines)


def observation_svg(obs: SemanticObservation, intr: CameraIntrinsics = CameraIntrinsics()) -> str:
    """Schematic first-person frame as an SVG document (used by the teleop UI)."""
    w, h = intr.width, intr.height
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {w} {h}" '
        f'width="{w}" height="{h}">',
        f'<rect x="0" y="0" width="{w}" height="{h}" fill="#0b1d2a"/>',
    ]
    # Horizon line for the current gimbal pitch (off-screen when |pitch| > fov/2).
    horizon_v = intr.cy + intr.focal * math.tan(math.radians(obs.camera_pose.gimbal))
    if 0 <= horizon_v <= h:
        parts.append(f'<line x1="0" y1="{horizon_v:.1f}" x2="{w}" y2="{horizon_v:.1f}" '
                     f'stroke="#33506a" stroke-width="1"/>')
    palette = ["#7fb069", "#e6aa68", "#5fa8d3", "#ca6680", "#9b8816"]
    for i, e in enumerate(sorted(obs.entities, key=lambda e: -e.depth)):
        u0, v0, u1, v1 = e.box
        color = palette[i % len(palette)]
        shade = max(0.25, min(1.0, 60.0 / max(e.depth, 1.0)))
        parts.append(
            f'<rect x="{u0:.1f}" y="{v0:.1f}" width="{max(u1 - u0, 1):.1f}" '
            f'height="{max(v1 - v0, 1):.1f}" fill="{color}" fill-opacity="{shade:.2f}" '
            f'stroke="{color}"/>')
        parts.append(f'<text x="{u0 + 2:.1f}" y="{max(v0 - 3, 10):.1f}" '
                     f'font-size="12" fill="#e8f1f2">{_svg_escape(e.label)} '
                     f'({e.depth:.0f} m)</text>')
    cx, cy = intr.cx, intr.cy
    parts.append(f'<path d="M {cx - 10} {cy} H {cx + 10} M {cx} {cy - 10} V {cy + 10}" '
                 f'stroke="#e8f1f2" stroke-width="1"/>')
    parts.append("</svg>")
    return "\n".join(parts)


def observation_png(obs: SemanticObservation, intr: CameraIntrinsics = CameraIntrinsics()) -> bytes:
    """Rasterized schematic for image-capable gateway backends."""
    from PIL import Image, ImageDraw

    img = Image.new("RGB", (intr.width, intr.height), (11, 29, 42))
    draw = ImageDraw.Draw(img)
    horizon_v = intr.cy + intr.focal * math.tan(math.radians(obs.camera_pose.gimbal))
    if 0 <= horizon_v <= intr.height:
        draw.line([(0, horizon_v), (intr.width, horizon_v)], fill=(51, 80, 106))
    palette = [(127, 176, 105), (230, 170, 104), (95, 168, 211), (202, 102, 128)]
    for i, e in enumerate(sorted(obs.entities, key=lambda e: -e.depth)):
        u0, v0, u1, v1 = e.box
        color = palette[i % len(palette)]
        draw.rectangle([u0, v0, max(u1, u0 + 1), max(v1, v0 + 1)], outline=color)
        draw.text((u0 + 2, max(v0 - 12, 0)), f"{e.label} {e.depth:.0f}m", fill=(232, 241, 242))
    import io

    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def _svg_escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
