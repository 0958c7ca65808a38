"""BS-side multimodal sensing: LiDAR point cloud and depth/semantic view.

Camera and LiDAR share the BS pose (at ``o_BS``, looking along +x, up +z)
and the same square 90-degree frustum, so every LiDAR return re-projects
into the rendered image.  LiDAR rays sample a uniform grid over the
rectangular field of view (the image plane), giving sqrt(N) x sqrt(N)
beams; the UAV is represented by a proxy sphere.

The view is a geometric stand-in for a photorealistic render: per pixel the
nearest-hit range in meters (0 = sky/escaped) plus a semantic class id.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scene import KIND_BUILDING, KIND_GROUND, Scene, _raycast

SEM_GROUND = 0
SEM_BUILDING = 1
SEM_ROAD = 2
SEM_UAV = 3

DEFAULT_POINTS = 10_000
DEFAULT_IMAGE_SIZE = 512
DEFAULT_FOV_DEG = 90.0
DEFAULT_UAV_RADIUS = 0.5


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray  # (P, 3) global coordinates, P <= requested ray count


@dataclass(frozen=True)
class SensorImage:
    depth: np.ndarray  # (H, W) float meters, 0 where no hit
    semantic: np.ndarray  # (H, W) uint8 class ids
    fov_deg: float
    pose: np.ndarray  # camera origin


def frustum_directions(width: int, height: int, fov_deg: float) -> np.ndarray:
    """(H, W, 3) unit ray directions through pixel centers.

    Forward +x, up +z, right -y; square pixels, so the vertical FoV equals
    the horizontal one for a square image.
    """
    tan_half = math.tan(math.radians(fov_deg) / 2.0)
    u = (np.arange(width) + 0.5) / width * 2.0 - 1.0  # left -> right
    v = 1.0 - (np.arange(height) + 0.5) / height * 2.0  # top -> bottom
    uu, vv = np.meshgrid(u * tan_half, v * tan_half)
    dirs = np.stack([np.ones_like(uu), -uu, vv], axis=-1)
    return dirs / np.linalg.norm(dirs, axis=-1, keepdims=True)


def project_to_pixel(origin: np.ndarray, point: np.ndarray, width: int, height: int, fov_deg: float):
    """Pixel (row, col) a world point projects to, or None if outside the frustum."""
    d = np.asarray(point, dtype=float) - np.asarray(origin, dtype=float)
    if d[0] <= 0:
        return None
    tan_half = math.tan(math.radians(fov_deg) / 2.0)
    u = -d[1] / d[0] / tan_half
    v = d[2] / d[0] / tan_half
    if not (-1.0 <= u <= 1.0 and -1.0 <= v <= 1.0):
        return None
    col = int((u + 1.0) / 2.0 * width)
    row = int((1.0 - v) / 2.0 * height)
    return min(row, height - 1), min(col, width - 1)


def _sphere_hits(origins: np.ndarray, dirs: np.ndarray, center: np.ndarray, radius: float) -> np.ndarray:
    """Smallest positive ray parameter against a sphere, inf where missed."""
    oc = origins - center
    b = np.einsum("ij,ij->i", dirs, oc)
    c = np.einsum("ij,ij->i", oc, oc) - radius * radius
    disc = b * b - c
    t = np.full(origins.shape[0], np.inf)
    ok = disc >= 0
    root = np.sqrt(np.where(ok, disc, 0.0))
    t1 = -b - root
    t2 = -b + root
    cand = np.where(t1 > 1e-9, t1, np.where(t2 > 1e-9, t2, np.inf))
    t[ok] = cand[ok]
    return t


def _cast_scene(scene: Scene, origin: np.ndarray, dirs: np.ndarray, uav_pos: np.ndarray, uav_radius: float):
    """Nearest hit per ray against scene geometry and the UAV proxy sphere.

    Returns (range, semantic); misses get range 0 and semantic 0, so the
    semantic channel is meaningful only where range > 0.  Ground hits
    outside the observed region count as escaped.
    """
    n = dirs.shape[0]
    origins = np.broadcast_to(origin, (n, 3)).copy()
    t, kind, _ = _raycast(scene.boxes, origins, dirs)

    pts = origins + np.where(np.isfinite(t), t, 0.0)[:, None] * dirs
    is_ground = kind == KIND_GROUND
    in_bounds = (
        (pts[:, 0] >= scene.bounds.x0) & (pts[:, 0] <= scene.bounds.x1)
        & (pts[:, 1] >= scene.bounds.y0) & (pts[:, 1] <= scene.bounds.y1)
    )
    escaped = is_ground & ~in_bounds
    t = np.where(escaped, np.inf, t)
    kind = np.where(escaped, -1, kind)

    t_uav = _sphere_hits(origins, dirs, np.asarray(uav_pos, dtype=float), uav_radius)
    use_uav = t_uav < t
    rng = np.where(use_uav, t_uav, t)

    sem = np.zeros(n, dtype=np.uint8)
    sem[kind == KIND_BUILDING] = SEM_BUILDING
    ground_hit = (kind == KIND_GROUND) & np.isfinite(t)
    if ground_hit.any():
        g = sem[ground_hit]
        g[:] = SEM_GROUND
        gx, gy = pts[ground_hit, 0], pts[ground_hit, 1]
        on_road = np.zeros(gx.shape[0], dtype=bool)
        for r in scene.roads:
            on_road |= (gx >= r.x0) & (gx <= r.x1) & (gy >= r.y0) & (gy <= r.y1)
        g[on_road] = SEM_ROAD
        sem[ground_hit] = g
    sem[use_uav] = SEM_UAV

    miss = ~np.isfinite(rng)
    rng = np.where(miss, 0.0, rng)
    sem[miss] = SEM_GROUND
    return rng, sem


def lidar_scan(
    scene: Scene,
    uav_pos: np.ndarray,
    n_points: int = DEFAULT_POINTS,
    *,
    fov_deg: float = DEFAULT_FOV_DEG,
    uav_radius: float = DEFAULT_UAV_RADIUS,
) -> PointCloud:
    """Deterministic grid scan from the BS; rays that escape return nothing."""
    side = math.isqrt(n_points)
    if side * side != n_points:
        raise ValueError(f"n_points must be a perfect square, got {n_points}")
    origin = scene.bs_position
    dirs = frustum_directions(side, side, fov_deg).reshape(-1, 3)
    rng, _sem = _cast_scene(scene, origin, dirs, uav_pos, uav_radius)
    hit = rng > 0.0
    points = origin[None, :] + rng[hit, None] * dirs[hit]
    return PointCloud(points)


def render_view(
    scene: Scene,
    uav_pos: np.ndarray,
    *,
    width: int = DEFAULT_IMAGE_SIZE,
    height: int = DEFAULT_IMAGE_SIZE,
    fov_deg: float = DEFAULT_FOV_DEG,
    uav_radius: float = DEFAULT_UAV_RADIUS,
) -> SensorImage:
    """Depth/semantic pinhole render from the BS viewpoint."""
    origin = scene.bs_position
    dirs = frustum_directions(width, height, fov_deg).reshape(-1, 3)
    rng, sem = _cast_scene(scene, origin, dirs, uav_pos, uav_radius)
    depth = rng.reshape(height, width)
    semantic = sem.reshape(height, width)
    return SensorImage(depth, semantic, fov_deg, origin.copy())
