"""Procedural urban scenes with electromagnetic material assignments.

A scene is a 120 m x 120 m observed region in front of an elevated base
station: extruded axis-aligned buildings (20-60 m tall, marble/wood/metal),
a concrete road grid, and a medium-dry-ground plane at z = 0.  The BS sits
on the x = 0 boundary at ``(0, 0, h)`` looking into +x.

Scenes are immutable after generation and regeneration with the same
``(seed, params)`` is bit-identical, so every downstream artifact can be
reproduced from the seeds recorded in a dataset manifest.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InfeasibleLayoutError
from .materials import (
    BUILDING_MATERIALS,
    GROUND_MATERIAL,
    ROAD_MATERIAL,
    Material,
    get_material,
)

SCENE_SIDE = 120.0
FLIGHT_CEILING = 120.0
HIT_EPS = 1e-6  # minimum hit distance, meters
_DIR_TOL = 1e-9

# Ray/segment semantic kinds returned by the vectorized caster.
KIND_NONE = -1
KIND_GROUND = 0
KIND_BUILDING = 1


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle in the xy-plane: [x0, x1] x [y0, y1]."""

    x0: float
    x1: float
    y0: float
    y1: float

    def contains(self, x: float, y: float) -> bool:
        return self.x0 <= x <= self.x1 and self.y0 <= y <= self.y1

    def intersects(self, other: "Rect") -> bool:
        return not (
            self.x1 <= other.x0
            or other.x1 <= self.x0
            or self.y1 <= other.y0
            or other.y1 <= self.y0
        )

    def inflate(self, margin: float) -> "Rect":
        return Rect(self.x0 - margin, self.x1 + margin, self.y0 - margin, self.y1 + margin)

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))


@dataclass(frozen=True)
class Building:
    footprint: Rect
    height: float
    material: Material


@dataclass(frozen=True)
class Hit:
    point: np.ndarray
    normal: np.ndarray
    material: Material
    distance: float


@dataclass(frozen=True)
class SceneParams:
    """Density/topology knobs for the generator.

    The counts and sizes are deliberate defaults, not calibrated values;
    everything here is recorded in the dataset manifest.
    """

    building_count: tuple[int, int] = (6, 10)
    footprint_side: tuple[float, float] = (10.0, 24.0)
    height_range: tuple[float, float] = (20.0, 60.0)
    road_spacing: float = 40.0
    road_width: float = 6.0
    bs_height: float = 65.0
    min_gap: float = 2.0
    edge_margin: float = 1.0
    placement_attempts: int = 200


@dataclass(frozen=True)
class Scene:
    bounds: Rect
    buildings: tuple[Building, ...]
    roads: tuple[Rect, ...]
    bs_position: np.ndarray
    seed: int
    params: SceneParams = field(default=SceneParams())

    # -- cached geometry arrays (derived, not part of identity) -------------
    def __post_init__(self):
        boxes = np.zeros((len(self.buildings), 6))
        for i, b in enumerate(self.buildings):
            boxes[i] = (b.footprint.x0, b.footprint.x1, b.footprint.y0, b.footprint.y1, 0.0, b.height)
        object.__setattr__(self, "_boxes", boxes)

    @property
    def boxes(self) -> np.ndarray:
        """(B, 6) array of building AABBs: x0, x1, y0, y1, z0, z1."""
        return self._boxes

    def ground_material_at(self, x: float, y: float) -> Material:
        for road in self.roads:
            if road.contains(x, y):
                return get_material(ROAD_MATERIAL)
        return get_material(GROUND_MATERIAL)

    def contains_point(self, p: np.ndarray) -> bool:
        return bool(self.bounds.contains(p[0], p[1]) and 0.0 <= p[2] <= FLIGHT_CEILING)

    def point_in_building(self, p: np.ndarray, margin: float = 0.0) -> bool:
        for b in self.buildings:
            fp = b.footprint.inflate(margin)
            if fp.contains(p[0], p[1]) and -margin <= p[2] <= b.height + margin:
                return True
        return False

    # ------------------------------------------------------------------
    def intersect(self, origin: np.ndarray, direction: np.ndarray) -> Optional[Hit]:
        """Nearest intersection of a ray with buildings or the ground plane.

        ``direction`` must be unit-norm.  Hits closer than ``HIT_EPS`` are
        ignored; a ray whose nearest hit falls outside the observed region
        is treated as escaped and returns ``None``.
        """
        origin = np.asarray(origin, dtype=float)
        direction = np.asarray(direction, dtype=float)
        if abs(np.linalg.norm(direction) - 1.0) > _DIR_TOL:
            raise ValueError("ray direction must be unit-norm")
        t, kind, b_idx = _raycast(self.boxes, origin[None, :], direction[None, :])
        t, kind, b_idx = float(t[0]), int(kind[0]), int(b_idx[0])
        if kind == KIND_NONE:
            return None
        point = origin + t * direction
        if kind == KIND_GROUND:
            if not self.bounds.contains(point[0], point[1]):
                return None
            return Hit(point, np.array([0.0, 0.0, 1.0]), self.ground_material_at(point[0], point[1]), t)
        normal = _box_face_normal(self.boxes[b_idx], point)
        return Hit(point, normal, self.buildings[b_idx].material, t)

    def los_blocked(self, a: np.ndarray, b: np.ndarray) -> bool:
        """True iff the open segment (a, b) intersects a building or the ground."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if np.array_equal(a, b):
            raise ValueError("segment endpoints must differ")
        return bool(segments_blocked(self.boxes, a[None, :], b[None, :])[0])


def _box_face_normal(box: np.ndarray, point: np.ndarray) -> np.ndarray:
    """Outward normal of the box face nearest to an on-surface point."""
    x0, x1, y0, y1, z0, z1 = box
    gaps = np.array(
        [point[0] - x0, x1 - point[0], point[1] - y0, y1 - point[1], point[2] - z0, z1 - point[2]]
    )
    normals = np.array(
        [[-1, 0, 0], [1, 0, 0], [0, -1, 0], [0, 1, 0], [0, 0, -1], [0, 0, 1]], dtype=float
    )
    return normals[int(np.argmin(np.abs(gaps)))]


def _slab_intervals(boxes: np.ndarray, origins: np.ndarray, dirs: np.ndarray):
    """Entry/exit parameters of R rays against B boxes: (R, B) arrays."""
    # Broadcast: origins (R, 1, 3), boxes (1, B, 3, lo/hi)
    lo = boxes[None, :, 0::2]  # (1, B, 3)
    hi = boxes[None, :, 1::2]
    o = origins[:, None, :]
    d = dirs[:, None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / d
        t1 = (lo - o) * inv
        t2 = (hi - o) * inv
    # Parallel-axis rays: inside slab -> (-inf, inf), outside -> empty
    parallel = d == 0.0
    inside = (o >= lo) & (o <= hi)
    t_lo = np.minimum(t1, t2)
    t_hi = np.maximum(t1, t2)
    t_lo = np.where(parallel, np.where(inside, -np.inf, np.inf), t_lo)
    t_hi = np.where(parallel, np.where(inside, np.inf, -np.inf), t_hi)
    t_near = t_lo.max(axis=2)
    t_far = t_hi.min(axis=2)
    return t_near, t_far


def _raycast(boxes: np.ndarray, origins: np.ndarray, dirs: np.ndarray):
    """Vectorized nearest-hit cast of R rays against boxes + ground plane.

    Returns ``(t, kind, box_index)``; ground hits are not bounds-clipped
    here (the scalar wrapper and the sensor caster apply their own region
    policy).  Boxes are visited in a Python loop with flat (R,) temporaries,
    which keeps the memory traffic linear in the ray count.
    """
    n_rays = origins.shape[0]
    best_t = np.full(n_rays, np.inf)
    kind = np.full(n_rays, KIND_NONE, dtype=int)
    b_idx = np.full(n_rays, -1, dtype=int)

    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / dirs
    for j in range(boxes.shape[0]):
        t_near = np.full(n_rays, -np.inf)
        t_far = np.full(n_rays, np.inf)
        for ax in range(3):
            lo, hi = boxes[j, 2 * ax], boxes[j, 2 * ax + 1]
            o = origins[:, ax]
            t1 = (lo - o) * inv[:, ax]
            t2 = (hi - o) * inv[:, ax]
            parallel = dirs[:, ax] == 0.0
            swap = t1 > t2
            t_lo = np.where(swap, t2, t1)
            t_hi = np.where(swap, t1, t2)
            inside = (o >= lo) & (o <= hi)
            t_lo = np.where(parallel, np.where(inside, -np.inf, np.inf), t_lo)
            t_hi = np.where(parallel, np.where(inside, np.inf, -np.inf), t_hi)
            np.maximum(t_near, t_lo, out=t_near)
            np.minimum(t_far, t_hi, out=t_far)
        hit = (t_far >= t_near) & (t_far > HIT_EPS)
        t_entry = np.where(t_near > HIT_EPS, t_near, t_far)  # inside-box rays exit
        better = hit & (t_entry < best_t)
        best_t = np.where(better, t_entry, best_t)
        kind = np.where(better, KIND_BUILDING, kind)
        b_idx = np.where(better, j, b_idx)

    dz = dirs[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        t_ground = -origins[:, 2] / dz
    ok = (dz != 0.0) & (t_ground > HIT_EPS) & (t_ground < best_t)
    best_t = np.where(ok, t_ground, best_t)
    kind = np.where(ok, KIND_GROUND, kind)
    b_idx = np.where(ok, -1, b_idx)
    return best_t, kind, b_idx


def segments_blocked(boxes: np.ndarray, a: np.ndarray, b: np.ndarray, end_clearance: float = 1e-6) -> np.ndarray:
    """True per segment iff its interior crosses a box or the ground plane.

    ``a``/``b`` are (S, 3).  Intersections within ``end_clearance`` meters of
    either endpoint do not count, so segments may start or end exactly on a
    reflecting face without blocking themselves.
    """
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    d = b - a
    length = np.linalg.norm(d, axis=1)
    blocked = np.zeros(a.shape[0], dtype=bool)
    ok = length > 0
    if not ok.all():
        # zero-length "segments" cannot be blocked
        pass
    with np.errstate(divide="ignore", invalid="ignore"):
        eps_t = np.where(ok, end_clearance / np.where(ok, length, 1.0), 0.0)

    if boxes.shape[0] > 0:
        t_near, t_far = _slab_intervals(boxes, a, d)
        lo = np.maximum(t_near, eps_t[:, None])
        hi = np.minimum(t_far, (1.0 - eps_t)[:, None])
        blocked |= (lo < hi).any(axis=1)

    # Ground plane: strict sign change of z inside the open segment.
    za, zb = a[:, 2], b[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        t_cross = za / (za - zb)
    crosses = (za * zb < 0) & (t_cross > eps_t) & (t_cross < 1.0 - eps_t)
    blocked |= crosses
    return blocked & ok


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------

def _road_grid(params: SceneParams, bounds: Rect) -> tuple[Rect, ...]:
    roads = []
    w = params.road_width / 2.0
    s = params.road_spacing
    if s <= 0:
        return ()
    x = bounds.x0 + s
    while x < bounds.x1 - 1e-9:
        roads.append(Rect(x - w, x + w, bounds.y0, bounds.y1))
        x += s
    y = bounds.y0 + s
    while y < bounds.y1 - 1e-9:
        roads.append(Rect(bounds.x0, bounds.x1, y - w, y + w))
        y += s
    return tuple(roads)


def generate_scene(seed: int, params: SceneParams = SceneParams()) -> Scene:
    """Generate a reproducible scene; pure function of ``(seed, params)``.

    Raises :class:`InfeasibleLayoutError` when non-overlapping placement
    cannot be found within ``params.placement_attempts`` tries per building.
    """
    rng = np.random.default_rng(seed)
    bounds = Rect(0.0, SCENE_SIDE, -SCENE_SIDE / 2.0, SCENE_SIDE / 2.0)
    roads = _road_grid(params, bounds)

    lo, hi = params.building_count
    if lo > hi or lo < 0:
        raise InfeasibleLayoutError(f"bad building count range {params.building_count}")
    n_buildings = int(rng.integers(lo, hi + 1))

    buildings: list[Building] = []
    for _ in range(n_buildings):
        placed = False
        for _attempt in range(params.placement_attempts):
            sx = rng.uniform(*params.footprint_side)
            sy = rng.uniform(*params.footprint_side)
            x0 = rng.uniform(bounds.x0 + params.edge_margin, bounds.x1 - params.edge_margin - sx)
            y0 = rng.uniform(bounds.y0 + params.edge_margin, bounds.y1 - params.edge_margin - sy)
            fp = Rect(x0, x0 + sx, y0, y0 + sy)
            padded = fp.inflate(params.min_gap)
            if any(padded.intersects(b.footprint) for b in buildings):
                continue
            if any(fp.intersects(r) for r in roads):
                continue
            height = rng.uniform(*params.height_range)
            material = get_material(str(rng.choice(BUILDING_MATERIALS)))
            buildings.append(Building(fp, height, material))
            placed = True
            break
        if not placed:
            raise InfeasibleLayoutError(
                f"could not place building {len(buildings) + 1}/{n_buildings} "
                f"after {params.placement_attempts} attempts"
            )

    bs = np.array([0.0, 0.0, params.bs_height])
    return Scene(bounds=bounds, buildings=tuple(buildings), roads=roads, bs_position=bs, seed=seed, params=params)


# ---------------------------------------------------------------------------
# Serialization (human-readable structured text)
# ---------------------------------------------------------------------------

def scene_to_dict(scene: Scene) -> dict:
    return {
        "seed": scene.seed,
        "bounds": [scene.bounds.x0, scene.bounds.x1, scene.bounds.y0, scene.bounds.y1],
        "bs": [float(v) for v in scene.bs_position],
        "buildings": [
            {
                "footprint": [b.footprint.x0, b.footprint.x1, b.footprint.y0, b.footprint.y1],
                "height": b.height,
                "material": b.material.name,
            }
            for b in scene.buildings
        ],
        "roads": [[r.x0, r.x1, r.y0, r.y1] for r in scene.roads],
        "materials": {
            name: {
                "permittivity_a": get_material(name).permittivity_a,
                "permittivity_b": get_material(name).permittivity_b,
                "conductivity_c": get_material(name).conductivity_c,
                "conductivity_d": get_material(name).conductivity_d,
            }
            for name in sorted(
                {b.material.name for b in scene.buildings} | {ROAD_MATERIAL, GROUND_MATERIAL}
            )
        },
        "params": {
            "building_count": list(scene.params.building_count),
            "footprint_side": list(scene.params.footprint_side),
            "height_range": list(scene.params.height_range),
            "road_spacing": scene.params.road_spacing,
            "road_width": scene.params.road_width,
            "bs_height": scene.params.bs_height,
            "min_gap": scene.params.min_gap,
            "edge_margin": scene.params.edge_margin,
            "placement_attempts": scene.params.placement_attempts,
        },
    }


def scene_from_dict(doc: dict) -> Scene:
    p = doc["params"]
    params = SceneParams(
        building_count=tuple(p["building_count"]),
        footprint_side=tuple(p["footprint_side"]),
        height_range=tuple(p["height_range"]),
        road_spacing=p["road_spacing"],
        road_width=p["road_width"],
        bs_height=p["bs_height"],
        min_gap=p["min_gap"],
        edge_margin=p["edge_margin"],
        placement_attempts=p["placement_attempts"],
    )
    buildings = tuple(
        Building(Rect(*b["footprint"]), b["height"], get_material(b["material"]))
        for b in doc["buildings"]
    )
    roads = tuple(Rect(*r) for r in doc["roads"])
    return Scene(
        bounds=Rect(*doc["bounds"]),
        buildings=buildings,
        roads=roads,
        bs_position=np.array(doc["bs"], dtype=float),
        seed=doc["seed"],
        params=params,
    )
