"""UAV trajectory simulation under ten kinematic modes.

Each mode pins a horizontal-speed interval, a vertical-speed interval, and
an altitude band; four modes (Zigzag, SuddenTurn, WallHug, Inspect) are the
"hard" propagation cases.  Modes are realized as waypoint/heading policies
that keep speeds exactly inside their envelopes; positions integrate the
stored velocity explicitly (u[t+1] = u[t] + v[t] * dt), so the recorded
frames are self-consistent by construction.

Candidate trajectories violating any constraint (collision, bounds,
altitude) are redrawn from the mode's randomness a bounded number of times;
modes whose prerequisites are missing from the scene (WallHug/Inspect/Orbit
without buildings, StreetPatrol without roads) raise ModeInfeasibleError.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ModeInfeasibleError
from .scene import FLIGHT_CEILING, Scene

_MAX_ATTEMPTS = 80
_ENVELOPE_TOL = 1e-6


@dataclass(frozen=True)
class TrajectoryMode:
    id: int
    name: str
    v_horiz: tuple[float, float]
    v_vert: tuple[float, float]
    altitude: tuple[float, float]
    difficulty: str  # "Hard" | "Easy"


MODES: tuple[TrajectoryMode, ...] = (
    TrajectoryMode(1, "Zigzag", (0.0, 5.0), (0.0, 1.5), (5.0, 15.0), "Hard"),
    TrajectoryMode(2, "WallHug", (5.0, 15.0), (0.0, 0.0), (5.0, 20.0), "Hard"),
    TrajectoryMode(3, "Inspect", (0.0, 0.0), (0.0, 2.0), (2.0, 60.0), "Hard"),
    TrajectoryMode(4, "SuddenTurn", (8.0, 12.0), (0.0, 2.0), (5.0, 45.0), "Hard"),
    TrajectoryMode(5, "StreetPatrol", (8.0, 12.0), (0.0, 2.0), (5.0, 45.0), "Easy"),
    TrajectoryMode(6, "Hover", (0.0, 0.0), (0.0, 0.5), (10.0, 80.0), "Easy"),
    TrajectoryMode(7, "CityCruise", (8.0, 15.0), (0.0, 0.0), (30.0, 60.0), "Easy"),
    TrajectoryMode(8, "Orbit", (0.0, 10.0), (0.0, 0.0), (30.0, 60.0), "Easy"),
    TrajectoryMode(9, "FastTransit", (15.0, 25.0), (0.0, 0.0), (50.0, 80.0), "Easy"),
    TrajectoryMode(10, "Scan", (0.0, 12.0), (0.0, 0.0), (50.0, 80.0), "Easy"),
)

MODE_BY_ID = {m.id: m for m in MODES}
MODE_BY_NAME = {m.name: m for m in MODES}
HARD_MODES = frozenset(m.id for m in MODES if m.difficulty == "Hard")


@dataclass(frozen=True)
class Pose:
    t: float
    position: np.ndarray
    velocity: np.ndarray


@dataclass(frozen=True)
class Trajectory:
    mode: TrajectoryMode
    frames: tuple[Pose, ...]
    seed: int


@dataclass(frozen=True)
class Violation:
    frame: int
    rule: str
    detail: str


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def _mode_speed_cap(mode: TrajectoryMode) -> float:
    return math.hypot(mode.v_horiz[1], mode.v_vert[1])


def validate_trajectory(scene: Scene, traj: Trajectory, dt: float = 0.1) -> list[Violation]:
    """Every invariant breach, tagged with frame index and rule name."""
    out: list[Violation] = []
    mode = traj.mode
    for i, pose in enumerate(traj.frames):
        u, v = pose.position, pose.velocity
        alt_lo, alt_hi = mode.altitude
        if not (alt_lo - _ENVELOPE_TOL <= u[2] <= alt_hi + _ENVELOPE_TOL):
            out.append(Violation(i, "altitude", f"z={u[2]:.3f} outside [{alt_lo}, {alt_hi}]"))
        vh = math.hypot(v[0], v[1])
        h_lo, h_hi = mode.v_horiz
        if not (h_lo - _ENVELOPE_TOL <= vh <= h_hi + _ENVELOPE_TOL):
            out.append(Violation(i, "speed_horizontal", f"|v_h|={vh:.4f} outside [{h_lo}, {h_hi}]"))
        vz = abs(v[2])
        v_lo, v_hi = mode.v_vert
        if not (v_lo - _ENVELOPE_TOL <= vz <= v_hi + _ENVELOPE_TOL):
            out.append(Violation(i, "speed_vertical", f"|v_z|={vz:.4f} outside [{v_lo}, {v_hi}]"))
        if u[2] <= 0.0 or not scene.bounds.contains(u[0], u[1]) or u[2] > FLIGHT_CEILING:
            out.append(Violation(i, "bounds", f"pose {u.tolist()} outside scene volume"))
        if scene.point_in_building(u):
            out.append(Violation(i, "collision", f"pose {u.tolist()} inside a building"))
    slack = _mode_speed_cap(mode) * dt * 0.1
    for i in range(len(traj.frames) - 1):
        a, b = traj.frames[i], traj.frames[i + 1]
        residual = np.linalg.norm(b.position - a.position - a.velocity * dt)
        if residual > slack:
            out.append(Violation(i, "kinematics", f"step residual {residual:.2e} > {slack:.2e}"))
    return out


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------

class _Retry(Exception):
    """Internal: abandon the current candidate and redraw."""


def simulate_trajectory(
    scene: Scene, mode: TrajectoryMode, seed: int, t_frames: int = 20, dt: float = 0.1
) -> Trajectory:
    """Deterministic trajectory for (scene, mode, seed, T, dt)."""
    if t_frames < 2:
        raise ValueError("need at least two frames")
    if dt <= 0:
        raise ValueError("dt must be positive")
    gen = _GENERATORS[mode.name]
    rng = np.random.default_rng([seed, mode.id])
    last_error = "no attempt made"
    for _attempt in range(_MAX_ATTEMPTS):
        try:
            frames = gen(scene, mode, rng, t_frames, dt)
        except _Retry as e:
            last_error = str(e) or "candidate rejected"
            continue
        traj = Trajectory(mode, tuple(frames), seed)
        if not validate_trajectory(scene, traj, dt):
            return traj
        last_error = "generated candidate failed validation"
    raise ModeInfeasibleError(f"{mode.name}: {last_error} after {_MAX_ATTEMPTS} attempts")


def _poses(positions: list[np.ndarray], velocities: list[np.ndarray], dt: float) -> list[Pose]:
    return [Pose(i * dt, p, v) for i, (p, v) in enumerate(zip(positions, velocities))]


def _check_free(scene: Scene, p: np.ndarray, clearance: float = 0.5) -> bool:
    if not scene.bounds.inflate(-0.5).contains(p[0], p[1]):
        return False
    if p[2] <= 0.5 or p[2] > FLIGHT_CEILING - 0.5:
        return False
    return not scene.point_in_building(p, margin=clearance)


def _free_start(scene: Scene, rng: np.random.Generator, alt: float, reach: float) -> np.ndarray:
    """Start point with ``reach`` meters of margin to the region boundary."""
    b = scene.bounds
    margin = min(reach + 1.0, 0.45 * (b.x1 - b.x0))
    for _ in range(200):
        x = rng.uniform(b.x0 + margin, b.x1 - margin)
        y = rng.uniform(b.y0 + margin, b.y1 - margin)
        p = np.array([x, y, alt])
        if _check_free(scene, p, clearance=1.5):
            return p
    raise _Retry("no free start point")


def _bounce_vz(z: float, vz: float, dt: float, lo: float, hi: float) -> float:
    """Flip vertical velocity when the next step would leave [lo, hi]."""
    nxt = z + vz * dt
    if nxt > hi or nxt < lo:
        vz = -vz
        nxt = z + vz * dt
        if nxt > hi or nxt < lo:  # band narrower than one step
            vz = 0.0
    return vz


def _walk(
    scene: Scene,
    start: np.ndarray,
    headings: "_HeadingPolicy",
    speed: float,
    vz_series,
    mode: TrajectoryMode,
    t_frames: int,
    dt: float,
) -> list[Pose]:
    """Constant-horizontal-speed walk with per-step collision re-aiming."""
    positions = [start.copy()]
    velocities: list[np.ndarray] = []
    alt_lo, alt_hi = mode.altitude
    u = start.copy()
    for i in range(t_frames):
        psi = headings.heading(i)
        vz = _bounce_vz(u[2], vz_series[i], dt, alt_lo + 0.2, alt_hi - 0.2)
        placed = False
        for turn in range(14):
            v = np.array([speed * math.cos(psi), speed * math.sin(psi), vz])
            nxt = u + v * dt
            if _check_free(scene, nxt):
                placed = True
                break
            psi += math.radians(65.0) * (1 if turn % 2 == 0 else -1) * (turn // 2 + 1)
        if not placed:
            raise _Retry("stuck against geometry")
        headings.committed(i, psi)
        velocities.append(v)
        if i < t_frames - 1:
            u = u + v * dt
            positions.append(u.copy())
    return _poses(positions, velocities, dt)


class _HeadingPolicy:
    """Base heading schedule; re-aims are committed back so later steps follow."""

    def __init__(self, psi0: float):
        self.psi = psi0

    def heading(self, i: int) -> float:
        return self.psi

    def committed(self, i: int, psi: float) -> None:
        self.psi = psi


class _TurnAtFrames(_HeadingPolicy):
    def __init__(self, psi0: float, turns: dict[int, float]):
        super().__init__(psi0)
        self.turns = turns

    def heading(self, i: int) -> float:
        if i in self.turns:
            self.psi += self.turns[i]
        return self.psi


# -- mode generators ---------------------------------------------------------

def _gen_zigzag(scene, mode, rng, t_frames, dt):
    s_f = rng.uniform(1.0, 3.0)
    s_l = rng.uniform(1.0, min(3.2, math.sqrt(mode.v_horiz[1] ** 2 - s_f**2)))
    psi = rng.uniform(0, 2 * math.pi)
    period = int(rng.integers(4, 9))
    phase = int(rng.integers(0, period))
    a_z = rng.uniform(0.0, 1.2)
    alt = rng.uniform(7.0, 13.0)
    start = _free_start(scene, rng, alt, reach=(s_f + s_l) * t_frames * dt)
    f_hat = np.array([math.cos(psi), math.sin(psi)])
    l_hat = np.array([-math.sin(psi), math.cos(psi)])

    positions = [start.copy()]
    velocities = []
    u = start.copy()
    alt_lo, alt_hi = mode.altitude
    for i in range(t_frames):
        side = 1.0 if ((i + phase) // period) % 2 == 0 else -1.0
        vxy = s_f * f_hat + side * s_l * l_hat
        vz = _bounce_vz(u[2], a_z * math.sin(2 * math.pi * i / (2 * period)), dt, alt_lo + 0.2, alt_hi - 0.2)
        v = np.array([vxy[0], vxy[1], vz])
        nxt = u + v * dt
        if not _check_free(scene, nxt):
            # flip the weave side before giving up on this candidate
            v = np.array([*(s_f * f_hat - side * s_l * l_hat), vz])
            nxt = u + v * dt
            if not _check_free(scene, nxt):
                raise _Retry("zigzag blocked")
        velocities.append(v)
        if i < t_frames - 1:
            u = nxt
            positions.append(u.copy())
    return _poses(positions, velocities, dt)


def _corners(rect) -> list[np.ndarray]:
    return [
        np.array([rect.x0, rect.y0]),
        np.array([rect.x1, rect.y0]),
        np.array([rect.x1, rect.y1]),
        np.array([rect.x0, rect.y1]),
    ]


def _waypoint_walk(scene, mode, rng, t_frames, dt, start, waypoints, speed, alt):
    """Constant-speed pursuit of a 2D waypoint chain at fixed altitude."""
    positions = [start.copy()]
    velocities = []
    u = start.copy()
    wp_i = 0
    for i in range(t_frames):
        while wp_i < len(waypoints) and np.linalg.norm(waypoints[wp_i] - u[:2]) <= speed * dt:
            wp_i += 1
        if wp_i >= len(waypoints):
            raise _Retry("waypoint chain exhausted")
        d = waypoints[wp_i] - u[:2]
        d = d / np.linalg.norm(d)
        v = np.array([speed * d[0], speed * d[1], 0.0])
        nxt = u + v * dt
        if not _check_free(scene, nxt):
            raise _Retry("waypoint path blocked")
        velocities.append(v)
        if i < t_frames - 1:
            u = nxt
            positions.append(u.copy())
    return _poses(positions, velocities, dt)


def _gen_wallhug(scene, mode, rng, t_frames, dt):
    if not scene.buildings:
        raise ModeInfeasibleError("WallHug requires at least one building")
    bld = scene.buildings[int(rng.integers(0, len(scene.buildings)))]
    standoff = rng.uniform(1.5, 3.5)
    ring = bld.footprint.inflate(standoff)
    alt = rng.uniform(5.0, min(20.0, bld.height))
    speed = rng.uniform(5.5, 14.5)
    corners = _corners(ring)
    if int(rng.integers(0, 2)):
        corners = corners[::-1]
    k0 = int(rng.integers(0, 4))
    # enough laps to cover the whole flight
    laps = corners[k0:] + corners * (1 + int(speed * t_frames * dt / max(ring.x1 - ring.x0, 1.0)))
    start = np.array([*corners[k0 - 1], alt])
    if not _check_free(scene, start, clearance=0.4):
        raise _Retry("wallhug start occupied")
    return _waypoint_walk(scene, mode, rng, t_frames, dt, start, laps, speed, alt)


def _gen_inspect(scene, mode, rng, t_frames, dt):
    if not scene.buildings:
        raise ModeInfeasibleError("Inspect requires at least one building")
    tall = [b for b in scene.buildings if b.height >= 30.0]
    pool = tall if tall else list(scene.buildings)
    bld = pool[int(rng.integers(0, len(pool)))]
    fp = bld.footprint
    standoff = rng.uniform(2.0, 4.0)
    cx, cy = fp.center
    sides = [
        np.array([fp.x0 - standoff, cy]),
        np.array([fp.x1 + standoff, cy]),
        np.array([cx, fp.y0 - standoff]),
        np.array([cx, fp.y1 + standoff]),
    ]
    xy = sides[int(rng.integers(0, 4))]
    z_lo = 3.0
    z_hi = max(z_lo + 1.0, min(mode.altitude[1] - 0.5, bld.height - 0.5))
    z = rng.uniform(z_lo, z_hi)
    s_v = rng.uniform(1.0, 2.0) * (1 if rng.integers(0, 2) else -1)
    start = np.array([xy[0], xy[1], z])
    if not _check_free(scene, start, clearance=0.4):
        raise _Retry("inspect start occupied")
    positions = [start.copy()]
    velocities = []
    u = start.copy()
    for i in range(t_frames):
        s_v = _bounce_vz(u[2], s_v, dt, z_lo, z_hi)
        v = np.array([0.0, 0.0, s_v])
        velocities.append(v)
        if i < t_frames - 1:
            u = u + v * dt
            positions.append(u.copy())
    return _poses(positions, velocities, dt)


def _gen_sudden_turn(scene, mode, rng, t_frames, dt):
    speed = rng.uniform(8.0, 12.0)
    alt = rng.uniform(8.0, 42.0)
    n_turns = min(int(rng.integers(2, 4)), max(0, t_frames - 4))
    candidates = np.arange(2, t_frames - 1)
    turn_frames = rng.choice(candidates, size=n_turns, replace=False) if n_turns else []
    turns = {
        int(f): math.radians(rng.uniform(60.0, 120.0)) * (1 if rng.integers(0, 2) else -1)
        for f in turn_frames
    }
    psi0 = rng.uniform(0, 2 * math.pi)
    vz = rng.uniform(0.0, 1.5) * (1 if rng.integers(0, 2) else -1)
    start = _free_start(scene, rng, alt, reach=speed * t_frames * dt * 0.6)
    return _walk(scene, start, _TurnAtFrames(psi0, turns), speed, [vz] * t_frames, mode, t_frames, dt)


def _gen_street_patrol(scene, mode, rng, t_frames, dt):
    if not scene.roads:
        raise ModeInfeasibleError("StreetPatrol requires a road grid")
    verticals = sorted({0.5 * (r.x0 + r.x1) for r in scene.roads if r.y1 - r.y0 > r.x1 - r.x0})
    horizontals = sorted({0.5 * (r.y0 + r.y1) for r in scene.roads if r.x1 - r.x0 >= r.y1 - r.y0})
    alt = rng.uniform(8.0, 42.0)
    speed = rng.uniform(8.0, 12.0)
    b = scene.bounds
    # Walk the road graph: alternate valid legs between intersections.
    if verticals and (not horizontals or rng.integers(0, 2)):
        x = float(verticals[int(rng.integers(0, len(verticals)))])
        y = rng.uniform(b.y0 + 10, b.y1 - 10)
        pos = np.array([x, y])
        along = np.array([0.0, 1.0 if rng.integers(0, 2) else -1.0])
    elif horizontals:
        y = float(horizontals[int(rng.integers(0, len(horizontals)))])
        x = rng.uniform(b.x0 + 10, b.x1 - 10)
        pos = np.array([x, y])
        along = np.array([1.0 if rng.integers(0, 2) else -1.0, 0.0])
    else:
        raise ModeInfeasibleError("StreetPatrol requires a road grid")

    need = speed * t_frames * dt + 5.0
    waypoints = []
    p = pos.copy()
    d = along.copy()
    total = 0.0
    for _ in range(12):
        cross = horizontals if d[0] == 0.0 else verticals
        coord = p[1] if d[0] == 0.0 else p[0]
        ahead = [c for c in cross if (c - coord) * (d[1] if d[0] == 0.0 else d[0]) > 1.0]
        ahead.sort(key=lambda c: abs(c - coord))
        lim = (b.y1 - 8 if d[1] > 0 else b.y0 + 8) if d[0] == 0.0 else (b.x1 - 8 if d[0] > 0 else b.x0 + 8)
        if ahead and rng.uniform() < 0.6:
            c = ahead[0]
            q = np.array([p[0], c]) if d[0] == 0.0 else np.array([c, p[1]])
            turn_axis = np.array([1.0, 0.0]) if d[0] == 0.0 else np.array([0.0, 1.0])
            d_new = turn_axis * (1 if rng.integers(0, 2) else -1)
        else:
            q = np.array([p[0], lim]) if d[0] == 0.0 else np.array([lim, p[1]])
            d_new = -d
        total += np.linalg.norm(q - p)
        waypoints.append(q)
        p, d = q, d_new
        if total >= need:
            break
    if total < need:
        raise _Retry("road walk too short")
    start = np.array([pos[0], pos[1], alt])
    return _waypoint_walk(scene, mode, rng, t_frames, dt, start, waypoints, speed, alt)


def _gen_hover(scene, mode, rng, t_frames, dt):
    alt = rng.uniform(12.0, 78.0)
    start = _free_start(scene, rng, alt, reach=2.0)
    positions = [start.copy()]
    velocities = []
    u = start.copy()
    vz = 0.0
    for i in range(t_frames):
        vz = float(np.clip(vz + rng.normal(0.0, 0.15), -0.5, 0.5))
        vz = _bounce_vz(u[2], vz, dt, mode.altitude[0] + 0.2, mode.altitude[1] - 0.2)
        v = np.array([0.0, 0.0, vz])
        velocities.append(v)
        if i < t_frames - 1:
            u = u + v * dt
            positions.append(u.copy())
    return _poses(positions, velocities, dt)


def _gen_cruise(lo_s, hi_s, lo_a, hi_a):
    def gen(scene, mode, rng, t_frames, dt):
        speed = rng.uniform(lo_s, hi_s)
        alt = rng.uniform(lo_a, hi_a)
        psi = rng.uniform(0, 2 * math.pi)
        start = _free_start(scene, rng, alt, reach=speed * t_frames * dt)
        return _walk(scene, start, _HeadingPolicy(psi), speed, [0.0] * t_frames, mode, t_frames, dt)

    return gen


def _gen_orbit(scene, mode, rng, t_frames, dt):
    if not scene.buildings:
        raise ModeInfeasibleError("Orbit requires at least one building")
    bld = scene.buildings[int(rng.integers(0, len(scene.buildings)))]
    cx, cy = bld.footprint.center
    half_diag = 0.5 * math.hypot(bld.footprint.x1 - bld.footprint.x0, bld.footprint.y1 - bld.footprint.y0)
    radius = half_diag + rng.uniform(3.0, 8.0)
    alt = rng.uniform(31.0, 59.0)
    speed = rng.uniform(3.0, 9.5)
    spin = 1.0 if rng.integers(0, 2) else -1.0
    ang0 = rng.uniform(0, 2 * math.pi)
    start = np.array([cx + radius * math.cos(ang0), cy + radius * math.sin(ang0), alt])
    if not _check_free(scene, start, clearance=0.6):
        raise _Retry("orbit start occupied")
    positions = [start.copy()]
    velocities = []
    u = start.copy()
    center = np.array([cx, cy])
    for i in range(t_frames):
        radial = u[:2] - center
        tangent = spin * np.array([-radial[1], radial[0]]) / np.linalg.norm(radial)
        v = np.array([speed * tangent[0], speed * tangent[1], 0.0])
        nxt = u + v * dt
        if not _check_free(scene, nxt, clearance=0.4):
            raise _Retry("orbit blocked")
        velocities.append(v)
        if i < t_frames - 1:
            u = nxt
            positions.append(u.copy())
    return _poses(positions, velocities, dt)


def _gen_scan(scene, mode, rng, t_frames, dt):
    speed = rng.uniform(6.0, 11.5)
    alt = rng.uniform(51.0, 79.0)
    leg = rng.uniform(6.0, 12.0)
    pitch = rng.uniform(3.0, 6.0)
    psi = rng.uniform(0, 2 * math.pi)
    f_hat = np.array([math.cos(psi), math.sin(psi)])
    n_hat = np.array([-math.sin(psi), math.cos(psi)])
    start = _free_start(scene, rng, alt, reach=leg + 3 * pitch + 4.0)
    p0 = start[:2]
    waypoints = []
    p = p0.copy()
    forward = 1.0
    for _ in range(10):
        p = p + forward * leg * f_hat
        waypoints.append(p.copy())
        p = p + pitch * n_hat
        waypoints.append(p.copy())
        forward = -forward
    return _waypoint_walk(scene, mode, rng, t_frames, dt, start, waypoints, speed, alt)


_GENERATORS = {
    "Zigzag": _gen_zigzag,
    "WallHug": _gen_wallhug,
    "Inspect": _gen_inspect,
    "SuddenTurn": _gen_sudden_turn,
    "StreetPatrol": _gen_street_patrol,
    "Hover": _gen_hover,
    "CityCruise": _gen_cruise(8.0, 15.0, 31.0, 59.0),
    "Orbit": _gen_orbit,
    "FastTransit": _gen_cruise(15.0, 25.0, 51.0, 79.0),
    "Scan": _gen_scan,
}
