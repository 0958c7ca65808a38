"""Exact image-method ray tracing between every BS antenna and the UAV.

Propagation paths are line-of-sight plus specular reflections up to a
configurable depth (default 3) off building faces and the ground plane.
Reflection points come from mirroring the target across candidate face
sequences, which is exact for planar reflectors; the mirrored images depend
only on the target, so each sequence is unfolded once and the per-antenna
work (plane crossing, face membership, blockage) is vectorized over the
whole array.  There is no planar-wave shortcut anywhere: every antenna gets
its own geometric distances, which is what makes the assembled channels
carry a spherical wavefront.

Path gains are ``lambda / (4 pi d)`` free-space amplitudes times the product
of polarization-resolved Fresnel reflection coefficients; the propagation
phase ``exp(-j 2 pi f d / c)`` is applied later when channels are assembled
on the subcarrier grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import NoPathsError
from .materials import SPEED_OF_LIGHT, Material, get_material
from .scene import GROUND_MATERIAL, ROAD_MATERIAL, Scene, segments_blocked

_FRONT_EPS = 1e-9
_MIN_SEGMENT = 1e-6  # meters
_AXIS_UNIT = np.eye(3)


# ---------------------------------------------------------------------------
# Array geometry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform planar array in the yz-plane, broadside along +x.

    Elements are ordered row-major over (m_y, m_z): index ``i_y * m_z + i_z``.
    """

    m_y: int
    m_z: int
    spacing: float
    center: tuple[float, float, float]

    def __post_init__(self):
        iy = np.arange(self.m_y) - (self.m_y - 1) / 2.0
        iz = np.arange(self.m_z) - (self.m_z - 1) / 2.0
        dy, dz = np.meshgrid(iy, iz, indexing="ij")
        pos = np.zeros((self.m_y * self.m_z, 3))
        pos[:, 1] = dy.ravel() * self.spacing
        pos[:, 2] = dz.ravel() * self.spacing
        pos += np.asarray(self.center, dtype=float)
        object.__setattr__(self, "_positions", pos)

    @classmethod
    def half_wavelength(cls, m_y: int, m_z: int, f_c: float, center) -> "ArrayGeometry":
        lam = SPEED_OF_LIGHT / f_c
        return cls(m_y, m_z, lam / 2.0, tuple(float(v) for v in center))

    @property
    def n_elements(self) -> int:
        return self.m_y * self.m_z

    @property
    def element_positions(self) -> np.ndarray:
        """(M, 3) element coordinates."""
        return self._positions

    @property
    def reference_index(self) -> int:
        """Element nearest the array center, used for per-frame statistics."""
        return (self.m_y // 2) * self.m_z + self.m_z // 2


# ---------------------------------------------------------------------------
# Fresnel reflection
# ---------------------------------------------------------------------------

def _fresnel_arrays(eta: np.ndarray, cos_theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """TE and TM reflection coefficients for complex permittivity ``eta``."""
    sin2 = 1.0 - cos_theta**2
    root = np.sqrt(eta - sin2)
    gamma_te = (cos_theta - root) / (cos_theta + root)
    gamma_tm = (eta * cos_theta - root) / (eta * cos_theta + root)
    return gamma_te, gamma_tm


def fresnel_coefficient(material: Material, f_hz: float, incidence_angle: float, polarization: str) -> complex:
    """Fresnel reflection coefficient of a planar material interface.

    ``incidence_angle`` is measured from the surface normal in radians.
    Supported band is the upper midband, 6-24 GHz.
    """
    if not 0.0 <= incidence_angle < math.pi / 2.0:
        raise ValueError("incidence angle must lie in [0, pi/2)")
    if not 6e9 <= f_hz <= 24e9:
        raise ValueError("frequency outside the supported 6-24 GHz band")
    eta = material.complex_permittivity(f_hz)
    te, tm = _fresnel_arrays(np.asarray(eta), np.asarray(math.cos(incidence_angle)))
    if polarization == "TE":
        return complex(te)
    if polarization == "TM":
        return complex(tm)
    raise ValueError(f"polarization must be 'TE' or 'TM', got {polarization!r}")


# ---------------------------------------------------------------------------
# Faces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Face:
    """Axis-aligned planar rectangle: plane ``coord[axis] == c``.

    ``(u_axis, v_axis)`` are the two in-plane coordinate axes in ascending
    order; the outward normal is ``sign * e_axis``.  ``material`` is None
    for the ground face, whose material is looked up per reflection point
    (roads are concrete patches on the ground plane).
    """

    axis: int
    sign: float
    c: float
    u_lo: float
    u_hi: float
    v_lo: float
    v_hi: float
    building: int  # -1 for ground
    material: Optional[Material]

    @property
    def u_axis(self) -> int:
        return [1, 0, 0][self.axis]

    @property
    def v_axis(self) -> int:
        return [2, 2, 1][self.axis]

    @property
    def normal(self) -> np.ndarray:
        return self.sign * _AXIS_UNIT[self.axis]

    def signed_distance(self, p: np.ndarray) -> np.ndarray:
        return self.sign * (np.asarray(p)[..., self.axis] - self.c)

    def contains_inplane(self, p: np.ndarray) -> np.ndarray:
        u = np.asarray(p)[..., self.u_axis]
        v = np.asarray(p)[..., self.v_axis]
        return (u >= self.u_lo) & (u <= self.u_hi) & (v >= self.v_lo) & (v <= self.v_hi)


@dataclass(frozen=True)
class FaceSet:
    """Reflector faces plus blocking boxes for one scene (cache-friendly)."""

    faces: tuple[Face, ...]
    boxes: np.ndarray
    visible: np.ndarray  # (F, F) bool adjacency of possible consecutive bounces

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def sequences(self, max_depth: int) -> list[tuple[int, ...]]:
        """Candidate bounce sequences (cached: they depend only on geometry)."""
        cache = getattr(self, "_seq_cache", None)
        if cache is None:
            cache = {}
            object.__setattr__(self, "_seq_cache", cache)
        if max_depth not in cache:
            cache[max_depth] = _sequences(self, max_depth)
        return cache[max_depth]

    def sequence_arrays(self, max_depth: int) -> dict[int, np.ndarray]:
        """Sequences grouped by depth as (P, depth) index arrays (cached)."""
        cache = getattr(self, "_seqarr_cache", None)
        if cache is None:
            cache = {}
            object.__setattr__(self, "_seqarr_cache", cache)
        if max_depth not in cache:
            by_depth: dict[int, list] = {}
            for seq in self.sequences(max_depth):
                by_depth.setdefault(len(seq), []).append(seq)
            cache[max_depth] = {
                d: np.array(seqs, dtype=int) for d, seqs in sorted(by_depth.items())
            }
        return cache[max_depth]

    @property
    def plane_axis(self) -> np.ndarray:
        return self._ensure_plane_arrays()[0]

    @property
    def plane_c(self) -> np.ndarray:
        return self._ensure_plane_arrays()[1]

    @property
    def plane_sign(self) -> np.ndarray:
        return self._ensure_plane_arrays()[2]

    @property
    def plane_rects(self) -> tuple[np.ndarray, ...]:
        """(u_axis, v_axis, u_lo, u_hi, v_lo, v_hi) arrays over faces."""
        return self._ensure_plane_arrays()[3:]

    def _ensure_plane_arrays(self):
        arrays = getattr(self, "_plane_arrays", None)
        if arrays is None:
            arrays = (
                np.array([f.axis for f in self.faces], dtype=int),
                np.array([f.c for f in self.faces]),
                np.array([f.sign for f in self.faces]),
                np.array([f.u_axis for f in self.faces], dtype=int),
                np.array([f.v_axis for f in self.faces], dtype=int),
                np.array([f.u_lo for f in self.faces]),
                np.array([f.u_hi for f in self.faces]),
                np.array([f.v_lo for f in self.faces]),
                np.array([f.v_hi for f in self.faces]),
            )
            object.__setattr__(self, "_plane_arrays", arrays)
        return arrays


def _mutually_visible(f: Face, g: Face) -> bool:
    if f.building >= 0 and f.building == g.building:
        return False  # convex solid: no self-pair
    # Some point of g must lie strictly on f's front side, and vice versa.
    def front_possible(a: Face, b: Face) -> bool:
        if b.axis == a.axis:
            return a.sign * (b.c - a.c) > 0
        # b spans an interval along a's axis
        if a.axis == b.u_axis:
            lo, hi = b.u_lo, b.u_hi
        else:
            lo, hi = b.v_lo, b.v_hi
        return (hi - a.c > 0) if a.sign > 0 else (lo - a.c < 0)

    return front_possible(f, g) and front_possible(g, f)


def build_faces(scene: Scene, include_ground: bool = True) -> FaceSet:
    """Enumerate reflector faces and precompute their visibility graph."""
    faces: list[Face] = []
    if include_ground:
        b = scene.bounds
        faces.append(Face(2, 1.0, 0.0, b.x0, b.x1, b.y0, b.y1, -1, None))
    for i, bld in enumerate(scene.buildings):
        fp, h = bld.footprint, bld.height
        mat = bld.material
        faces.append(Face(0, -1.0, fp.x0, fp.y0, fp.y1, 0.0, h, i, mat))
        faces.append(Face(0, 1.0, fp.x1, fp.y0, fp.y1, 0.0, h, i, mat))
        faces.append(Face(1, -1.0, fp.y0, fp.x0, fp.x1, 0.0, h, i, mat))
        faces.append(Face(1, 1.0, fp.y1, fp.x0, fp.x1, 0.0, h, i, mat))
        faces.append(Face(2, 1.0, h, fp.x0, fp.x1, fp.y0, fp.y1, i, mat))
    n = len(faces)
    visible = np.zeros((n, n), dtype=bool)
    for i in range(n):
        for j in range(n):
            if i != j:
                visible[i, j] = _mutually_visible(faces[i], faces[j])
    return FaceSet(tuple(faces), scene.boxes, visible)


# ---------------------------------------------------------------------------
# Paths
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Path:
    """One propagation path ending at one antenna."""

    interaction_points: tuple[tuple[float, float, float], ...]
    surfaces: tuple[tuple[tuple[float, float, float], Material], ...]
    length: float
    gain: complex
    is_los: bool

    @property
    def depth(self) -> int:
        return len(self.interaction_points)

    @property
    def delay(self) -> float:
        return self.length / SPEED_OF_LIGHT


@dataclass(frozen=True)
class PathSet:
    """Per-antenna path lists: entry ``m`` holds the paths ending at antenna ``m``."""

    per_antenna: tuple[tuple[Path, ...], ...]

    def __len__(self) -> int:
        return len(self.per_antenna)

    def __getitem__(self, m: int) -> tuple[Path, ...]:
        return self.per_antenna[m]


def _vertical_pol(d: np.ndarray) -> np.ndarray:
    """Vertical polarization unit vector transverse to propagation dir (M, 3)."""
    z = np.zeros_like(d)
    z[..., 2] = 1.0
    w = z - d * d[..., 2:3]
    n = np.linalg.norm(w, axis=-1, keepdims=True)
    # Degenerate vertical propagation: fall back to the x axis.
    x = np.zeros_like(d)
    x[..., 0] = 1.0
    wx = x - d * d[..., 0:1]
    nx = np.linalg.norm(wx, axis=-1, keepdims=True)
    use_x = n < 1e-9
    w = np.where(use_x, wx, w)
    n = np.where(use_x, nx, n)
    return w / n


def _ground_eta(face: Face, scene: Scene, points: np.ndarray, f_c: float) -> np.ndarray:
    """Complex permittivity per reflection point (roads are concrete)."""
    if face.material is not None:
        return np.full(points.shape[0], face.material.complex_permittivity(f_c))
    ground = get_material(GROUND_MATERIAL).complex_permittivity(f_c)
    road = get_material(ROAD_MATERIAL).complex_permittivity(f_c)
    eta = np.full(points.shape[0], ground)
    for r in scene.roads:
        inside = (
            (points[:, 0] >= r.x0) & (points[:, 0] <= r.x1)
            & (points[:, 1] >= r.y0) & (points[:, 1] <= r.y1)
        )
        eta[inside] = road
    return eta


def _material_at(face: Face, scene: Scene, point: np.ndarray) -> Material:
    if face.material is not None:
        return face.material
    for r in scene.roads:
        if r.contains(point[0], point[1]):
            return get_material(ROAD_MATERIAL)
    return get_material(GROUND_MATERIAL)


def _sequences(faceset: FaceSet, max_depth: int):
    """All face-index sequences of length 1..max_depth along the visibility graph."""
    n = faceset.n_faces
    out: list[tuple[int, ...]] = []
    stack: list[tuple[int, ...]] = [(i,) for i in range(n)]
    while stack:
        seq = stack.pop()
        out.append(seq)
        if len(seq) < max_depth:
            last = seq[-1]
            for j in range(n):
                if faceset.visible[last, j]:
                    stack.append(seq + (j,))
    return out


#: Default RMS surface roughness of the terrain, meters.  At upper-midband
#: wavelengths (~4 cm) natural ground is far beyond the Rayleigh smoothness
#: limit, so the specular ground return is attenuated by the standard
#: factor exp(-2 (k sigma_h cos(theta))^2); building facades stay smooth.
GROUND_ROUGHNESS_M = 0.006


def trace_paths(
    scene: Scene,
    array: ArrayGeometry,
    target: np.ndarray,
    f_c: float,
    max_depth: int = 3,
    *,
    scalar_tm_approx: bool = False,
    ground_roughness_m: float = GROUND_ROUGHNESS_M,
    faces: Optional[FaceSet] = None,
) -> PathSet:
    """All LoS + specular paths between each antenna and ``target``.

    ``faces`` may be passed to reuse a precomputed :func:`build_faces` result
    across the frames of a trajectory (the face set only depends on the
    scene).  Paths per antenna are sorted by (depth, length).
    """
    target = np.asarray(target, dtype=float)
    if target[2] <= 0.0 or not scene.bounds.contains(target[0], target[1]):
        raise ValueError("target must be above ground and inside the scene bounds")
    if scene.point_in_building(target):
        raise ValueError("target lies inside a building")
    fs = faces if faces is not None else build_faces(scene)
    pos = array.element_positions
    m_count = pos.shape[0]
    lam = SPEED_OF_LIGHT / f_c
    collected: list[list[Path]] = [[] for _ in range(m_count)]

    # Line of sight.
    clear = ~segments_blocked(fs.boxes, pos, np.broadcast_to(target, pos.shape))
    d_los = np.linalg.norm(target - pos, axis=1)
    for m in np.nonzero(clear)[0]:
        collected[m].append(Path((), (), float(d_los[m]), complex(lam / (4.0 * math.pi * d_los[m])), True))

    corners = pos[[0, array.m_z - 1, (array.m_y - 1) * array.m_z, array.n_elements - 1]]
    for seq, images in _candidate_sequences(fs, target, max_depth, corners):
        _trace_sequence(
            scene, fs, seq, images, pos, target, f_c, lam,
            scalar_tm_approx, ground_roughness_m, collected,
        )

    per_antenna = tuple(
        tuple(sorted(paths, key=lambda p: (p.depth, p.length))) for paths in collected
    )
    return PathSet(per_antenna)


def _candidate_sequences(fs: FaceSet, target: np.ndarray, max_depth: int, corners: np.ndarray):
    """Directionally feasible sequences with their target-image chains.

    For a sequence (f_1 .. f_k) the aim point while crossing f_i is the
    image J_i = mirror(J_{i+1}, f_i) with J_{k+1} = target.  The image
    chains, the antenna-independent front-side prunes (target in front of
    f_k, J_{i+1} in front of f_i), and a first-bounce hull prune are all
    evaluated for a whole depth's sequences in single vectorized passes.

    The hull prune is exact: the stage-1 crossing point is a projective map
    of the antenna position with positive denominators, so the crossings of
    the array's corner elements bound every element's crossing; if all four
    fall strictly on one outer side of the face rectangle (or no corner is
    in front of the plane) no antenna can produce the bounce.
    """
    axis = fs.plane_axis
    c = fs.plane_c
    sign = fs.plane_sign
    u_axis, v_axis, u_lo, u_hi, v_lo, v_hi = fs.plane_rects
    out = []
    for depth, seqs in fs.sequence_arrays(max_depth).items():
        n = seqs.shape[0]
        rows = np.arange(n)
        keep = np.ones(n, dtype=bool)
        images = np.zeros((n, depth, 3))
        nxt = np.broadcast_to(target, (n, 3)).copy()
        for i in range(depth - 1, -1, -1):
            f = seqs[:, i]
            # prune: the point the ray leaves toward must be in front of f_i
            keep &= sign[f] * (nxt[rows, axis[f]] - c[f]) > _FRONT_EPS
            img = nxt.copy()
            img[rows, axis[f]] = 2.0 * c[f] - nxt[rows, axis[f]]
            images[:, i, :] = img
            nxt = img

        f1 = seqs[:, 0]
        j1 = images[:, 0, :]
        a_ax = corners.T[axis[f1]]  # (n, 4)
        front = sign[f1][:, None] * (a_ax - c[f1][:, None]) > _FRONT_EPS
        keep &= front.any(axis=1)
        j1_ax = j1[rows, axis[f1]]
        denom = j1_ax[:, None] - a_ax
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (c[f1][:, None] - a_ax) / denom
        crossing = front & (t > 0.0) & (t < 1.0)
        all_cross = crossing.all(axis=1)
        for coord_axis, lo, hi in ((u_axis, u_lo, u_hi), (v_axis, v_lo, v_hi)):
            a_u = corners.T[coord_axis[f1]]
            r_u = a_u + t * (j1[rows, coord_axis[f1]][:, None] - a_u)
            outside = (r_u < lo[f1][:, None]).all(axis=1) | (r_u > hi[f1][:, None]).all(axis=1)
            keep &= ~(all_cross & outside)

        for r in np.nonzero(keep)[0]:
            out.append((tuple(int(v) for v in seqs[r]), images[r]))
    return out


def _trace_sequence(
    scene: Scene,
    fs: FaceSet,
    seq: Sequence[int],
    images: np.ndarray,
    pos: np.ndarray,
    target: np.ndarray,
    f_c: float,
    lam: float,
    scalar_tm_approx: bool,
    ground_roughness_m: float,
    collected: list[list[Path]],
) -> None:
    faces = [fs.faces[i] for i in seq]
    k = len(faces)
    m_count = pos.shape[0]
    cur = pos
    valid = np.ones(m_count, dtype=bool)
    points = np.zeros((m_count, k, 3))
    for i, face in enumerate(faces):
        img = images[i]
        s_cur = face.signed_distance(cur)
        denom = img[face.axis] - cur[:, face.axis]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (face.c - cur[:, face.axis]) / denom
        seg = img - cur
        seg_len = np.linalg.norm(seg, axis=1)
        valid &= (s_cur > _FRONT_EPS) & np.isfinite(t) & (t > 0.0) & (t < 1.0)
        t = np.where(valid, t, 0.5)  # sanitized; invalid rows are dropped anyway
        valid &= t * seg_len > _MIN_SEGMENT
        r = cur + t[:, None] * seg
        valid &= face.contains_inplane(r)
        if not valid.any():
            return
        idx = np.nonzero(valid)[0]
        blocked = segments_blocked(fs.boxes, cur[idx], r[idx])
        valid[idx[blocked]] = False
        if not valid.any():
            return
        points[:, i, :] = r
        cur = r

    idx = np.nonzero(valid)[0]
    blocked = segments_blocked(fs.boxes, cur[idx], np.broadcast_to(target, (idx.size, 3)))
    valid[idx[blocked]] = False
    if not valid.any():
        return

    idx = np.nonzero(valid)[0]
    # Unfolding property: total length equals the distance to the deepest image.
    lengths = np.linalg.norm(images[0] - pos[idx], axis=1)
    gains = _path_gains(
        scene, faces, pos[idx], points[idx], target, f_c, scalar_tm_approx, ground_roughness_m
    )
    amp = lam / (4.0 * math.pi * lengths)
    surfaces_proto = [
        (tuple(float(v) for v in f.normal), None) for f in faces
    ]
    for row, m in enumerate(idx):
        pts = tuple(tuple(float(v) for v in points[m, i]) for i in range(k))
        surfaces = tuple(
            (surfaces_proto[i][0], _material_at(faces[i], scene, points[m, i]))
            for i in range(k)
        )
        collected[m].append(
            Path(pts, surfaces, float(lengths[row]), complex(amp[row] * gains[row]), False)
        )


def _path_gains(
    scene: Scene,
    faces: Sequence[Face],
    pos: np.ndarray,
    points: np.ndarray,
    target: np.ndarray,
    f_c: float,
    scalar_tm_approx: bool,
    ground_roughness_m: float,
) -> np.ndarray:
    """Product of reflection responses per antenna (complex, no 1/d factor).

    The launch field is vertically polarized and unit amplitude; every bounce
    splits it into TE/TM relative to the local plane of incidence, applies
    the Fresnel coefficients, and recombines; the receive side projects onto
    the vertical polarization of the arrival direction.  With
    ``scalar_tm_approx`` the dyadic handling collapses to a product of TM
    coefficients (cheaper, less faithful at oblique bounces).

    Terrain bounces additionally carry the Rayleigh roughness factor
    rho = exp(-2 (k sigma_h cos theta)^2), which damps the coherent specular
    component of a surface with RMS height deviation sigma_h.
    """
    n_rows = pos.shape[0]
    k = points.shape[1]
    wavenumber = 2.0 * math.pi * f_c / SPEED_OF_LIGHT

    vertices = [pos] + [points[:, i, :] for i in range(k)] + [np.broadcast_to(target, (n_rows, 3))]
    dirs = []
    for i in range(k + 1):
        seg = vertices[i + 1] - vertices[i]
        dirs.append(seg / np.linalg.norm(seg, axis=1, keepdims=True))

    def roughness(face: Face, cos_t: np.ndarray) -> np.ndarray:
        if face.building >= 0 or ground_roughness_m <= 0.0:
            return np.ones_like(cos_t)
        return np.exp(-2.0 * (wavenumber * ground_roughness_m * cos_t) ** 2)

    if scalar_tm_approx:
        total = np.ones(n_rows, dtype=complex)
        for i, face in enumerate(faces):
            n = face.normal
            cos_t = np.clip(np.abs(dirs[i] @ n), 0.0, 1.0)
            eta = _ground_eta(face, scene, points[:, i, :], f_c)
            _, tm = _fresnel_arrays(eta, cos_t)
            total *= tm * roughness(face, cos_t)
        return total

    e = _vertical_pol(dirs[0]).astype(complex)
    for i, face in enumerate(faces):
        n = face.normal
        d_in = dirs[i]
        d_out = dirs[i + 1]
        cos_t = np.clip(np.abs(d_in @ n), 0.0, 1.0)
        eta = _ground_eta(face, scene, points[:, i, :], f_c)
        gamma_te, gamma_tm = _fresnel_arrays(eta, cos_t)
        rho = roughness(face, cos_t)
        gamma_te = gamma_te * rho
        gamma_tm = gamma_tm * rho

        s = np.cross(d_in, np.broadcast_to(n, d_in.shape))
        s_norm = np.linalg.norm(s, axis=1, keepdims=True)
        degenerate = s_norm[:, 0] < 1e-9
        if degenerate.any():
            # Normal incidence: any transverse axis works, TE/TM coincide.
            fallback = np.cross(d_in[degenerate], _vertical_pol(d_in[degenerate]))
            s[degenerate] = fallback
            s_norm = np.linalg.norm(s, axis=1, keepdims=True)
        s = s / s_norm
        p_in = np.cross(s, d_in)
        p_out = np.cross(s, d_out)

        a_s = np.einsum("ij,ij->i", e, s.astype(complex))
        a_p = np.einsum("ij,ij->i", e, p_in.astype(complex))
        e = gamma_te[:, None] * a_s[:, None] * s + gamma_tm[:, None] * a_p[:, None] * p_out

    v_rx = _vertical_pol(dirs[-1])
    return np.einsum("ij,ij->i", e, v_rx.astype(complex))


# ---------------------------------------------------------------------------
# Delay statistics
# ---------------------------------------------------------------------------

def rms_delay_spread(paths: Sequence[Path]) -> float:
    """Power-weighted RMS spread of path delays, in seconds."""
    if len(paths) == 0:
        raise NoPathsError("rms delay spread requires at least one path")
    delays = np.array([p.delay for p in paths])
    weights = np.array([abs(p.gain) ** 2 for p in paths])
    total = weights.sum()
    mean = (weights * delays).sum() / total
    return float(np.sqrt((weights * (delays - mean) ** 2).sum() / total))


def paths_to_dict(pathset: PathSet, antenna: int) -> list[dict]:
    """Debug/plot dump of one antenna's paths as plain structures."""
    out = []
    for p in pathset[antenna]:
        out.append(
            {
                "is_los": p.is_los,
                "length_m": p.length,
                "gain_abs": abs(p.gain),
                "gain_phase_rad": math.atan2(p.gain.imag, p.gain.real),
                "points": [list(pt) for pt in p.interaction_points],
                "materials": [m.name for _, m in p.surfaces],
            }
        )
    return out
