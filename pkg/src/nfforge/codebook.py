"""Polar-domain near-field codebook and far-field angular companion.

Grid tuples (theta, phi, d) sample azimuth from +x toward +y, zenith from
+z, and radial distance from the BS; the focus point of a tuple is

    p = o_bs + d * [sin(phi) cos(theta), sin(phi) sin(theta), cos(phi)]

and the near-field codeword phase-conjugates the exact per-element distance
to that point.  A tuple maps to a 1-based global index

    k = (k_theta - 1) * N_phi * N_r + (k_phi - 1) * N_r + k_r

which is the row-major order the codebook matrix is built in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .materials import SPEED_OF_LIGHT
from .raytrace import ArrayGeometry


@dataclass(frozen=True)
class PolarGrid:
    """Uniform (endpoint-inclusive) sampling of the dominant coverage region."""

    theta_deg: tuple[float, float] = (-72.0, 72.0)
    phi_deg: tuple[float, float] = (60.0, 150.0)
    dist_m: tuple[float, float] = (20.0, 155.0)
    n_theta: int = 20
    n_phi: int = 20
    n_r: int = 10
    inverse_distance: bool = False  # sample uniformly in 1/d instead of d

    @cached_property
    def theta_values(self) -> np.ndarray:
        return np.linspace(self.theta_deg[0], self.theta_deg[1], self.n_theta)

    @cached_property
    def phi_values(self) -> np.ndarray:
        return np.linspace(self.phi_deg[0], self.phi_deg[1], self.n_phi)

    @cached_property
    def dist_values(self) -> np.ndarray:
        lo, hi = self.dist_m
        if self.inverse_distance:
            return 1.0 / np.linspace(1.0 / lo, 1.0 / hi, self.n_r)
        return np.linspace(lo, hi, self.n_r)

    @property
    def size(self) -> int:
        return self.n_theta * self.n_phi * self.n_r

    def to_dict(self) -> dict:
        return {
            "theta_deg": list(self.theta_deg),
            "phi_deg": list(self.phi_deg),
            "dist_m": list(self.dist_m),
            "n_theta": self.n_theta,
            "n_phi": self.n_phi,
            "n_r": self.n_r,
            "inverse_distance": self.inverse_distance,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PolarGrid":
        return cls(
            theta_deg=tuple(doc["theta_deg"]),
            phi_deg=tuple(doc["phi_deg"]),
            dist_m=tuple(doc["dist_m"]),
            n_theta=doc["n_theta"],
            n_phi=doc["n_phi"],
            n_r=doc["n_r"],
            inverse_distance=doc.get("inverse_distance", False),
        )


def _pairwise_distances(points: np.ndarray, pos: np.ndarray) -> np.ndarray:
    """(N, M) Euclidean distances via the expanded form (one big matmul)."""
    d2 = (
        np.sum(points**2, axis=1)[:, None]
        + np.sum(pos**2, axis=1)[None, :]
        - 2.0 * points @ pos.T
    )
    return np.sqrt(np.clip(d2, 0.0, None))


def direction_unit(theta_deg: float, phi_deg: float) -> np.ndarray:
    th = math.radians(theta_deg)
    ph = math.radians(phi_deg)
    return np.array(
        [math.sin(ph) * math.cos(th), math.sin(ph) * math.sin(th), math.cos(ph)]
    )


def polar_to_cartesian(theta_deg: float, phi_deg: float, dist: float, o_bs: np.ndarray) -> np.ndarray:
    """Focus point of a polar tuple, in global coordinates."""
    if dist <= 0:
        raise ValueError("distance must be positive")
    return np.asarray(o_bs, dtype=float) + dist * direction_unit(theta_deg, phi_deg)


def near_field_codeword(p_cw: np.ndarray, array: ArrayGeometry, f_c: float) -> np.ndarray:
    """Unit-norm codeword focusing at ``p_cw``: entries (1/sqrt(M)) e^{-j k d_m}."""
    pos = array.element_positions
    d = np.linalg.norm(np.asarray(p_cw, dtype=float) - pos, axis=1)
    if d.min() < 1e-9:
        raise ValueError("focus point coincides with an array element")
    m = pos.shape[0]
    return np.exp(-2j * math.pi * f_c * d / SPEED_OF_LIGHT) / math.sqrt(m)


def far_field_codeword(theta_deg: float, phi_deg: float, array: ArrayGeometry, f_c: float) -> np.ndarray:
    """Planar-wave steering vector for direction (theta, phi).

    Sign convention matches the d -> infinity limit of the near-field
    codeword after removing the common bulk phase, i.e. the matched filter
    for a plane wave arriving from that direction.
    """
    u = direction_unit(theta_deg, phi_deg)
    pos = array.element_positions - np.asarray(array.center, dtype=float)
    m = pos.shape[0]
    return np.exp(2j * math.pi * f_c * (pos @ u) / SPEED_OF_LIGHT) / math.sqrt(m)


def global_index(tup: tuple[int, int, int], grid: PolarGrid) -> int:
    """1-based global index of a 1-based (k_theta, k_phi, k_r) tuple."""
    k_theta, k_phi, k_r = tup
    if not (1 <= k_theta <= grid.n_theta and 1 <= k_phi <= grid.n_phi and 1 <= k_r <= grid.n_r):
        raise IndexError(f"tuple {tup} outside grid {grid.n_theta}x{grid.n_phi}x{grid.n_r}")
    return (k_theta - 1) * grid.n_phi * grid.n_r + (k_phi - 1) * grid.n_r + k_r


def decompose_index(k: int, grid: PolarGrid) -> tuple[int, int, int]:
    """Exact inverse of :func:`global_index`."""
    if not 1 <= k <= grid.size:
        raise IndexError(f"global index {k} outside [1, {grid.size}]")
    k0 = k - 1
    k_theta = k0 // (grid.n_phi * grid.n_r)
    rem = k0 % (grid.n_phi * grid.n_r)
    k_phi = rem // grid.n_r
    k_r = rem % grid.n_r
    return (k_theta + 1, k_phi + 1, k_r + 1)


class Codebook:
    """Materialized near-field codebook over a :class:`PolarGrid`.

    Column ``k-1`` of :attr:`matrix` is the codeword with global index ``k``.
    """

    def __init__(self, grid: PolarGrid, array: ArrayGeometry, f_c: float, o_bs: np.ndarray):
        self.grid = grid
        self.array = array
        self.f_c = f_c
        self.o_bs = np.asarray(o_bs, dtype=float)

        tuples = []
        points = np.zeros((grid.size, 3))
        i = 0
        for kt in range(1, grid.n_theta + 1):
            for kp in range(1, grid.n_phi + 1):
                for kr in range(1, grid.n_r + 1):
                    tuples.append((kt, kp, kr))
                    points[i] = polar_to_cartesian(
                        grid.theta_values[kt - 1],
                        grid.phi_values[kp - 1],
                        grid.dist_values[kr - 1],
                        self.o_bs,
                    )
                    i += 1
        self.tuples: list[tuple[int, int, int]] = tuples
        self.focus_points = points
        d = _pairwise_distances(points, array.element_positions)  # (N, M)
        self.matrix = (
            np.exp(-2j * math.pi * f_c * d / SPEED_OF_LIGHT) / math.sqrt(array.n_elements)
        ).T  # (M, N)

    @property
    def size(self) -> int:
        return self.grid.size

    def codeword(self, k: int) -> np.ndarray:
        if not 1 <= k <= self.size:
            raise IndexError(f"global index {k} outside [1, {self.size}]")
        return self.matrix[:, k - 1]

    @cached_property
    def far_field(self) -> tuple[np.ndarray, list[tuple[int, int]]]:
        """Angular companion codebook: (M, N_theta*N_phi) matrix + (k_theta, k_phi) tuples."""
        cols = []
        tuples = []
        for kt in range(1, self.grid.n_theta + 1):
            for kp in range(1, self.grid.n_phi + 1):
                cols.append(
                    far_field_codeword(
                        self.grid.theta_values[kt - 1],
                        self.grid.phi_values[kp - 1],
                        self.array,
                        self.f_c,
                    )
                )
                tuples.append((kt, kp))
        return np.stack(cols, axis=1), tuples

    def distance_ring(self, k_theta: int, k_phi: int) -> np.ndarray:
        """Global indices (1-based) of all distance samples at one angle."""
        base = (k_theta - 1) * self.grid.n_phi * self.grid.n_r + (k_phi - 1) * self.grid.n_r
        return np.arange(base + 1, base + self.grid.n_r + 1)
