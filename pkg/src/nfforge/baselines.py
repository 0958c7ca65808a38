"""Evaluation baselines: polar-domain OMP localization and beam training.

Localization runs orthogonal matching pursuit over a fine polar dictionary
of unit-norm focusing vectors (70 x 60 x 60 by default); the first selected
atom's grid point is the position estimate.  Beam training compares three
sweep strategies against the same channel: exhaustive near-field search,
a far-field angular sweep, and the two-stage variant that fixes the angle
with the far-field sweep and then refines distance on the near-field rings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .codebook import Codebook, PolarGrid, _pairwise_distances, polar_to_cartesian
from .errors import DegenerateChannelError
from .labels import achievable_rate
from .materials import SPEED_OF_LIGHT
from .raytrace import ArrayGeometry
from .trajectory import HARD_MODES

STRATEGIES = ("exhaustive", "far_field", "two_stage")


# ---------------------------------------------------------------------------
# OMP localization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LocalizationGrid:
    """Fine polar dictionary; atoms are generated per azimuth slab to keep memory flat."""

    grid: PolarGrid
    array: ArrayGeometry
    f_c: float
    o_bs: np.ndarray

    @classmethod
    def default(cls, array: ArrayGeometry, f_c: float, o_bs) -> "LocalizationGrid":
        grid = PolarGrid(n_theta=70, n_phi=60, n_r=60)
        return cls(grid, array, f_c, np.asarray(o_bs, dtype=float))

    @property
    def size(self) -> int:
        return self.grid.size

    def slab_points(self, k_theta: int) -> np.ndarray:
        """(N_phi*N_r, 3) focus points of one azimuth sample (1-based, cached)."""
        cache = getattr(self, "_slab_points", None)
        if cache is None:
            cache = {}
            object.__setattr__(self, "_slab_points", cache)
        if k_theta not in cache:
            g = self.grid
            th = math.radians(g.theta_values[k_theta - 1])
            ph = np.radians(g.phi_values)
            u = np.stack(
                [np.sin(ph) * math.cos(th), np.sin(ph) * math.sin(th), np.cos(ph)], axis=1
            )  # (N_phi, 3)
            pts = self.o_bs[None, None, :] + g.dist_values[None, :, None] * u[:, None, :]
            cache[k_theta] = pts.reshape(-1, 3)  # (kp, kr) row-major
        return cache[k_theta]

    def slab_matrix(self, k_theta: int) -> np.ndarray:
        """(M, N_phi*N_r) unit-norm atoms for one azimuth sample (1-based)."""
        pos = self.array.element_positions
        d = _pairwise_distances(self.slab_points(k_theta), pos)  # (N, M)
        return (np.exp(-2j * math.pi * self.f_c * d / SPEED_OF_LIGHT) / math.sqrt(pos.shape[0])).T

    def point_of(self, k: int) -> np.ndarray:
        kt, kp, kr = self.tuple_of(k)
        g = self.grid
        return polar_to_cartesian(
            g.theta_values[kt - 1], g.phi_values[kp - 1], g.dist_values[kr - 1], self.o_bs
        )

    def tuple_of(self, k: int) -> tuple[int, int, int]:
        g = self.grid
        k0 = k - 1
        return (
            k0 // (g.n_phi * g.n_r) + 1,
            (k0 % (g.n_phi * g.n_r)) // g.n_r + 1,
            k0 % g.n_r + 1,
        )

    def correlate(self, vectors: np.ndarray) -> np.ndarray:
        """argmax_k |atom_k^H v| per column of ``vectors`` (M, F) -> (F,) 1-based."""
        v = vectors
        best = np.zeros(v.shape[1])
        best_k = np.ones(v.shape[1], dtype=int)
        g = self.grid
        slab_size = g.n_phi * g.n_r
        for kt in range(1, g.n_theta + 1):
            corr = np.abs(self.slab_matrix(kt).conj().T @ v)  # (slab, F)
            j = corr.argmax(axis=0)
            val = corr[j, np.arange(v.shape[1])]
            better = val > best
            best = np.where(better, val, best)
            best_k = np.where(better, (kt - 1) * slab_size + j + 1, best_k)
        return best_k


@dataclass(frozen=True)
class LocalizationResult:
    position_est: np.ndarray
    err_3d: float
    err_dist: float
    err_az_deg: float
    err_zen_deg: float
    selected_tuple: tuple[int, int, int]


def _bs_polar(p: np.ndarray, o_bs: np.ndarray) -> tuple[float, float, float]:
    q = np.asarray(p, dtype=float) - o_bs
    d = float(np.linalg.norm(q))
    zen = math.degrees(math.acos(max(-1.0, min(1.0, q[2] / d))))
    az = math.degrees(math.atan2(q[1], q[0]))
    return d, az, zen


def _wrap_angle_deg(a: float) -> float:
    a = abs(a) % 360.0
    return 360.0 - a if a > 180.0 else a


def _result_for_atom(grid: LocalizationGrid, k: int, true_position: np.ndarray) -> LocalizationResult:
    est = grid.point_of(k)
    d_e, az_e, zen_e = _bs_polar(est, grid.o_bs)
    d_t, az_t, zen_t = _bs_polar(true_position, grid.o_bs)
    return LocalizationResult(
        position_est=est,
        err_3d=float(np.linalg.norm(est - np.asarray(true_position, dtype=float))),
        err_dist=abs(d_e - d_t),
        err_az_deg=_wrap_angle_deg(az_e - az_t),
        err_zen_deg=abs(zen_e - zen_t),
        selected_tuple=grid.tuple_of(k),
    )


def omp_localize(
    h: np.ndarray,
    grid: LocalizationGrid,
    true_position: np.ndarray,
    iterations: int = 1,
) -> LocalizationResult:
    """OMP over the polar dictionary; the first atom fixes the estimate."""
    h = np.asarray(h, dtype=complex)
    if not np.any(h):
        raise DegenerateChannelError("cannot localize an all-zero channel")
    residual = h.copy()
    selected: list[int] = []
    atoms: list[np.ndarray] = []
    for _ in range(max(1, iterations)):
        k = int(grid.correlate(residual[:, None])[0])
        if k in selected:
            break
        selected.append(k)
        kt = grid.tuple_of(k)[0]
        slab = grid.slab_matrix(kt)
        atoms.append(slab[:, (k - 1) % (grid.grid.n_phi * grid.grid.n_r)])
        a_mat = np.stack(atoms, axis=1)
        coef, *_ = np.linalg.lstsq(a_mat, h, rcond=None)
        residual = h - a_mat @ coef
    return _result_for_atom(grid, selected[0], true_position)


def localize_batch(
    vectors: np.ndarray, grid: LocalizationGrid, true_positions: Sequence[np.ndarray]
) -> list[LocalizationResult]:
    """Single-iteration localization of many frames sharing one slab sweep.

    Equivalent to ``omp_localize(..., iterations=1)`` per column of
    ``vectors`` (M, F), but each dictionary slab is built once for the whole
    batch instead of once per frame.
    """
    vectors = np.asarray(vectors, dtype=complex)
    if vectors.ndim != 2 or vectors.shape[1] != len(true_positions):
        raise ValueError("vectors must be (M, F) with one true position per column")
    if not np.all(np.any(vectors, axis=0)):
        raise DegenerateChannelError("cannot localize an all-zero channel")
    ks = grid.correlate(vectors)
    return [_result_for_atom(grid, int(k), p) for k, p in zip(ks, true_positions)]


def worst_cell_diagonal(grid: LocalizationGrid) -> float:
    """Largest Cartesian diagonal of any polar grid cell (error bound helper)."""
    g = grid.grid
    worst = 0.0
    for kt in range(g.n_theta - 1):
        for kp in range(g.n_phi - 1):
            for kr in (0, g.n_r - 2):
                a = polar_to_cartesian(g.theta_values[kt], g.phi_values[kp], g.dist_values[kr], grid.o_bs)
                b = polar_to_cartesian(
                    g.theta_values[kt + 1], g.phi_values[kp + 1], g.dist_values[kr + 1], grid.o_bs
                )
                worst = max(worst, float(np.linalg.norm(b - a)))
    return worst


# ---------------------------------------------------------------------------
# Beam training
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BeamTrainingResult:
    strategy: str
    chosen_index: int  # near-field global index; far_field uses its own angular index
    sweeps: int
    rate: float
    norm_gain: float


def _sweep_all(h: np.ndarray, codebook: Codebook):
    power = np.abs(codebook.matrix.conj().T @ h) ** 2
    k_best = int(np.argmax(power))  # ties: smallest index (argmax convention)
    return power, k_best


def beam_train(
    h: np.ndarray, codebook: Codebook, strategy: str, p_r: float, sigma2: float
) -> BeamTrainingResult:
    """One strategy's choice, sweep count, rate, and gain vs the exhaustive winner."""
    results = train_all(h, codebook, p_r, sigma2, strategies=(strategy,))
    return results[strategy]


def train_all(
    h: np.ndarray,
    codebook: Codebook,
    p_r: float,
    sigma2: float,
    strategies: Sequence[str] = STRATEGIES,
) -> dict[str, BeamTrainingResult]:
    """Evaluate strategies sharing one exhaustive sweep (the gain reference)."""
    for s in strategies:
        if s not in STRATEGIES:
            raise ValueError(f"unknown strategy {s!r}")
    h = np.asarray(h, dtype=complex)
    if not np.any(h):
        raise DegenerateChannelError("cannot beam-train an all-zero channel")
    grid = codebook.grid
    power, k_best = _sweep_all(h, codebook)
    ref_power = power[k_best]
    out: dict[str, BeamTrainingResult] = {}

    if "exhaustive" in strategies:
        out["exhaustive"] = BeamTrainingResult(
            strategy="exhaustive",
            chosen_index=k_best + 1,
            sweeps=codebook.size,
            rate=achievable_rate(codebook.matrix[:, k_best], h, p_r, sigma2),
            norm_gain=1.0,
        )

    if "far_field" in strategies or "two_stage" in strategies:
        ff_matrix, ff_tuples = codebook.far_field
        ff_power = np.abs(ff_matrix.conj().T @ h) ** 2
        j_best = int(np.argmax(ff_power))
        kt, kp = ff_tuples[j_best]
        ff_sweeps = ff_matrix.shape[1]

        if "far_field" in strategies:
            out["far_field"] = BeamTrainingResult(
                strategy="far_field",
                chosen_index=j_best + 1,
                sweeps=ff_sweeps,
                rate=achievable_rate(ff_matrix[:, j_best], h, p_r, sigma2),
                norm_gain=float(ff_power[j_best] / ref_power) if ref_power > 0 else 0.0,
            )

        if "two_stage" in strategies:
            ring = codebook.distance_ring(kt, kp)  # 1-based global indices
            ring_power = power[ring - 1]
            r_best = int(np.argmax(ring_power))
            k2 = int(ring[r_best])
            out["two_stage"] = BeamTrainingResult(
                strategy="two_stage",
                chosen_index=k2,
                sweeps=ff_sweeps + grid.n_r,
                rate=achievable_rate(codebook.matrix[:, k2 - 1], h, p_r, sigma2),
                norm_gain=float(ring_power[r_best] / ref_power) if ref_power > 0 else 0.0,
            )
    return out


# ---------------------------------------------------------------------------
# Dataset-level evaluation
# ---------------------------------------------------------------------------

@dataclass
class FrameScore:
    trajectory: str
    frame: int
    mode_id: int
    los: bool
    strategy: str
    rate: float
    norm_gain: float


@dataclass
class EvaluationReport:
    scores: list[FrameScore]
    cells: dict  # strategy -> split -> {mean_rate, mean_norm_gain, count} | None

    def table_rows(self) -> list[dict]:
        return [vars(s) for s in self.scores]


_SPLITS = ("all", "los", "nlos", "easy", "hard")


def _in_split(score: FrameScore, split: str) -> bool:
    if split == "all":
        return True
    if split == "los":
        return score.los
    if split == "nlos":
        return not score.los
    if split == "hard":
        return score.mode_id in HARD_MODES
    if split == "easy":
        return score.mode_id not in HARD_MODES
    raise ValueError(split)


def evaluate_dataset(
    frames: Iterable,
    codebook: Codebook,
    p_r: float,
    sigma2: float,
    strategies: Sequence[str] = STRATEGIES,
) -> EvaluationReport:
    """Score strategies frame by frame and aggregate per split.

    ``frames`` yields objects with attributes ``trajectory``, ``frame``,
    ``h`` (complex M-vector at the carrier), ``los``, ``mode_id``.
    Degenerate (all-zero) frames are skipped.
    """
    scores: list[FrameScore] = []
    for rec in frames:
        h = rec.h
        if not np.any(h):
            continue
        results = train_all(h, codebook, p_r, sigma2, strategies=strategies)
        for s, r in results.items():
            scores.append(
                FrameScore(rec.trajectory, rec.frame, rec.mode_id, bool(rec.los), s, r.rate, r.norm_gain)
            )

    cells: dict = {}
    for s in strategies:
        cells[s] = {}
        mine = [sc for sc in scores if sc.strategy == s]
        for split in _SPLITS:
            sel = [sc for sc in mine if _in_split(sc, split)]
            if not sel:
                cells[s][split] = None
                continue
            cells[s][split] = {
                "mean_rate": float(np.mean([sc.rate for sc in sel])),
                "mean_norm_gain": float(np.mean([sc.norm_gain for sc in sel])),
                "count": len(sel),
            }
    return EvaluationReport(scores, cells)


@dataclass(frozen=True)
class PredictionScore:
    mean_norm_gain: float
    violations: tuple[str, ...]


def score_external_prediction(
    predictions: Sequence[Optional[tuple[int, int, int]]],
    frames: Sequence,
    codebook: Codebook,
) -> PredictionScore:
    """Mean normalized gain of externally predicted (k_theta, k_phi, k_r) tuples.

    Malformed or out-of-grid tuples score 0 for their frame and are recorded
    as violations rather than aborting the evaluation.
    """
    if len(predictions) != len(frames):
        raise ValueError("one prediction per evaluated frame required")
    g = codebook.grid
    gains = []
    violations = []
    for i, (pred, rec) in enumerate(zip(predictions, frames)):
        h = rec.h
        power, k_best = _sweep_all(h, codebook)
        ref = power[k_best]
        ok = (
            isinstance(pred, (tuple, list))
            and len(pred) == 3
            and all(isinstance(x, (int, np.integer)) for x in pred)
            and 1 <= pred[0] <= g.n_theta
            and 1 <= pred[1] <= g.n_phi
            and 1 <= pred[2] <= g.n_r
        )
        if not ok or ref == 0:
            gains.append(0.0)
            violations.append(f"frame {i}: invalid tuple {pred!r}")
            continue
        k = (pred[0] - 1) * g.n_phi * g.n_r + (pred[1] - 1) * g.n_r + pred[2]
        gains.append(float(power[k - 1] / ref))
    return PredictionScore(float(np.mean(gains)) if gains else 0.0, tuple(violations))
