"""Per-frame wireless labels: Top-5 beams, normalized gains, LoS flag, GPS.

Beam labels come from an exhaustive single-carrier sweep of the near-field
codebook: rates log2(1 + P_r |w^H h|^2 / sigma2) for every codeword, the
five best kept in descending order with ties broken toward the smaller
global index so golden files are stable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateChannelError, UndefinedReferenceError

_NORM_TOL = 1e-9


@dataclass(frozen=True)
class BeamLabel:
    top5_global: tuple[int, ...]
    top5_tuples: tuple[tuple[int, int, int], ...]
    top5_gains: tuple[float, ...]
    los: bool


@dataclass(frozen=True)
class GpsObservation:
    u_tilde: np.ndarray
    sigma2_gps: float


def achievable_rate(w: np.ndarray, h: np.ndarray, p_r: float, sigma2: float) -> float:
    """Deterministic single-codeword rate in bits/s/Hz (noise enters via sigma2 only)."""
    if abs(np.linalg.norm(w) - 1.0) > _NORM_TOL:
        raise ValueError("codeword must be unit-norm")
    snr = p_r * abs(np.vdot(w, h)) ** 2 / sigma2
    return math.log2(1.0 + snr)


def label_beams(h: np.ndarray, codebook, p_r: float, sigma2: float, *, top_n: int = 5, los: bool = False) -> BeamLabel:
    """Exhaustive Top-N beam labels for one frame's channel at the carrier."""
    h = np.asarray(h)
    if not np.any(h):
        raise DegenerateChannelError("all-zero channel: beam labels undefined")
    power = np.abs(codebook.matrix.conj().T @ h) ** 2  # (N,)
    order = np.argsort(-power, kind="stable")[:top_n]
    best = power[order[0]]
    gains = power[order] / best
    return BeamLabel(
        top5_global=tuple(int(k) + 1 for k in order),
        top5_tuples=tuple(codebook.tuples[int(k)] for k in order),
        top5_gains=tuple(float(g) for g in gains),
        los=los,
    )


def normalized_gain(w: np.ndarray, h: np.ndarray, w_opt: np.ndarray) -> float:
    """|w^H h|^2 / |w_opt^H h|^2 relative to the reference codeword."""
    if abs(np.linalg.norm(w) - 1.0) > _NORM_TOL or abs(np.linalg.norm(w_opt) - 1.0) > _NORM_TOL:
        raise ValueError("codewords must be unit-norm")
    ref = abs(np.vdot(w_opt, h)) ** 2
    if ref == 0.0:
        raise UndefinedReferenceError("reference codeword has zero response")
    return float(abs(np.vdot(w, h)) ** 2 / ref)


def los_indicator(pathset, mode: str = "any", reference_index: int | None = None) -> bool:
    """True iff a direct path exists (default: at any antenna of the array)."""
    if mode == "any":
        return any(p.is_los for paths in pathset.per_antenna for p in paths)
    if mode == "reference":
        ref = reference_index if reference_index is not None else len(pathset) // 2
        return any(p.is_los for p in pathset[ref])
    raise ValueError(f"mode must be 'any' or 'reference', got {mode!r}")


def gps_observe(u_t: np.ndarray, sigma2_gps: float, seed: int) -> GpsObservation:
    """Ground-truth position corrupted by isotropic Gaussian noise."""
    if sigma2_gps < 0:
        raise ValueError("GPS noise variance must be non-negative")
    rng = np.random.default_rng(seed)
    z = rng.normal(0.0, math.sqrt(sigma2_gps), size=3)
    return GpsObservation(np.asarray(u_t, dtype=float) + z, sigma2_gps)
