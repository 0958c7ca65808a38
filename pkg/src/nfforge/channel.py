"""Channel frequency responses, CSI tensors, and received-signal model.

Each entry of the M x K channel matrix is the coherent sum over paths

    H[m, k] = sum_l  g_{l,m} * exp(-j 2 pi f_k d_{l,m} / c)

with per-antenna gains and distances straight from the ray tracer, so the
spherical wavefront survives into the stored CSI.  Subcarriers sit on a
baseband grid centered on the carrier: f_k = f_c + (k - (K-1)/2) * df.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import ShapeMismatchError
from .labels import los_indicator
from .materials import SPEED_OF_LIGHT
from .raytrace import PathSet, rms_delay_spread

_BAND = (6e9, 24e9)


def subcarrier_frequencies(f_c: float, delta_f: float, k: int) -> np.ndarray:
    """Symmetric subcarrier grid centered on the carrier."""
    return f_c + (np.arange(k) - (k - 1) / 2.0) * delta_f


def center_subcarrier_index(frequencies: np.ndarray, f_c: float) -> int:
    """Index of the subcarrier nearest f_c (ties resolve to the lower index)."""
    return int(np.argmin(np.abs(np.asarray(frequencies) - f_c)))


def assemble_channel(pathset: PathSet, frequencies: Sequence[float]) -> np.ndarray:
    """Complex (M, K) channel matrix; antennas with no paths get zero rows."""
    freqs = np.asarray(frequencies, dtype=float)
    if freqs.size == 0:
        raise ValueError("frequency list must be non-empty")
    if freqs.min() < _BAND[0] or freqs.max() > _BAND[1]:
        raise ValueError("frequencies outside the supported 6-24 GHz band")
    m_count = len(pathset)
    h = np.zeros((m_count, freqs.size), dtype=complex)
    for m in range(m_count):
        paths = pathset[m]
        if not paths:
            continue
        gains = np.array([p.gain for p in paths])
        dists = np.array([p.length for p in paths])
        phase = np.exp(-2j * math.pi * np.outer(dists, freqs) / SPEED_OF_LIGHT)
        h[m] = gains @ phase
    return h


@dataclass(frozen=True)
class CsiTensor:
    """Real/imaginary split of the per-trajectory channel: (M, K, T, 2)."""

    data: np.ndarray
    f_c: float
    delta_f: float

    def __post_init__(self):
        if self.data.ndim != 4 or self.data.shape[-1] != 2:
            raise ShapeMismatchError(f"CSI tensor must be (M, K, T, 2), got {self.data.shape}")
        if not np.isfinite(self.data).all():
            raise ValueError("CSI tensor contains non-finite entries")

    @property
    def m(self) -> int:
        return self.data.shape[0]

    @property
    def k(self) -> int:
        return self.data.shape[1]

    @property
    def t(self) -> int:
        return self.data.shape[2]

    def frame(self, t: int) -> np.ndarray:
        """Complex (M, K) channel of frame ``t``."""
        plane = self.data[:, :, t, :]
        return plane[..., 0] + 1j * plane[..., 1]

    @classmethod
    def from_frames(cls, frames: Sequence[np.ndarray], f_c: float, delta_f: float) -> "CsiTensor":
        shapes = {f.shape for f in frames}
        if len(shapes) != 1:
            raise ShapeMismatchError(f"inconsistent frame shapes: {sorted(shapes)}")
        stack = np.stack(frames, axis=2)  # (M, K, T)
        data = np.stack([stack.real, stack.imag], axis=3)
        return cls(data, f_c, delta_f)


def build_csi_tensor(
    traj_pathsets: Sequence[PathSet], frequencies: Sequence[float], f_c: float, delta_f: float
) -> CsiTensor:
    """Assemble and stack channels for every frame of a trajectory."""
    if len(traj_pathsets) < 1:
        raise ValueError("need at least one frame")
    sizes = {len(ps) for ps in traj_pathsets}
    if len(sizes) != 1:
        raise ShapeMismatchError(f"inconsistent antenna counts across frames: {sorted(sizes)}")
    frames = [assemble_channel(ps, frequencies) for ps in traj_pathsets]
    return CsiTensor.from_frames(frames, f_c, delta_f)


@dataclass(frozen=True)
class NoiseModel:
    """Receive power and noise variance (linear units) of the uplink model."""

    sigma2: float
    p_r: float

    def __post_init__(self):
        if self.sigma2 <= 0 or self.p_r <= 0:
            raise ValueError("sigma2 and p_r must be positive")


def default_noise_model(
    f_c: float,
    snr_db: float = 20.0,
    ref_distance: float = 100.0,
    ref_elements: int = 64 * 64,
    sigma2: float = 1.0,
) -> NoiseModel:
    """Noise model whose boresight LoS SNR at ``ref_distance`` is ``snr_db``.

    The reference is matched beamforming on a clean ``ref_elements``-element
    array: SNR = P_r * M * (lambda / (4 pi d))^2 / sigma2.  Both resolved
    values are written to the dataset manifest.
    """
    lam = SPEED_OF_LIGHT / f_c
    g = lam / (4.0 * math.pi * ref_distance)
    p_r = 10.0 ** (snr_db / 10.0) * sigma2 / (ref_elements * g * g)
    return NoiseModel(sigma2=sigma2, p_r=p_r)


def received_signal(w: np.ndarray, h: np.ndarray, noise: NoiseModel, rng_seed: int) -> complex:
    """Uplink observation y = w^H (sqrt(P_r) h + n), n ~ CN(0, sigma2 I)."""
    w = np.asarray(w)
    h = np.asarray(h)
    if abs(np.linalg.norm(w) - 1.0) > 1e-9:
        raise ValueError("beamforming vector must be unit-norm")
    rng = np.random.default_rng(rng_seed)
    scale = math.sqrt(noise.sigma2 / 2.0)
    n = scale * (rng.standard_normal(h.shape) + 1j * rng.standard_normal(h.shape))
    return complex(np.vdot(w, math.sqrt(noise.p_r) * h + n))


@dataclass(frozen=True)
class ChannelStats:
    mean_path_count: float
    mean_rms_delay_spread: float
    los_fraction: float


def channel_stats(
    pathsets: Iterable[PathSet],
    los_flags: Optional[Sequence[bool]] = None,
    reference_index: Optional[int] = None,
) -> ChannelStats:
    """Aggregate per-frame statistics from the reference antenna's paths.

    The reference antenna is the array-center element unless overridden.
    Frames with no paths contribute a zero path count and are excluded from
    the delay-spread mean (spread is undefined there).
    """
    pathsets = list(pathsets)
    if not pathsets:
        raise ValueError("need at least one frame")
    counts = []
    spreads = []
    los = []
    for i, ps in enumerate(pathsets):
        ref = reference_index if reference_index is not None else _center_index(len(ps))
        paths = ps[ref]
        counts.append(len(paths))
        if paths:
            spreads.append(rms_delay_spread(paths))
        if los_flags is not None:
            los.append(bool(los_flags[i]))
        else:
            los.append(los_indicator(ps))
    return ChannelStats(
        mean_path_count=float(np.mean(counts)),
        mean_rms_delay_spread=float(np.mean(spreads)) if spreads else 0.0,
        los_fraction=float(np.mean(los)),
    )


def _center_index(m_count: int) -> int:
    side = math.isqrt(m_count)
    if side * side == m_count:
        return (side // 2) * side + side // 2
    return m_count // 2
