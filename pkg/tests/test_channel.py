import math

import numpy as np
import pytest

from conftest import F_C
from nfforge.channel import (
    CsiTensor,
    NoiseModel,
    assemble_channel,
    build_csi_tensor,
    center_subcarrier_index,
    channel_stats,
    default_noise_model,
    received_signal,
    subcarrier_frequencies,
)
from nfforge.errors import ShapeMismatchError
from nfforge.materials import SPEED_OF_LIGHT
from nfforge.raytrace import Path, PathSet


def _ps(*antenna_paths):
    return PathSet(tuple(tuple(p) for p in antenna_paths))


def _path(length, gain, los=False):
    return Path((), (), length, gain, los)


# ---------------------------------------------------------------------------
# Subcarrier grid
# ---------------------------------------------------------------------------

def test_grid_centered():
    f = subcarrier_frequencies(F_C, 30e3, 17)
    assert f[8] == F_C
    assert np.all(np.diff(f) == pytest.approx(30e3))


def test_center_index_even_count_takes_lower():
    f = subcarrier_frequencies(F_C, 30e3, 16)
    assert center_subcarrier_index(f, F_C) == 7


# ---------------------------------------------------------------------------
# assemble_channel
# ---------------------------------------------------------------------------

def test_full_cycle_phase():
    lam = SPEED_OF_LIGHT / F_C
    h = assemble_channel(_ps([_path(lam, 1.0 + 0j)]), [F_C])
    assert h[0, 0] == pytest.approx(1.0 + 0.0j, abs=1e-12)


def test_no_paths_zero_matrix():
    h = assemble_channel(_ps([], []), [F_C, F_C + 30e3])
    assert h.shape == (2, 2)
    assert np.all(h == 0)


def test_half_wavelength_cancellation():
    lam = SPEED_OF_LIGHT / F_C
    a = 0.37
    h = assemble_channel(_ps([_path(10 * lam, a), _path(10 * lam + lam / 2, a)]), [F_C])
    assert abs(h[0, 0]) < 1e-12 * a


def test_linearity_in_path_union():
    rng = np.random.default_rng(1)
    freqs = subcarrier_frequencies(F_C, 30e3, 8)
    paths_a = [_path(rng.uniform(30, 200), complex(*rng.normal(size=2))) for _ in range(3)]
    paths_b = [_path(rng.uniform(30, 200), complex(*rng.normal(size=2))) for _ in range(2)]
    h_a = assemble_channel(_ps(paths_a), freqs)
    h_b = assemble_channel(_ps(paths_b), freqs)
    h_ab = assemble_channel(_ps(paths_a + paths_b), freqs)
    np.testing.assert_allclose(h_ab, h_a + h_b, rtol=1e-12, atol=1e-15)


def test_phase_slope_is_minus_distance():
    d = 87.3
    freqs = subcarrier_frequencies(F_C, 30e3, 64)
    h = assemble_channel(_ps([_path(d, 1.0)]), freqs)
    phase = np.unwrap(np.angle(h[0]))
    slope = np.polyfit(freqs, phase, 1)
    assert slope[0] == pytest.approx(-2 * math.pi * d / SPEED_OF_LIGHT, rel=1e-9)
    residual = phase - np.polyval(slope, freqs)
    assert np.abs(residual).max() < 1e-9


def test_band_enforced():
    with pytest.raises(ValueError):
        assemble_channel(_ps([_path(10.0, 1.0)]), [2.4e9])


# ---------------------------------------------------------------------------
# CsiTensor
# ---------------------------------------------------------------------------

def test_tensor_single_entry():
    d = 40.0
    h = assemble_channel(_ps([_path(d, 1.0)]), [F_C])
    tensor = build_csi_tensor([_ps([_path(d, 1.0)])], [F_C], F_C, 30e3)
    phi = 2 * math.pi * F_C * d / SPEED_OF_LIGHT
    assert tensor.data.shape == (1, 1, 1, 2)
    assert tensor.data[0, 0, 0, 0] == pytest.approx(math.cos(phi), abs=1e-9)
    assert tensor.data[0, 0, 0, 1] == pytest.approx(-math.sin(phi), abs=1e-9)
    np.testing.assert_allclose(tensor.frame(0), h, atol=1e-15)


def test_tensor_round_trip_and_norm():
    rng = np.random.default_rng(2)
    freqs = subcarrier_frequencies(F_C, 30e3, 5)
    pathsets = [
        _ps(*[[_path(rng.uniform(20, 100), complex(*rng.normal(size=2)))] for _ in range(3)])
        for _ in range(4)
    ]
    tensor = build_csi_tensor(pathsets, freqs, F_C, 30e3)
    frames = [assemble_channel(ps, freqs) for ps in pathsets]
    total = sum(np.linalg.norm(f) ** 2 for f in frames)
    assert np.sum(tensor.data**2) == pytest.approx(total, rel=1e-12)
    for t, f in enumerate(frames):
        np.testing.assert_array_equal(tensor.frame(t), f)


def test_tensor_shape_mismatch():
    freqs = [F_C]
    with pytest.raises(ShapeMismatchError):
        build_csi_tensor([_ps([]), _ps([], [])], freqs, F_C, 30e3)


def test_tensor_rejects_nan():
    with pytest.raises(ValueError):
        CsiTensor(np.full((1, 1, 1, 2), np.nan), F_C, 30e3)


# ---------------------------------------------------------------------------
# received_signal
# ---------------------------------------------------------------------------

def test_noise_free_limit():
    h = np.array([1 + 1j, 0.5 - 0.25j])
    w = h / np.linalg.norm(h)
    noise = NoiseModel(sigma2=1e-30, p_r=4.0)
    y = received_signal(w, h, noise, rng_seed=0)
    assert y == pytest.approx(2.0 * np.vdot(w, h), abs=1e-9)


def test_matched_filter_magnitude():
    h = np.array([0.3 + 0.4j, -0.2 + 0.1j, 0.05j])
    w = h / np.linalg.norm(h)
    y = received_signal(w, h, NoiseModel(sigma2=1e-30, p_r=9.0), rng_seed=1)
    assert abs(y) == pytest.approx(3.0 * np.linalg.norm(h), rel=1e-9)


def test_zero_channel_noise_statistics():
    sigma2 = 0.73
    w = np.array([1.0 + 0j])
    noise = NoiseModel(sigma2=sigma2, p_r=1.0)
    ys = np.array([received_signal(w, np.zeros(1, dtype=complex), noise, seed) for seed in range(100_000)])
    assert abs(ys.mean()) < 3 * math.sqrt(sigma2 / len(ys))
    assert np.mean(np.abs(ys) ** 2) == pytest.approx(sigma2, rel=0.03)


def test_unnormalized_w_rejected():
    with pytest.raises(ValueError):
        received_signal(np.array([2.0 + 0j]), np.ones(1, dtype=complex), NoiseModel(1.0, 1.0), 0)


def test_default_noise_model_snr_rule():
    model = default_noise_model(F_C)
    lam = SPEED_OF_LIGHT / F_C
    g = lam / (4 * math.pi * 100.0)
    snr = model.p_r * 4096 * g * g / model.sigma2
    assert 10 * math.log10(snr) == pytest.approx(20.0, abs=1e-9)


# ---------------------------------------------------------------------------
# channel_stats
# ---------------------------------------------------------------------------

def test_stats_all_single_los():
    ps = _ps([_path(50.0, 1.0, los=True)])
    stats = channel_stats([ps, ps, ps], reference_index=0)
    assert stats.mean_path_count == 1.0
    assert stats.mean_rms_delay_spread == 0.0
    assert stats.los_fraction == 1.0


def test_stats_mixed_counts():
    one = _ps([_path(50.0, 1.0, los=True)])
    three = _ps([_path(50.0, 1.0, los=True), _path(80.0, 0.1), _path(120.0, 0.05)])
    stats = channel_stats([one, three], reference_index=0)
    assert stats.mean_path_count == 2.0
