import math

import numpy as np
import pytest

from conftest import F_C
from nfforge.codebook import (
    Codebook,
    PolarGrid,
    decompose_index,
    far_field_codeword,
    global_index,
    near_field_codeword,
    polar_to_cartesian,
)
from nfforge.materials import SPEED_OF_LIGHT
from nfforge.raytrace import ArrayGeometry

O_BS = np.array([0.0, 0.0, 65.0])


# ---------------------------------------------------------------------------
# polar_to_cartesian
# ---------------------------------------------------------------------------

def test_boresight_axis():
    np.testing.assert_allclose(polar_to_cartesian(0.0, 90.0, 100.0, O_BS), [100.0, 0.0, 65.0], atol=1e-12)


def test_zenith_degeneracy():
    np.testing.assert_allclose(polar_to_cartesian(123.0, 0.0, 10.0, O_BS), [0.0, 0.0, 75.0], atol=1e-12)


def test_plus_y_axis():
    np.testing.assert_allclose(polar_to_cartesian(90.0, 90.0, 50.0, O_BS), [0.0, 50.0, 65.0], atol=1e-12)


def test_distance_must_be_positive():
    with pytest.raises(ValueError):
        polar_to_cartesian(0.0, 90.0, 0.0, O_BS)


# ---------------------------------------------------------------------------
# Codewords
# ---------------------------------------------------------------------------

def test_single_element_codeword_unit_modulus():
    arr = ArrayGeometry(1, 1, 0.02, (0.0, 0.0, 65.0))
    w = near_field_codeword(np.array([30.0, 0.0, 65.0]), arr, F_C)
    assert w.shape == (1,)
    assert abs(abs(w[0]) - 1.0) < 1e-12


def test_matched_codeword_coherent_sum(array8):
    """A codeword focused at a uniform-gain source sums all M terms coherently."""
    target = np.array([45.0, 5.0, 60.0])
    pos = array8.element_positions
    d = np.linalg.norm(target - pos, axis=1)
    g = 0.003
    h = g * np.exp(-2j * math.pi * F_C * d / SPEED_OF_LIGHT)
    w = near_field_codeword(target, array8, F_C)
    m = array8.n_elements
    assert abs(np.vdot(w, h)) == pytest.approx(math.sqrt(m) * g, rel=1e-12)


def test_far_field_limit(array8):
    p = polar_to_cartesian(25.0, 105.0, 10_000.0, O_BS)
    w_nf = near_field_codeword(p, array8, F_C)
    w_ff = far_field_codeword(25.0, 105.0, array8, F_C)
    phase = np.angle(w_nf * np.conj(w_ff))
    phase -= phase.mean()
    assert np.abs(phase).max() < 0.05


def test_broadside_far_field_uniform(array8):
    w = far_field_codeword(0.0, 90.0, array8, F_C)
    np.testing.assert_allclose(w, np.full(64, 1 / 8.0 + 0j), atol=1e-12)


def test_codeword_norms(array8):
    rng = np.random.default_rng(0)
    for _ in range(50):
        th, ph, d = rng.uniform(-72, 72), rng.uniform(60, 150), rng.uniform(20, 155)
        w = near_field_codeword(polar_to_cartesian(th, ph, d, O_BS), array8, F_C)
        assert np.linalg.norm(w) == pytest.approx(1.0, abs=1e-12)
        w = far_field_codeword(th, ph, array8, F_C)
        assert np.linalg.norm(w) == pytest.approx(1.0, abs=1e-12)


# ---------------------------------------------------------------------------
# Index mapping
# ---------------------------------------------------------------------------

def test_index_corners():
    g = PolarGrid()
    assert global_index((1, 1, 1), g) == 1
    assert global_index((20, 20, 10), g) == 4000
    assert global_index((2, 3, 4), g) == 224


def test_decompose_examples():
    g = PolarGrid()
    assert decompose_index(1, g) == (1, 1, 1)
    assert decompose_index(224, g) == (2, 3, 4)


def test_bijection_full_grid():
    g = PolarGrid()
    for k in range(1, g.size + 1):
        assert global_index(decompose_index(k, g), g) == k


def test_index_range_errors():
    g = PolarGrid()
    with pytest.raises(IndexError):
        global_index((0, 1, 1), g)
    with pytest.raises(IndexError):
        global_index((1, 21, 1), g)
    with pytest.raises(IndexError):
        decompose_index(0, g)
    with pytest.raises(IndexError):
        decompose_index(4001, g)


# ---------------------------------------------------------------------------
# Materialized codebook
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def small_codebook(array8):
    grid = PolarGrid(n_theta=7, n_phi=6, n_r=5)
    return Codebook(grid, array8, F_C, O_BS)


def test_codebook_column_order(small_codebook, array8):
    g = small_codebook.grid
    k = global_index((3, 2, 4), g)
    w = small_codebook.codeword(k)
    p = polar_to_cartesian(g.theta_values[2], g.phi_values[1], g.dist_values[3], O_BS)
    np.testing.assert_allclose(w, near_field_codeword(p, array8, F_C), atol=1e-8)


def test_codebook_unit_norms(small_codebook):
    norms = np.linalg.norm(small_codebook.matrix, axis=0)
    np.testing.assert_allclose(norms, 1.0, atol=1e-12)


def test_self_focus_optimality(small_codebook, array8):
    """On-grid single-path source: exhaustive search recovers its own cell."""
    g = small_codebook.grid
    pos = array8.element_positions
    rng = np.random.default_rng(4)
    for _ in range(10):
        tup = (
            int(rng.integers(1, g.n_theta + 1)),
            int(rng.integers(1, g.n_phi + 1)),
            int(rng.integers(1, g.n_r + 1)),
        )
        k = global_index(tup, g)
        p = small_codebook.focus_points[k - 1]
        d = np.linalg.norm(p - pos, axis=1)
        h = np.exp(-2j * math.pi * F_C * d / SPEED_OF_LIGHT)  # uniform per-antenna gains
        power = np.abs(small_codebook.matrix.conj().T @ h) ** 2
        assert int(np.argmax(power)) + 1 == k


def test_distance_ring_indices(small_codebook):
    g = small_codebook.grid
    ring = small_codebook.distance_ring(3, 2)
    assert list(ring) == [global_index((3, 2, r), g) for r in range(1, g.n_r + 1)]


def test_inverse_distance_sampling_option():
    g = PolarGrid(n_r=5, inverse_distance=True)
    inv = 1.0 / g.dist_values
    np.testing.assert_allclose(np.diff(inv), np.diff(inv)[0], rtol=1e-9)
    assert g.dist_values[0] == pytest.approx(20.0)
    assert g.dist_values[-1] == pytest.approx(155.0)
