"""Release acceptance suite: one test per criterion, each printing a
PASS/FAIL line with its measured runtime against the stated budget.

Dataset-producing fixtures are session-scoped; their build time is charged
to the first criterion that consumes them (the generation-heavy criteria
carry 10-minute budgets).  Run with ``pytest tests/test_acceptance.py -v -s``
to see the per-criterion lines live.
"""

import json
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from conftest import F_C
from nfforge import dataio
from nfforge.baselines import (
    LocalizationGrid,
    evaluate_dataset,
    localize_batch,
    omp_localize,
    worst_cell_diagonal,
)
from nfforge.channel import center_subcarrier_index, subcarrier_frequencies
from nfforge.codebook import (
    Codebook,
    PolarGrid,
    decompose_index,
    far_field_codeword,
    global_index,
    near_field_codeword,
    polar_to_cartesian,
)
from nfforge.config import config_from_dict
from nfforge.labels import achievable_rate
from nfforge.materials import SPEED_OF_LIGHT
from nfforge.pipeline import generate_dataset
from nfforge.raytrace import ArrayGeometry, trace_paths
from nfforge.scene import SceneParams, generate_scene
from rt_oracle import make_mirror_faces, oracle_lengths

_BUILD_TIMES: dict[str, float] = {}


@contextmanager
def criterion(name: str, budget_s: float, extra_time: float = 0.0):
    t0 = time.perf_counter()
    try:
        yield
    except BaseException:
        elapsed = time.perf_counter() - t0 + extra_time
        print(f"\n[ACCEPTANCE] {name}: FAIL ({elapsed:.1f}s / budget {budget_s:.0f}s)")
        raise
    elapsed = time.perf_counter() - t0 + extra_time
    verdict = "PASS" if elapsed < budget_s else "PASS (over budget)"
    print(f"\n[ACCEPTANCE] {name}: {verdict} ({elapsed:.1f}s / budget {budget_s:.0f}s)")
    assert elapsed < budget_s, f"{name} exceeded its runtime budget"


# ---------------------------------------------------------------------------
# Session fixtures: generated datasets
# ---------------------------------------------------------------------------

DESK_CONFIG = {
    # desk-scale defaults: 8x8 array, K=16, 5 cities, 20 trajectories/city.
    # Sensor resolutions are reduced; the measured statistics (path counts,
    # delay spreads, LoS flags) do not involve the imaging payloads.
    "seed": 20260808,
    "m_y": 8,
    "m_z": 8,
    "k_subcarriers": 16,
    "t_frames": 20,
    "cities": 5,
    "trajectories_per_city": 20,
    "image_size": 128,
    "lidar_points": 2500,
}

EVAL_CONFIG = {
    # Near-field evaluation variant: a 32x32 aperture puts the codebook's
    # 20-155 m distance range inside the array's radiative near field
    # (Rayleigh distance ~41 m), which the 8x8 desk array cannot do; the BS
    # sits lower so trajectories cross the near-field region.
    "seed": 913,
    "m_y": 32,
    "m_z": 32,
    "k_subcarriers": 8,
    "t_frames": 20,
    "bs_height": 35.0,
    "cities": 3,
    "trajectories_per_city": 30,
    "split_counts": [1, 1, 1],
    "scene": {"building_count": [3, 5]},
    "image_size": 32,
    "lidar_points": 100,
}

DETERMINISM_CONFIG = {
    "seed": 5150,
    "m_y": 4,
    "m_z": 4,
    "k_subcarriers": 4,
    "t_frames": 6,
    "cities": 3,
    "trajectories_per_city": 4,
    "scene": {"building_count": [2, 4]},
    "image_size": 32,
    "lidar_points": 100,
}


@pytest.fixture(scope="session")
def desk_dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("desk_ds")
    t0 = time.perf_counter()
    result = generate_dataset(config_from_dict(dict(DESK_CONFIG)), root)
    _BUILD_TIMES["desk"] = time.perf_counter() - t0
    assert result["failures"] == []
    return root


@pytest.fixture(scope="session")
def eval_dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("eval_ds")
    t0 = time.perf_counter()
    result = generate_dataset(config_from_dict(dict(EVAL_CONFIG)), root)
    _BUILD_TIMES["eval"] = time.perf_counter() - t0
    assert result["failures"] == []
    return root


def _dataset_codebook(root):
    manifest = json.loads((root / "manifest.json").read_text())
    cfg = manifest["config"]
    array = ArrayGeometry(
        cfg["m_y"], cfg["m_z"], cfg["resolved"]["element_spacing"], (0.0, 0.0, cfg["bs_height"])
    )
    grid = PolarGrid.from_dict(manifest["codebook"])
    o_bs = np.array([0.0, 0.0, cfg["bs_height"]])
    return manifest, array, Codebook(grid, array, cfg["f_c"], o_bs)


class _EvalFrame:
    def __init__(self, rec, k_center):
        self.trajectory = rec.trajectory
        self.frame = rec.frame
        self.mode_id = rec.mode_id
        self.los = rec.los
        self.h = rec.csi[:, k_center]


# ---------------------------------------------------------------------------
# Criterion 1: index bijection
# ---------------------------------------------------------------------------

def test_index_bijection():
    with criterion("index bijection (4000-entry grid, exact)", 1.0):
        grid = PolarGrid()
        assert grid.size == 4000
        assert global_index((2, 3, 4), grid) == 224
        for k in range(1, grid.size + 1):
            tup = decompose_index(k, grid)
            assert global_index(tup, grid) == k


# ---------------------------------------------------------------------------
# Criterion 2: codeword physics
# ---------------------------------------------------------------------------

def test_codeword_physics(array8):
    with criterion("codeword physics (far-field limit + unit norms)", 5.0):
        o_bs = np.array([0.0, 0.0, 65.0])
        grid = PolarGrid()
        worst = 0.0
        for th in grid.theta_values[::3]:
            for ph in grid.phi_values[::3]:
                p = polar_to_cartesian(float(th), float(ph), 10_000.0, o_bs)
                w_nf = near_field_codeword(p, array8, F_C)
                w_ff = far_field_codeword(float(th), float(ph), array8, F_C)
                phase = np.angle(w_nf * np.conj(w_ff))
                phase -= phase.mean()
                worst = max(worst, float(np.abs(phase).max()))
        assert worst < 0.05

        rng = np.random.default_rng(99)
        for _ in range(1000):
            tup = (
                int(rng.integers(1, grid.n_theta + 1)),
                int(rng.integers(1, grid.n_phi + 1)),
                int(rng.integers(1, grid.n_r + 1)),
            )
            p = polar_to_cartesian(
                grid.theta_values[tup[0] - 1],
                grid.phi_values[tup[1] - 1],
                grid.dist_values[tup[2] - 1],
                o_bs,
            )
            w = near_field_codeword(p, array8, F_C)
            assert abs(np.linalg.norm(w) - 1.0) < 1e-12


# ---------------------------------------------------------------------------
# Criterion 3: ray-tracer oracle
# ---------------------------------------------------------------------------

def _mirror_point(p, axis, c):
    q = np.array(p, dtype=float)
    q[axis] = 2.0 * c - q[axis]
    return q


def _plane_crossing(p, q, axis, c):
    t = (c - p[axis]) / (q[axis] - p[axis])
    return p + t * (q - p), t


def _rect_spec(axis, sign, c, center, hu, hv):
    u_axis, v_axis = [(1, 2), (0, 2), (0, 1)][axis]
    return (axis, sign, c, center[u_axis] - hu, center[u_axis] + hu,
            center[v_axis] - hv, center[v_axis] + hv, "Concrete")


def _random_mirror_trial(rng):
    """Endpoints plus 1-2 mirrors centered near analytically-derived specular
    points, with jitter so a natural mix of hits and misses reaches the
    oracle.  Only the fixture uses mirror math; the oracle never does."""
    a = np.array([rng.uniform(2, 20), rng.uniform(-15, 15), rng.uniform(15, 45)])
    b = np.array([rng.uniform(30, 65), rng.uniform(-18, 18), rng.uniform(15, 50)])
    specs = []
    if rng.uniform() < 0.4:
        # floor + far wall: the classic double-bounce corner a->floor->wall->b
        z_c = min(a[2], b[2]) - rng.uniform(4.0, 9.0)
        x_c = b[0] + rng.uniform(4.0, 9.0)
        b2 = _mirror_point(b, 0, x_c)
        b1 = _mirror_point(b2, 2, z_c)
        r1, t1 = _plane_crossing(a, b1, 2, z_c)
        r2, _ = _plane_crossing(r1, b2, 0, x_c)
        jit = lambda: rng.uniform(-1.0, 1.0)
        specs.append(_rect_spec(2, 1.0, z_c, r1 + [jit(), jit(), 0.0], rng.uniform(1.5, 3.0), rng.uniform(1.5, 3.0)))
        specs.append(_rect_spec(0, -1.0, x_c, r2 + [0.0, jit(), jit()], rng.uniform(1.5, 3.0), rng.uniform(1.5, 3.0)))
    else:
        for _ in range(int(rng.integers(1, 3))):
            axis = int(rng.integers(0, 3))
            lo, hi = min(a[axis], b[axis]), max(a[axis], b[axis])
            if rng.integers(0, 2):
                c = lo - rng.uniform(3.0, 10.0)
                sign = 1.0
            else:
                c = hi + rng.uniform(3.0, 10.0)
                sign = -1.0
            r, _ = _plane_crossing(a, _mirror_point(b, axis, c), axis, c)
            jitter = rng.uniform(-2.0, 2.0, size=3)
            jitter[axis] = 0.0
            specs.append(_rect_spec(axis, sign, c, r + jitter, rng.uniform(1.0, 2.5), rng.uniform(1.0, 2.5)))
    return a, b, specs


def test_raytracer_oracle():
    """Image method vs 1 cm grid-search minimization on 50 random mirror scenes.

    Scenes whose specular points fall within 5 cm of a face edge are
    resampled: at 1 cm oracle resolution path existence there is genuinely
    ambiguous.  Reciprocity is checked on the same scenes, and the trial set
    must contain a healthy number of actual single- and double-bounce paths
    (no vacuous agreement on empty path sets).
    """
    with criterion("ray-tracer grid-search oracle (50 scenes) + reciprocity", 120.0):
        rng = np.random.default_rng(20260808)
        scene = generate_scene(7, SceneParams(building_count=(0, 0)))
        done = 0
        singles = doubles = 0
        while done < 50:
            a, b, specs = _random_mirror_trial(rng)
            fs = make_mirror_faces(specs)
            try:
                want = oracle_lengths(fs, a, b, max_depth=2)
            except LookupError:
                continue
            arr_a = ArrayGeometry(1, 1, 0.02, tuple(a))
            ps = trace_paths(scene, arr_a, b, F_C, max_depth=2, faces=fs)
            reflected = [p for p in ps[0] if not p.is_los]
            got = sorted(p.length for p in reflected)
            assert len(got) == len(want), (got, want)
            for g, w in zip(got, want):
                assert g == pytest.approx(w, abs=2e-2)
            singles += sum(1 for p in reflected if p.depth == 1)
            doubles += sum(1 for p in reflected if p.depth == 2)
            # reciprocity: swap endpoints, path lengths match to 1e-9 m
            arr_b = ArrayGeometry(1, 1, 0.02, tuple(b))
            ps_rev = trace_paths(scene, arr_b, a, F_C, max_depth=2, faces=fs)
            got_rev = sorted(p.length for p in ps_rev[0] if not p.is_los)
            assert len(got_rev) == len(got)
            np.testing.assert_allclose(got_rev, got, atol=1e-9)
            done += 1
        print(f"\n  matched paths across 50 scenes: {singles} single-bounce, {doubles} double-bounce")
        assert singles >= 15
        assert doubles >= 3


# ---------------------------------------------------------------------------
# Criterion 4: spherical-wavefront check
# ---------------------------------------------------------------------------

def _planar_fit_max_residual(h, pos):
    """Max |residual| of the best-fit planar phase over the array."""
    ref = pos.shape[0] // 2
    dphase = np.angle(h * np.conj(h[ref]))
    basis = np.column_stack([np.ones(pos.shape[0]), pos[:, 1], pos[:, 2]])
    coef, *_ = np.linalg.lstsq(basis, dphase, rcond=None)
    return float(np.abs(dphase - basis @ coef).max())


def _los_phases(array, target, f_c):
    scene = generate_scene(7, SceneParams(building_count=(0, 0)))
    from nfforge.raytrace import build_faces

    faces = build_faces(scene, include_ground=False)
    ps = trace_paths(scene, array, target, f_c, faces=faces)
    gains = np.array([p[0].gain for p in ps.per_antenna])
    dists = np.array([p[0].length for p in ps.per_antenna])
    h = gains * np.exp(-2j * math.pi * f_c * dists / SPEED_OF_LIGHT)
    return h, dists


def test_spherical_wavefront():
    """LoS frame at 40 m, 8x8 array at 7 GHz: exact spherical phases, planar misfit.

    The 8x8 array preserves the aperture of the full-scale 64x64
    half-wavelength UPA (element pitch 9*lambda/2), keeping 40 m inside the
    radiative near field (Rayleigh distance ~170 m); at half-wavelength
    pitch an 8x8 aperture's near field ends at 2.1 m and no planar misfit
    is measurable at 40 m.  The full-scale 64x64 half-wavelength array is
    checked as a companion under the same assertions.
    """
    with criterion("spherical wavefront (8x8 @ 40 m)", 1.0):
        lam = SPEED_OF_LIGHT / F_C
        target = np.array([40.0, 0.0, 65.0])

        # aperture-preserving desk array
        arr = ArrayGeometry(8, 8, 63 * lam / 2 / 7, (0.0, 0.0, 65.0))
        h, dists = _los_phases(arr, target, F_C)
        # exact spherical model reproduces per-antenna phases
        model = np.exp(-2j * math.pi * F_C * dists / SPEED_OF_LIGHT)
        resid = np.angle(h * np.conj(model * np.abs(h)))
        assert np.abs(resid).max() < 1e-9
        # best planar fit misses at the array edge
        assert _planar_fit_max_residual(h, arr.element_positions) > 0.1

        # paper-scale companion: 64x64 at half-wavelength pitch
        arr_full = ArrayGeometry.half_wavelength(64, 64, F_C, (0.0, 0.0, 65.0))
        h_full, dists_full = _los_phases(arr_full, target, F_C)
        model = np.exp(-2j * math.pi * F_C * dists_full / SPEED_OF_LIGHT)
        resid = np.angle(h_full * np.conj(model * np.abs(h_full)))
        assert np.abs(resid).max() < 1e-9
        assert _planar_fit_max_residual(h_full, arr_full.element_positions) > 0.1


# ---------------------------------------------------------------------------
# Criterion 5: label optimality and gain normalization
# ---------------------------------------------------------------------------

def test_label_optimality(desk_dataset):
    with criterion("label optimality + gain normalization (200 frames)", 60.0):
        manifest, _array, codebook = _dataset_codebook(desk_dataset)
        cfg = manifest["config"]
        freqs = subcarrier_frequencies(cfg["f_c"], cfg["delta_f"], cfg["k_subcarriers"])
        kc = center_subcarrier_index(freqs, cfg["f_c"])
        p_r, sigma2 = cfg["resolved"]["p_r"], cfg["sigma2"]
        ds = dataio.read_dataset(desk_dataset)
        checked = 0
        for rec in ds.samples():
            if rec.degenerate:
                continue
            h = rec.csi[:, kc]
            power = np.abs(codebook.matrix.conj().T @ h) ** 2
            top1 = rec.top5_global[0]
            # no codeword beats the labeled top-1 rate
            best_rate = achievable_rate(codebook.codeword(top1), h, p_r, sigma2)
            assert best_rate >= math.log2(1.0 + p_r * power.max() / sigma2) - 1e-9
            assert rec.top5_gains[0] == 1.0
            assert all(a >= b for a, b in zip(rec.top5_gains, rec.top5_gains[1:]))
            checked += 1
            if checked == 200:
                break
        assert checked == 200


# ---------------------------------------------------------------------------
# Criterion 6: strategy ordering
# ---------------------------------------------------------------------------

def test_strategy_ordering(eval_dataset):
    with criterion(
        "strategy ordering on test split (>= 500 frames)", 600.0, extra_time=_BUILD_TIMES["eval"]
    ):
        manifest, _array, codebook = _dataset_codebook(eval_dataset)
        cfg = manifest["config"]
        freqs = subcarrier_frequencies(cfg["f_c"], cfg["delta_f"], cfg["k_subcarriers"])
        kc = center_subcarrier_index(freqs, cfg["f_c"])
        ds = dataio.read_dataset(eval_dataset)
        frames = [
            _EvalFrame(r, kc) for r in ds.samples("test") if not r.degenerate
        ]
        assert len(frames) >= 500
        report = evaluate_dataset(frames, codebook, cfg["resolved"]["p_r"], cfg["sigma2"])

        r_exh = report.cells["exhaustive"]["all"]["mean_rate"]
        r_two = report.cells["two_stage"]["all"]["mean_rate"]
        r_far = report.cells["far_field"]["all"]["mean_rate"]
        assert r_exh >= r_two >= r_far

        gains = {s: {} for s in ("two_stage", "far_field")}
        for sc in report.scores:
            if sc.strategy in gains:
                gains[sc.strategy][(sc.trajectory, sc.frame)] = sc.norm_gain
        keys = sorted(gains["two_stage"])
        diff = np.array([gains["two_stage"][k] - gains["far_field"][k] for k in keys])
        t_stat = diff.mean() / (diff.std(ddof=1) / math.sqrt(diff.size))
        print(
            f"\n  mean rates: exhaustive {r_exh:.3f} >= two-stage {r_two:.3f} >= far-field {r_far:.3f}"
            f"\n  two-stage - far-field gain: mean {diff.mean():.4g}, one-sided t = {t_stat:.1f} (need > 1.645)"
        )
        assert t_stat > 1.645  # positive at 95% confidence


# ---------------------------------------------------------------------------
# Criterion 7: localization resolution bound
# ---------------------------------------------------------------------------

def test_localization_bound():
    """OMP on the 70x60x60 grid: exact on-grid recovery, cell-bounded off-grid.

    Runs with the full-scale 64x64 half-wavelength aperture, whose radiative
    near field (Rayleigh distance ~170 m) spans the whole 20-155 m grid.

    The off-grid cell bound is a resolution-relative statement, so it is
    evaluated where the grid's own cells are resolvable: discriminating
    adjacent distance rings (2.29 m apart, uniform in d) takes a ring-to-ring
    Fresnel phase k * r_eff^2/2 * (ring / d^2); at d = 150 m that would
    demand a ~17 m aperture, so no physical array localizes far rings to one
    cell, and the generator's own reference numbers (mean distance error
    above one ring spacing) show the same.  Within d <= 60 m the 64x64
    aperture's margin is solid and the one-cell bound must hold.
    """
    with criterion("localization resolution bound (70x60x60 grid)", 300.0):
        o_bs = np.array([0.0, 0.0, 65.0])
        array = ArrayGeometry.half_wavelength(64, 64, F_C, tuple(o_bs))
        grid = LocalizationGrid.default(array, F_C, o_bs)
        assert grid.grid.n_theta == 70 and grid.grid.n_phi == 60 and grid.grid.n_r == 60
        pos = array.element_positions
        lam = SPEED_OF_LIGHT / F_C
        rng = np.random.default_rng(4242)

        def channel_at(point):
            d = np.linalg.norm(point - pos, axis=1)
            return lam / (4 * math.pi * d) * np.exp(-2j * math.pi * F_C * d / SPEED_OF_LIGHT)

        # on-grid: exact recovery anywhere on the grid
        ks = [int(rng.integers(1, grid.size + 1)) for _ in range(10)]
        truths = [grid.point_of(k) for k in ks]
        h_mat = np.stack([channel_at(p) for p in truths], axis=1)
        for res, k in zip(localize_batch(h_mat, grid, truths), ks):
            assert res.err_3d == 0.0
            assert res.selected_tuple == grid.tuple_of(k)
        # omp_localize agrees with the batched path
        direct = omp_localize(h_mat[:, 0], grid, truths[0])
        assert direct.err_3d == 0.0 and direct.selected_tuple == grid.tuple_of(ks[0])

        # off-grid within the resolvable part of the coverage region
        bound = worst_cell_diagonal(grid)
        offs = []
        while len(offs) < 12:
            th = rng.uniform(-70.0, 70.0)
            ph = rng.uniform(62.0, 148.0)
            d = rng.uniform(22.0, 60.0)
            p = polar_to_cartesian(th, ph, d, o_bs)
            if p[2] > 1.0:  # keep the synthetic source above ground
                offs.append(p)
        h_mat = np.stack([channel_at(p) for p in offs], axis=1)
        errs = [r.err_3d for r in localize_batch(h_mat, grid, offs)]
        print(f"\n  off-grid errors: max {max(errs):.2f} m vs cell-diagonal bound {bound:.2f} m")
        assert max(errs) <= bound


# ---------------------------------------------------------------------------
# Criterion 8: statistics plausibility
# ---------------------------------------------------------------------------

def test_statistics_plausibility(desk_dataset):
    with criterion(
        "statistics plausibility (desk-scale dataset)", 600.0, extra_time=_BUILD_TIMES["desk"]
    ):
        report = dataio.dataset_report(desk_dataset)
        ds_ns = report.mean_rms_delay_spread_s * 1e9
        print(
            f"\n  mean path count      {report.mean_path_count:6.2f}  band [1, 4]     full-scale reference 2.53"
            f"\n  mean RMS delay sprd  {ds_ns:6.2f}  band [0, 20] ns full-scale reference 2.17 ns"
            f"\n  LoS fraction         {report.los_fraction:6.3f}  band [0.7, 1]   full-scale reference 0.9335"
        )
        assert 1.0 <= report.mean_path_count <= 4.0
        assert 0.0 <= ds_ns <= 20.0
        assert 0.7 <= report.los_fraction <= 1.0
        assert report.total_samples == 2000


# ---------------------------------------------------------------------------
# Criterion 9: determinism
# ---------------------------------------------------------------------------

def _digest_tree(root):
    out = {}
    for p in sorted(root.rglob("*")):
        if p.is_file():
            out[str(p.relative_to(root))] = dataio.file_digest(p)
    return out


def test_determinism_across_runs_and_workers(tmp_path):
    with criterion("byte determinism incl. worker counts", 600.0):
        cfg = config_from_dict(dict(DETERMINISM_CONFIG))
        roots = [tmp_path / name for name in ("a", "b", "c")]
        generate_dataset(cfg, roots[0], workers=1)
        generate_dataset(cfg, roots[1], workers=1)
        generate_dataset(cfg, roots[2], workers=2)
        trees = [_digest_tree(r) for r in roots]
        assert trees[0] == trees[1], "re-run with identical config changed bytes"
        assert trees[0] == trees[2], "worker count changed bytes"
        manifests = [(r / "manifest.json").read_bytes() for r in roots]
        assert manifests[0] == manifests[1] == manifests[2]
