import json

import numpy as np
import pytest

from nfforge import dataio
from nfforge.cli import main
from nfforge.config import config_from_dict, config_from_file
from nfforge.errors import ConfigError
from nfforge.pipeline import generate_dataset

TINY = {
    "seed": 424242,
    "k_subcarriers": 4,
    "m_y": 4,
    "m_z": 4,
    "t_frames": 4,
    "cities": 3,
    "trajectories_per_city": 2,
    "modes": [6, 7],
    "codebook": {"n_theta": 6, "n_phi": 5, "n_r": 4},
    "scene": {"building_count": [2, 4]},
    "lidar_points": 100,
    "image_size": 32,
}


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("tiny_ds")
    config = config_from_dict(dict(TINY))
    result = generate_dataset(config, root)
    assert result["failures"] == []
    return root


# ---------------------------------------------------------------------------
# Config
# ---------------------------------------------------------------------------

def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="jetpack"):
        config_from_dict({"seed": 1, "jetpack": True})


def test_unknown_nested_key_rejected():
    with pytest.raises(ConfigError, match="warp"):
        config_from_dict({"seed": 1, "codebook": {"warp": 9}})


def test_seed_mandatory():
    with pytest.raises(ConfigError, match="seed"):
        config_from_dict({"cities": 3})


def test_defaults_resolve():
    cfg = config_from_dict({"seed": 3})
    assert cfg.spacing == pytest.approx(299792458.0 / 7e9 / 2)
    assert cfg.resolved_p_r > 0
    doc = cfg.to_manifest_dict()
    assert doc["resolved"]["p_r"] == cfg.resolved_p_r
    # manifest dict round-trips through the validator
    cfg2 = config_from_dict(doc)
    assert cfg2.f_c == cfg.f_c


def test_config_file_parse_error(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{nope")
    with pytest.raises(ConfigError):
        config_from_file(p)


# ---------------------------------------------------------------------------
# Pipeline output
# ---------------------------------------------------------------------------

def test_generated_dataset_valid(tiny_dataset):
    ds = dataio.read_dataset(tiny_dataset)
    assert ds.verify() == []
    report = dataio.dataset_report(tiny_dataset)
    assert report.total_trajectories == 6
    assert report.total_samples == 24
    assert 0.0 <= report.los_fraction <= 1.0


def test_generated_labels_sane(tiny_dataset):
    ds = dataio.read_dataset(tiny_dataset)
    for rec in ds.samples():
        if rec.degenerate:
            continue
        assert rec.top5_gains[0] == 1.0
        assert all(a >= b for a, b in zip(rec.top5_gains, rec.top5_gains[1:]))
        assert len(set(rec.top5_global)) == 5
        assert np.isfinite(rec.csi).all()


def test_manifest_embeds_config(tiny_dataset):
    manifest = json.loads((tiny_dataset / "manifest.json").read_text())
    assert manifest["config"]["seed"] == TINY["seed"]
    assert manifest["config"]["resolved"]["element_spacing"] > 0
    assert manifest["codebook"]["n_theta"] == 6
    splits = manifest["splits"]
    assert sorted(splits["train"] + splits["val"] + splits["test"]) == [0, 1, 2]


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def test_cli_scene(tmp_path):
    out = tmp_path / "scene.json"
    assert main(["scene", "--seed", "7", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["seed"] == 7
    assert doc["bs"] == [0.0, 0.0, 65.0]
    assert all(20.0 <= b["height"] <= 60.0 for b in doc["buildings"])


def test_cli_generate_stats_validate(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(dict(TINY)))
    out = tmp_path / "ds"
    assert main(["generate", "--config", str(cfg_path), "--out", str(out)]) == 0
    assert main(["stats", "--dataset", str(out)]) == 0
    assert main(["validate", "--dataset", str(out)]) == 0
    # corrupt one byte: validate must fail with the integrity exit code
    victim = next((out / "cities").rglob("csi.bin"))
    raw = bytearray(victim.read_bytes())
    raw[-1] ^= 0x01
    victim.write_bytes(bytes(raw))
    assert main(["validate", "--dataset", str(out)]) == 4


def test_cli_config_error_exit_code(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"seed": 1, "bogus_key": 2}))
    assert main(["generate", "--config", str(cfg_path), "--out", str(tmp_path / "x")]) == 2


def test_cli_evaluate_and_plot(tiny_dataset, tmp_path):
    out = tmp_path / "report"
    assert main(
        ["evaluate", "--dataset", str(tiny_dataset), "--out", str(out), "--split", "test",
         "--localize", "--max-loc-frames", "3"]
    ) == 0
    assert (out / "report.json").exists()
    assert (out / "frame_scores.csv").exists()
    assert (out / "localization.csv").exists()
    assert (out / "rate_by_strategy.png").exists()
    assert (out / "gain_cdf.png").exists()
    report = json.loads((out / "report.json").read_text())
    assert report["cells"]["exhaustive"]["all"]["mean_norm_gain"] == pytest.approx(1.0)

    plot_dir = tmp_path / "figs"
    city = json.loads((tiny_dataset / "manifest.json").read_text())["trajectories"][0]["city"]
    assert main(["plot", "--dataset", str(tiny_dataset), "--out", str(plot_dir), "--city", str(city)]) == 0
    assert (plot_dir / "scene_rays.png").exists()
    assert (plot_dir / "beam_timeline.png").exists()


def test_plot_outputs_deterministic(tiny_dataset, tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    city = json.loads((tiny_dataset / "manifest.json").read_text())["trajectories"][0]["city"]
    assert main(["plot", "--dataset", str(tiny_dataset), "--out", str(a), "--city", str(city)]) == 0
    assert main(["plot", "--dataset", str(tiny_dataset), "--out", str(b), "--city", str(city)]) == 0
    assert (a / "scene_rays.png").read_bytes() == (b / "scene_rays.png").read_bytes()
    assert (a / "beam_timeline.png").read_bytes() == (b / "beam_timeline.png").read_bytes()


# ---------------------------------------------------------------------------
# Pipeline failure handling and resume
# ---------------------------------------------------------------------------

def test_infeasible_mode_quarantined(tmp_path):
    cfg = dict(TINY)
    cfg.update({"scene": {"building_count": [0, 0]}, "modes": [2], "cities": 3, "trajectories_per_city": 1})
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    out = tmp_path / "ds"
    assert main(["generate", "--config", str(cfg_path), "--out", str(out)]) == 3
    failures = json.loads((out / "failures.json").read_text())
    assert len(failures["failures"]) == 3
    assert all("WallHug" in f["error"] for f in failures["failures"])
    # no partial trajectory directories left behind
    assert not list((out / "cities").rglob("traj_*"))


def test_resume_reproduces_identical_bytes(tmp_path):
    from nfforge.dataio import file_digest

    config = config_from_dict(dict(TINY))
    full = tmp_path / "full"
    generate_dataset(config, full)
    before = {
        str(p.relative_to(full)): file_digest(p) for p in sorted(full.rglob("*")) if p.is_file()
    }
    # drop one trajectory and the manifest, then resume
    import shutil

    shutil.rmtree(full / "cities" / "city_001" / "traj_0001")
    (full / "manifest.json").unlink()
    generate_dataset(config, full)
    after = {
        str(p.relative_to(full)): file_digest(p) for p in sorted(full.rglob("*")) if p.is_file()
    }
    assert before == after
