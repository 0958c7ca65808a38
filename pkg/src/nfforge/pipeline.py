"""End-to-end dataset generation: scene -> trajectory -> RT -> labels -> disk.

Work is partitioned by city; cities can run in a process pool, and because
every random draw derives from (master seed, city, trajectory) the output
bytes are identical for any worker count.  Completed trajectory directories
are skipped on re-run, so interrupted generations resume per trajectory.
"""

from __future__ import annotations

import json
import logging
import shutil
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import dataio
from .channel import CsiTensor, assemble_channel, center_subcarrier_index, subcarrier_frequencies
from .codebook import Codebook
from .config import RunConfig
from .dataio import TrajectoryArtifacts, write_trajectory
from .errors import DegenerateChannelError, NfforgeError
from .labels import gps_observe, label_beams, los_indicator
from .raytrace import ArrayGeometry, build_faces, rms_delay_spread, trace_paths
from .scene import generate_scene, scene_to_dict
from .sensors import lidar_scan, render_view
from .trajectory import MODE_BY_ID, simulate_trajectory

log = logging.getLogger(__name__)

_TAG_SCENE = 0xA
_TAG_TRAJ = 0xB
_TAG_GPS = 0xC


def derive_seed(master: int, *tags: int) -> int:
    """Stable child seed for a namespaced stream."""
    return int(np.random.SeedSequence([master, *tags]).generate_state(1, dtype=np.uint64)[0])


def make_array(config: RunConfig) -> ArrayGeometry:
    return ArrayGeometry(config.m_y, config.m_z, config.spacing, (0.0, 0.0, config.bs_height))


def _expected_files(t_frames: int) -> list[str]:
    names = ["csi.bin", "labels.json"]
    for i in range(t_frames):
        names += [f"cloud_{i:04d}.bin", f"view_{i:04d}_depth.pgm", f"view_{i:04d}_sem.pgm"]
    return names


def generate_city(config: RunConfig, out_root: Path, city: int):
    """Generate one city's scene and trajectories; returns manifest pieces."""
    out_root = Path(out_root)
    scene_seed = derive_seed(config.seed, _TAG_SCENE, city)
    scene = generate_scene(scene_seed, config.scene.to_params(config.bs_height))
    city_dir = out_root / "cities" / dataio.city_dirname(city)
    city_dir.mkdir(parents=True, exist_ok=True)
    scene_rel = f"cities/{dataio.city_dirname(city)}/scene.json"
    dataio.dump_json(scene_to_dict(scene), out_root / scene_rel)

    faces = build_faces(scene)
    array = make_array(config)
    freqs = subcarrier_frequencies(config.f_c, config.delta_f, config.k_subcarriers)
    k_center = center_subcarrier_index(freqs, config.f_c)
    codebook = Codebook(config.codebook, array, config.f_c, scene.bs_position)
    p_r = config.resolved_p_r

    entries = []
    failures = []
    for idx in range(config.trajectories_per_city):
        traj_dir = city_dir / dataio.trajectory_dirname(idx)
        if _complete(traj_dir, config.t_frames):
            entries.append(_entry_from_disk(out_root, city, idx, traj_dir))
            continue
        mode = MODE_BY_ID[config.modes[idx % len(config.modes)]]
        traj_seed = derive_seed(config.seed, _TAG_TRAJ, city, idx)
        try:
            entry = _generate_trajectory(
                config, scene, faces, array, codebook, freqs, k_center, p_r,
                out_root, city, idx, mode.id, traj_seed,
            )
            entries.append(entry)
        except NfforgeError as e:
            if traj_dir.exists():
                shutil.rmtree(traj_dir)
            failures.append({"city": city, "trajectory": idx, "mode_id": mode.id, "error": str(e)})
            log.warning("city %d traj %d (%s) failed: %s", city, idx, mode.name, e)
    return city, entries, failures, scene_rel


def _complete(traj_dir: Path, t_frames: int) -> bool:
    if not traj_dir.is_dir():
        return False
    for name in _expected_files(t_frames):
        if not (traj_dir / name).exists():
            return False
    try:
        json.loads((traj_dir / "labels.json").read_text())
    except (json.JSONDecodeError, OSError):
        return False
    return True


def _entry_from_disk(root: Path, city: int, idx: int, traj_dir: Path) -> dict:
    labels = json.loads((traj_dir / "labels.json").read_text())
    files = {}
    for p in sorted(traj_dir.iterdir()):
        files[p.name] = {"bytes": p.stat().st_size, "digest": dataio.file_digest(p)}
    rel = traj_dir.relative_to(root)
    return {
        "city": city,
        "index": idx,
        "mode_id": labels["mode_id"],
        "seed": labels["seed"],
        "dir": str(rel).replace("\\", "/"),
        "frames": len(labels["frames"]),
        "los_count": sum(1 for fl in labels["frames"] if fl["los"]),
        "files": files,
    }


def _generate_trajectory(
    config: RunConfig,
    scene,
    faces,
    array,
    codebook,
    freqs,
    k_center,
    p_r,
    out_root: Path,
    city: int,
    idx: int,
    mode_id: int,
    traj_seed: int,
) -> dict:
    mode = MODE_BY_ID[mode_id]
    traj = simulate_trajectory(scene, mode, traj_seed, config.t_frames, config.dt)

    frames_h = []
    frame_labels = []
    clouds = []
    depths = []
    semantics = []
    for f_idx, pose in enumerate(traj.frames):
        pathset = trace_paths(
            scene, array, pose.position, config.f_c, config.max_depth,
            scalar_tm_approx=config.scalar_tm_approx,
            ground_roughness_m=config.ground_roughness_m, faces=faces,
        )
        h_mk = assemble_channel(pathset, freqs)
        frames_h.append(h_mk)
        los = los_indicator(pathset, mode=config.los_label_mode, reference_index=array.reference_index)
        h_c = h_mk[:, k_center]
        try:
            label = label_beams(h_c, codebook, p_r, config.sigma2, los=los)
            degenerate = False
        except DegenerateChannelError:
            label = None
            degenerate = True
        gps = gps_observe(pose.position, config.sigma2_gps, derive_seed(config.seed, _TAG_GPS, city, idx, f_idx))
        ref_paths = pathset[array.reference_index]
        frame_labels.append(
            {
                "t": pose.t,
                "gt_pos": [float(v) for v in pose.position],
                "gps": [float(v) for v in gps.u_tilde],
                "mode_id": mode.id,
                "los": bool(los),
                "degenerate": degenerate,
                "top5_global": list(label.top5_global) if label else [0, 0, 0, 0, 0],
                "top5_tuples": [list(t) for t in label.top5_tuples] if label else [[0, 0, 0]] * 5,
                "top5_gains": list(label.top5_gains) if label else [0.0] * 5,
                "n_paths_ref": len(ref_paths),
                "rms_delay_spread_s": rms_delay_spread(ref_paths) if ref_paths else 0.0,
            }
        )
        clouds.append(lidar_scan(scene, pose.position, config.lidar_points, uav_radius=config.uav_radius).points)
        view = render_view(
            scene, pose.position,
            width=config.image_size, height=config.image_size, uav_radius=config.uav_radius,
        )
        depths.append(view.depth)
        semantics.append(view.semantic)

    tensor = CsiTensor.from_frames(frames_h, config.f_c, config.delta_f)
    artifacts = TrajectoryArtifacts(
        city=city,
        index=idx,
        mode_id=mode.id,
        seed=traj_seed,
        csi=tensor.data,
        frame_labels=frame_labels,
        clouds=clouds,
        depths=depths,
        semantics=semantics,
    )
    return write_trajectory(out_root, artifacts)


def generate_dataset(config: RunConfig, out_root: Path, workers: int | None = None) -> dict:
    """Run the full pipeline; returns {'failures': [...], 'trajectories': int}."""
    config.validate()
    out_root = Path(out_root)
    out_root.mkdir(parents=True, exist_ok=True)
    n_workers = workers if workers is not None else config.workers

    results = []
    cities = list(range(config.cities))
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            futures = [pool.submit(generate_city, config, out_root, c) for c in cities]
            for fut in futures:
                results.append(fut.result())
    else:
        for c in cities:
            log.info("generating city %d/%d", c + 1, len(cities))
            results.append(generate_city(config, out_root, c))

    results.sort(key=lambda r: r[0])
    entries = [e for _, es, _, _ in results for e in es]
    failures = [f for _, _, fs, _ in results for f in fs]
    scenes = {c: rel for c, _, _, rel in results}

    counts = config.split_counts or dataio.derive_split_counts(config.cities)
    splits = dataio.split_by_city(cities, tuple(counts), config.seed)
    dataio.write_manifest(
        out_root,
        config.to_manifest_dict(),
        config.codebook.to_dict(),
        splits,
        entries,
        scenes,
    )
    if failures:
        dataio.dump_json({"failures": failures}, out_root / "failures.json")
    return {"failures": failures, "trajectories": len(entries)}
