"""Command-line entry point.

Subcommands: scene, generate, stats, validate, evaluate, plot.  Exit codes:
0 success, 2 config error, 3 generation failure, 4 integrity failure.
``NFFORGE_WORKERS`` overrides the configured worker count.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import baselines, dataio, plots
from .channel import center_subcarrier_index, subcarrier_frequencies
from .codebook import Codebook, PolarGrid
from .config import config_from_file
from .errors import (
    ChecksumError,
    ConfigError,
    DanglingReferenceError,
    FormatVersionError,
    IntegrityError,
    NfforgeError,
)
from .pipeline import generate_dataset
from .raytrace import ArrayGeometry, build_faces, trace_paths
from .scene import SceneParams, generate_scene, scene_from_dict, scene_to_dict
from .trajectory import MODE_BY_ID, simulate_trajectory

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GENERATION = 3
EXIT_INTEGRITY = 4

log = logging.getLogger("nfforge")


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nfforge", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("scene", help="generate a scene file")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", type=Path, required=True)
    s.add_argument("--buildings", type=int, nargs=2, metavar=("MIN", "MAX"), default=(6, 10))
    s.add_argument("--footprint", type=float, nargs=2, metavar=("MIN", "MAX"), default=(10.0, 24.0))
    s.add_argument("--road-spacing", type=float, default=40.0)
    s.add_argument("--bs-height", type=float, default=65.0)

    g = sub.add_parser("generate", help="generate a dataset from a config file")
    g.add_argument("--config", type=Path, required=True)
    g.add_argument("--out", type=Path, required=True)
    g.add_argument("--workers", type=int, default=None)

    st = sub.add_parser("stats", help="dataset statistics (recomputed + cross-checked)")
    st.add_argument("--dataset", type=Path, required=True)
    st.add_argument("--json", type=Path, default=None, help="also write the report as JSON")

    v = sub.add_parser("validate", help="verify digests, sizes, and references")
    v.add_argument("--dataset", type=Path, required=True)

    e = sub.add_parser("evaluate", help="run beam-training and localization baselines")
    e.add_argument("--dataset", type=Path, required=True)
    e.add_argument("--out", type=Path, required=True)
    e.add_argument("--split", default="test")
    e.add_argument("--strategies", nargs="+", default=list(baselines.STRATEGIES))
    e.add_argument("--localize", action="store_true", help="also run OMP localization on LoS frames")
    e.add_argument("--max-loc-frames", type=int, default=50)

    pl = sub.add_parser("plot", help="scene/ray/beam figures for one trajectory")
    pl.add_argument("--dataset", type=Path, required=True)
    pl.add_argument("--out", type=Path, required=True)
    pl.add_argument("--city", type=int, default=0)
    pl.add_argument("--trajectory", type=int, default=0)
    pl.add_argument("--frame", type=int, default=0)
    return p


def _cmd_scene(args) -> int:
    params = SceneParams(
        building_count=tuple(args.buildings),
        footprint_side=tuple(args.footprint),
        road_spacing=args.road_spacing,
        bs_height=args.bs_height,
    )
    scene = generate_scene(args.seed, params)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    dataio.dump_json(scene_to_dict(scene), args.out)
    print(f"wrote {args.out} ({len(scene.buildings)} buildings, {len(scene.roads)} roads)")
    return EXIT_OK


def _cmd_generate(args) -> int:
    config = config_from_file(args.config)
    workers = args.workers
    env = os.environ.get("NFFORGE_WORKERS")
    if workers is None and env:
        workers = int(env)
    result = generate_dataset(config, args.out, workers=workers)
    print(f"generated {result['trajectories']} trajectories at {args.out}")
    if result["failures"]:
        print(f"{len(result['failures'])} trajectories failed; see failures.json", file=sys.stderr)
        return EXIT_GENERATION
    return EXIT_OK


def _cmd_stats(args) -> int:
    report = dataio.dataset_report(args.dataset)
    doc = report.to_dict()
    print(json.dumps(doc, indent=2, sort_keys=True))
    if args.json:
        dataio.dump_json(doc, args.json)
    return EXIT_OK


def _cmd_validate(args) -> int:
    ds = dataio.read_dataset(args.dataset)
    problems = ds.verify()
    if problems:
        for p in problems:
            print(p, file=sys.stderr)
        return EXIT_INTEGRITY
    # Cross-check manifest counters against records too.
    dataio.dataset_report(args.dataset)
    print("dataset OK")
    return EXIT_OK


def _eval_frames(ds: dataio.Dataset, split: str):
    frames = [r for r in ds.samples(split) if not r.degenerate]
    if not frames:
        raise NfforgeError(f"split {split!r} has no usable frames")
    return frames


def _cmd_evaluate(args) -> int:
    ds = dataio.read_dataset(args.dataset)
    cfg = ds.manifest["config"]
    grid = PolarGrid.from_dict(ds.manifest["codebook"])
    f_c = cfg["f_c"]
    freqs = subcarrier_frequencies(f_c, cfg["delta_f"], cfg["k_subcarriers"])
    k_center = center_subcarrier_index(freqs, f_c)
    array = make_array_from_manifest(cfg)
    o_bs = np.array([0.0, 0.0, cfg["bs_height"]])
    codebook = Codebook(grid, array, f_c, o_bs)
    p_r = cfg["resolved"]["p_r"]
    sigma2 = cfg["sigma2"]

    raw = _eval_frames(ds, args.split)
    frames = [_EvalFrame(r, k_center) for r in raw]
    report = baselines.evaluate_dataset(frames, codebook, p_r, sigma2, strategies=tuple(args.strategies))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dataio.dump_json({"cells": report.cells, "split": args.split}, out / "report.json")
    with open(out / "frame_scores.csv", "w", newline="") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["trajectory", "frame", "mode_id", "los", "strategy", "rate", "norm_gain"]
        )
        writer.writeheader()
        for row in report.table_rows():
            writer.writerow(row)

    plots.plot_rate_by_strategy(report.cells, out / "rate_by_strategy.png")
    gains = {
        s: [sc.norm_gain for sc in report.scores if sc.strategy == s] for s in args.strategies
    }
    plots.plot_gain_cdf(gains, out / "gain_cdf.png")
    first_traj = frames[0].trajectory
    timeline = [
        {"t": r.t, "top5_global": r.top5_global, "top5_tuples": r.top5_tuples}
        for r in raw
        if r.trajectory == first_traj
    ]
    plots.plot_beam_timeline(timeline, out / "beam_timeline.png", title=first_traj)

    if args.localize:
        loc_grid = baselines.LocalizationGrid.default(array, f_c, o_bs)
        rows = []
        for r in raw[: args.max_loc_frames]:
            if not r.los:
                continue
            res = baselines.omp_localize(r.csi[:, k_center], loc_grid, r.gt_position)
            rows.append(
                {"trajectory": r.trajectory, "frame": r.frame, "err_3d": res.err_3d,
                 "err_dist": res.err_dist, "err_az_deg": res.err_az_deg, "err_zen_deg": res.err_zen_deg}
            )
        with open(out / "localization.csv", "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=["trajectory", "frame", "err_3d", "err_dist", "err_az_deg", "err_zen_deg"])
            writer.writeheader()
            writer.writerows(rows)
        if rows:
            mean_err = float(np.mean([row["err_3d"] for row in rows]))
            print(f"OMP localization: {len(rows)} frames, mean 3D error {mean_err:.2f} m")

    print(f"evaluation report written to {out}")
    return EXIT_OK


class _EvalFrame:
    """Adapter exposing the evaluator's expected attributes for a SampleRecord."""

    def __init__(self, record: dataio.SampleRecord, k_center: int):
        self.trajectory = record.trajectory
        self.frame = record.frame
        self.mode_id = record.mode_id
        self.los = record.los
        self.h = record.csi[:, k_center]


def _cmd_plot(args) -> int:
    ds = dataio.read_dataset(args.dataset)
    entry = next(
        (e for e in ds.manifest["trajectories"] if e["city"] == args.city and e["index"] == args.trajectory),
        None,
    )
    if entry is None:
        print(f"no trajectory {args.trajectory} in city {args.city}", file=sys.stderr)
        return EXIT_INTEGRITY
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    scene_doc = json.loads((ds.root / ds.manifest["scenes"][str(args.city)]).read_text())
    scene = scene_from_dict(scene_doc)
    labels = json.loads((ds.root / entry["dir"] / "labels.json").read_text())
    frames = labels["frames"]
    cfg = ds.manifest["config"]
    mode = MODE_BY_ID[entry["mode_id"]]
    traj = simulate_trajectory(scene, mode, entry["seed"], cfg["t_frames"], cfg["dt"])
    array = make_array_from_manifest(cfg)
    target = np.array(frames[args.frame]["gt_pos"])
    pathset = trace_paths(scene, array, target, cfg["f_c"], cfg["max_depth"], faces=build_faces(scene))
    plots.plot_scene_topview(
        scene, out / "scene_rays.png", trajectory=traj, pathset=pathset,
        antenna=array.reference_index, target=target,
    )
    plots.plot_beam_timeline(frames, out / "beam_timeline.png", title=entry["dir"])
    print(f"figures written to {out}")
    return EXIT_OK


def make_array_from_manifest(cfg: dict) -> ArrayGeometry:
    return ArrayGeometry(cfg["m_y"], cfg["m_z"], cfg["resolved"]["element_spacing"], (0.0, 0.0, cfg["bs_height"]))


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "scene": _cmd_scene,
        "generate": _cmd_generate,
        "stats": _cmd_stats,
        "validate": _cmd_validate,
        "evaluate": _cmd_evaluate,
        "plot": _cmd_plot,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (ChecksumError, DanglingReferenceError, FormatVersionError, IntegrityError) as e:
        print(f"integrity error: {e}", file=sys.stderr)
        return EXIT_INTEGRITY
    except NfforgeError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_GENERATION


if __name__ == "__main__":
    sys.exit(main())
