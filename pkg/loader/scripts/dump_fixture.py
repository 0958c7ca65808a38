"""Canonical field dump of a dataset via the primary (Python) reader.

The TypeScript loader's test suite generates the same structure from its own
parse and deep-compares; numeric fields survive JSON round-trips exactly
(shortest-repr float64 both sides), and array payloads are compared through
digests of their canonical little-endian byte layout.
"""

import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from nfforge import dataio


def frame_csi_digest(csi: np.ndarray) -> str:
    planes = np.stack([csi.real, csi.imag], axis=-1).astype("<f4")
    return hashlib.sha256(np.ascontiguousarray(planes).tobytes()).hexdigest()[:16]


def main(root: str, out: str) -> None:
    ds = dataio.read_dataset(Path(root))
    samples = []
    for rec in ds.samples():
        tdir = Path(root) / rec.trajectory
        samples.append(
            {
                "trajectory": rec.trajectory,
                "frame": rec.frame,
                "t": rec.t,
                "mode_id": rec.mode_id,
                "los": rec.los,
                "degenerate": rec.degenerate,
                "top5_global": rec.top5_global,
                "top5_tuples": rec.top5_tuples,
                "top5_gains": rec.top5_gains,
                "gps": [float(v) for v in rec.gps],
                "gt_pos": [float(v) for v in rec.gt_position],
                "n_paths_ref": rec.n_paths_ref,
                "rms_delay_spread_s": rec.rms_delay_spread_s,
                "csi_digest": frame_csi_digest(rec.csi),
                "csi00": [float(rec.csi[0, 0].real), float(rec.csi[0, 0].imag)],
                "cloud_digest": dataio.file_digest(tdir / f"cloud_{rec.frame:04d}.bin"),
                "depth_digest": dataio.file_digest(tdir / f"view_{rec.frame:04d}_depth.pgm"),
                "sem_digest": dataio.file_digest(tdir / f"view_{rec.frame:04d}_sem.pgm"),
            }
        )
    doc = {
        "split_sample_counts": {
            split: sum(1 for _ in ds.samples(split)) for split in ("train", "val", "test")
        },
        "trajectories": [
            {"dir": e["dir"], "mode_id": e["mode_id"], "seed": e["seed"]}
            for e in ds.manifest["trajectories"]
        ],
        "samples": samples,
    }
    Path(out).write_text(json.dumps(doc, indent=1, sort_keys=True))


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
