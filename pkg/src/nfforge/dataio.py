"""On-disk dataset: directory layout, binary formats, manifest, integrity.

Layout (one directory per trajectory, CSI as a single binary per trajectory):

    <root>/manifest.json
    <root>/cities/city_CCC/scene.json
    <root>/cities/city_CCC/traj_TTTT/csi.bin
                                     labels.json
                                     cloud_FFFF.bin
                                     view_FFFF_depth.pgm
                                     view_FFFF_sem.pgm

Binary headers and the quantization rules are documented byte-for-byte in
docs/FORMAT.md; that document is the contract external loaders implement
against.  All writes are byte-deterministic: fixed key order, canonical
float repr, little-endian float32 payloads, and file digests (first 8 bytes
of SHA-256, hex) recorded in the manifest.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import (
    ChecksumError,
    DanglingReferenceError,
    FormatVersionError,
    IntegrityError,
    ShapeMismatchError,
)

FORMAT_VERSION = 1
CSI_MAGIC = b"NFCS"
CLOUD_MAGIC = b"NFPC"
_CSI_HEADER = struct.Struct("<4sIIII12x")  # magic, version, M, K, T -> 32 bytes
_CLOUD_HEADER = struct.Struct("<4sII4x")  # magic, version, count -> 16 bytes
DEPTH_UNITS_PER_METER = 100  # depth graymaps store centimeters


def file_digest(path: Path) -> str:
    """64-bit file digest: first 8 bytes of SHA-256, lowercase hex."""
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


def dump_json(obj, path: Path) -> None:
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Binary payloads
# ---------------------------------------------------------------------------

def write_csi(path: Path, data: np.ndarray) -> None:
    """(M, K, T, 2) tensor as little-endian float32, C order, 32-byte header."""
    if data.ndim != 4 or data.shape[-1] != 2:
        raise ShapeMismatchError(f"CSI payload must be (M, K, T, 2), got {data.shape}")
    m, k, t, _ = data.shape
    header = _CSI_HEADER.pack(CSI_MAGIC, FORMAT_VERSION, m, k, t)
    Path(path).write_bytes(header + np.ascontiguousarray(data, dtype="<f4").tobytes())


def read_csi(path: Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _CSI_HEADER.size:
        raise ShapeMismatchError(f"{path}: truncated CSI header")
    magic, version, m, k, t = _CSI_HEADER.unpack_from(raw)
    if magic != CSI_MAGIC:
        raise FormatVersionError(f"{path}: bad CSI magic {magic!r}")
    if version != FORMAT_VERSION:
        raise FormatVersionError(f"{path}: CSI format version {version}, expected {FORMAT_VERSION}")
    expected = _CSI_HEADER.size + m * k * t * 2 * 4
    if len(raw) != expected:
        raise ShapeMismatchError(f"{path}: CSI payload is {len(raw)} bytes, header implies {expected}")
    flat = np.frombuffer(raw, dtype="<f4", offset=_CSI_HEADER.size)
    return flat.reshape(m, k, t, 2)


def write_cloud(path: Path, points: np.ndarray) -> None:
    """(P, 3) float32 point cloud with a 16-byte header."""
    pts = np.ascontiguousarray(points, dtype="<f4")
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ShapeMismatchError(f"cloud payload must be (P, 3), got {points.shape}")
    header = _CLOUD_HEADER.pack(CLOUD_MAGIC, FORMAT_VERSION, pts.shape[0])
    Path(path).write_bytes(header + pts.tobytes())


def read_cloud(path: Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _CLOUD_HEADER.size:
        raise ShapeMismatchError(f"{path}: truncated cloud header")
    magic, version, count = _CLOUD_HEADER.unpack_from(raw)
    if magic != CLOUD_MAGIC:
        raise FormatVersionError(f"{path}: bad cloud magic {magic!r}")
    if version != FORMAT_VERSION:
        raise FormatVersionError(f"{path}: cloud format version {version}, expected {FORMAT_VERSION}")
    expected = _CLOUD_HEADER.size + count * 12
    if len(raw) != expected:
        raise ShapeMismatchError(f"{path}: cloud payload is {len(raw)} bytes, header implies {expected}")
    return np.frombuffer(raw, dtype="<f4", offset=_CLOUD_HEADER.size).reshape(count, 3)


def write_depth_pgm(path: Path, depth_m: np.ndarray) -> None:
    """Depth as 16-bit binary PGM in centimeters (0 = no hit), clipped at 655.35 m."""
    cm = np.clip(np.round(depth_m * DEPTH_UNITS_PER_METER), 0, 65535).astype(">u2")
    h, w = cm.shape
    Path(path).write_bytes(f"P5\n{w} {h}\n65535\n".encode() + cm.tobytes())


def write_semantic_pgm(path: Path, semantic: np.ndarray) -> None:
    sem = np.ascontiguousarray(semantic, dtype=np.uint8)
    h, w = sem.shape
    Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode() + sem.tobytes())


def read_pgm(path: Path) -> np.ndarray:
    """Binary PGM reader for the two maps this package writes."""
    raw = Path(path).read_bytes()
    parts = raw.split(b"\n", 3)
    if len(parts) < 4 or parts[0] != b"P5":
        raise ShapeMismatchError(f"{path}: not a binary PGM")
    w, h = (int(v) for v in parts[1].split())
    maxval = int(parts[2])
    payload = parts[3]
    dtype = ">u2" if maxval > 255 else np.uint8
    arr = np.frombuffer(payload, dtype=dtype, count=w * h)
    if arr.size != w * h:
        raise ShapeMismatchError(f"{path}: PGM payload shorter than {w}x{h}")
    return arr.reshape(h, w)


def read_depth_m(path: Path) -> np.ndarray:
    return read_pgm(path).astype(np.float64) / DEPTH_UNITS_PER_METER


# ---------------------------------------------------------------------------
# Trajectory directory
# ---------------------------------------------------------------------------

@dataclass
class TrajectoryArtifacts:
    """Everything one trajectory contributes to the dataset."""

    city: int
    index: int
    mode_id: int
    seed: int
    csi: np.ndarray  # (M, K, T, 2) float (cast to float32 on write)
    frame_labels: list[dict]  # one dict per frame, see pipeline
    clouds: list[np.ndarray]
    depths: list[np.ndarray]
    semantics: list[np.ndarray]


def trajectory_dirname(index: int) -> str:
    return f"traj_{index:04d}"


def city_dirname(city: int) -> str:
    return f"city_{city:03d}"


def write_trajectory(root: Path, art: TrajectoryArtifacts) -> dict:
    """Write one trajectory directory; returns its manifest entry."""
    t = art.csi.shape[2]
    if not (len(art.frame_labels) == len(art.clouds) == len(art.depths) == len(art.semantics) == t):
        raise ShapeMismatchError(
            f"modality frame counts disagree: csi={t}, labels={len(art.frame_labels)}, "
            f"clouds={len(art.clouds)}, views={len(art.depths)}/{len(art.semantics)}"
        )
    rel = Path("cities") / city_dirname(art.city) / trajectory_dirname(art.index)
    tdir = Path(root) / rel
    tdir.mkdir(parents=True, exist_ok=True)

    write_csi(tdir / "csi.bin", art.csi)
    dump_json({"mode_id": art.mode_id, "seed": art.seed, "frames": art.frame_labels}, tdir / "labels.json")
    for i in range(t):
        write_cloud(tdir / f"cloud_{i:04d}.bin", art.clouds[i])
        write_depth_pgm(tdir / f"view_{i:04d}_depth.pgm", art.depths[i])
        write_semantic_pgm(tdir / f"view_{i:04d}_sem.pgm", art.semantics[i])

    files = {}
    for p in sorted(tdir.iterdir()):
        files[p.name] = {"bytes": p.stat().st_size, "digest": file_digest(p)}
    return {
        "city": art.city,
        "index": art.index,
        "mode_id": art.mode_id,
        "seed": art.seed,
        "dir": str(rel).replace("\\", "/"),
        "frames": t,
        "los_count": sum(1 for fl in art.frame_labels if fl["los"]),
        "files": files,
    }


# ---------------------------------------------------------------------------
# Splits
# ---------------------------------------------------------------------------

def derive_split_counts(n_cities: int, ratios: tuple[int, int, int] = (22, 4, 4)) -> tuple[int, int, int]:
    """Proportional split counts (largest remainder), at least one city each."""
    if n_cities < 3:
        raise ValueError("need at least 3 cities to form train/val/test splits")
    total = sum(ratios)
    raw = [n_cities * r / total for r in ratios]
    counts = [max(1, int(v)) for v in raw]
    while sum(counts) > n_cities:
        counts[counts.index(max(counts))] -= 1
    remainders = [v - int(v) for v in raw]
    while sum(counts) < n_cities:
        i = int(np.argmax(remainders))
        counts[i] += 1
        remainders[i] = -1.0
    return tuple(counts)


def split_by_city(cities: Sequence[int], counts: tuple[int, int, int], seed: int) -> dict[str, list[int]]:
    """Deterministic disjoint city assignment honoring the requested counts."""
    if len(cities) < 3:
        raise ValueError("need at least 3 cities to form train/val/test splits")
    if sum(counts) != len(cities):
        raise ValueError(f"split counts {counts} do not sum to {len(cities)} cities")
    order = list(cities)
    rng = np.random.default_rng([seed, 0xC17])
    rng.shuffle(order)
    n_tr, n_va, n_te = counts
    return {
        "train": sorted(order[:n_tr]),
        "val": sorted(order[n_tr : n_tr + n_va]),
        "test": sorted(order[n_tr + n_va : n_tr + n_va + n_te]),
    }


# ---------------------------------------------------------------------------
# Manifest and reading
# ---------------------------------------------------------------------------

def write_manifest(
    root: Path,
    config: dict,
    codebook_spec: dict,
    splits: dict[str, list[int]],
    trajectories: list[dict],
    scenes: dict[int, str],
) -> None:
    manifest = {
        "format_version": FORMAT_VERSION,
        "config": config,
        "codebook": codebook_spec,
        "splits": splits,
        "scenes": {str(c): p for c, p in sorted(scenes.items())},
        "trajectories": sorted(trajectories, key=lambda e: (e["city"], e["index"])),
    }
    dump_json(manifest, Path(root) / "manifest.json")


@dataclass
class SampleRecord:
    """One frame's synchronized bundle; heavyweight modalities load lazily."""

    root: Path
    city: int
    trajectory: str
    frame: int
    mode_id: int
    t: float
    los: bool
    degenerate: bool
    top5_global: list[int]
    top5_tuples: list[list[int]]
    top5_gains: list[float]
    gps: np.ndarray
    gt_position: np.ndarray
    n_paths_ref: int
    rms_delay_spread_s: float
    csi: np.ndarray  # (M, K) complex64 for this frame
    _dir: Path = field(repr=False, default=None)

    @property
    def h(self) -> np.ndarray:
        """Alias used by the evaluators: per-frame channel matrix."""
        return self.csi

    def load_cloud(self) -> np.ndarray:
        return read_cloud(self._dir / f"cloud_{self.frame:04d}.bin")

    def load_depth(self) -> np.ndarray:
        return read_depth_m(self._dir / f"view_{self.frame:04d}_depth.pgm")

    def load_semantic(self) -> np.ndarray:
        return read_pgm(self._dir / f"view_{self.frame:04d}_sem.pgm")


class Dataset:
    """Read handle over a written dataset."""

    def __init__(self, root: Path):
        self.root = Path(root)
        manifest_path = self.root / "manifest.json"
        if not manifest_path.exists():
            raise DanglingReferenceError(f"no manifest at {manifest_path}")
        self.manifest = json.loads(manifest_path.read_text())
        version = self.manifest.get("format_version")
        if version != FORMAT_VERSION:
            raise FormatVersionError(f"dataset format version {version}, reader supports {FORMAT_VERSION}")

    # -- iteration -----------------------------------------------------
    def split_cities(self, split: Optional[str]) -> Optional[set[int]]:
        if split is None:
            return None
        if split not in self.manifest["splits"]:
            raise KeyError(f"unknown split {split!r}")
        return set(self.manifest["splits"][split])

    def trajectory_entries(self, split: Optional[str] = None) -> list[dict]:
        cities = self.split_cities(split)
        return [
            e for e in self.manifest["trajectories"] if cities is None or e["city"] in cities
        ]

    def samples(self, split: Optional[str] = None) -> Iterator[SampleRecord]:
        """Lazy per-trajectory loading; one CSI read serves all its frames."""
        for entry in self.trajectory_entries(split):
            tdir = self.root / entry["dir"]
            labels = json.loads((tdir / "labels.json").read_text())
            csi = read_csi(tdir / "csi.bin")
            for i, fl in enumerate(labels["frames"]):
                plane = csi[:, :, i, :]
                yield SampleRecord(
                    root=self.root,
                    city=entry["city"],
                    trajectory=entry["dir"],
                    frame=i,
                    mode_id=labels["mode_id"],
                    t=fl["t"],
                    los=fl["los"],
                    degenerate=fl.get("degenerate", False),
                    top5_global=fl["top5_global"],
                    top5_tuples=fl["top5_tuples"],
                    top5_gains=fl["top5_gains"],
                    gps=np.array(fl["gps"]),
                    gt_position=np.array(fl["gt_pos"]),
                    n_paths_ref=fl["n_paths_ref"],
                    rms_delay_spread_s=fl["rms_delay_spread_s"],
                    csi=plane[..., 0] + 1j * plane[..., 1],
                    _dir=tdir,
                )

    # -- integrity ------------------------------------------------------
    def verify(self) -> list[str]:
        """Recreate every digest; returns a list of problems (empty = clean)."""
        problems = []
        for entry in self.manifest["trajectories"]:
            tdir = self.root / entry["dir"]
            for name, meta in entry["files"].items():
                p = tdir / name
                if not p.exists():
                    problems.append(f"missing file: {entry['dir']}/{name}")
                    continue
                if p.stat().st_size != meta["bytes"]:
                    problems.append(
                        f"size mismatch: {entry['dir']}/{name} is {p.stat().st_size}, manifest says {meta['bytes']}"
                    )
                    continue
                if file_digest(p) != meta["digest"]:
                    problems.append(f"digest mismatch: {entry['dir']}/{name}")
        for city, scene_rel in self.manifest.get("scenes", {}).items():
            if not (self.root / scene_rel).exists():
                problems.append(f"missing scene file for city {city}: {scene_rel}")
        return problems

    def verify_or_raise(self) -> None:
        problems = self.verify()
        if problems:
            if any("missing" in p for p in problems):
                raise DanglingReferenceError("; ".join(problems))
            raise ChecksumError("; ".join(problems))


def read_dataset(root: Path) -> Dataset:
    return Dataset(root)


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SplitStats:
    trajectories: int
    samples: int
    los: int
    nlos: int


@dataclass(frozen=True)
class DatasetReport:
    splits: dict[str, SplitStats]
    total_samples: int
    total_trajectories: int
    mean_path_count: float
    mean_rms_delay_spread_s: float
    los_fraction: float

    def to_dict(self) -> dict:
        return {
            "splits": {
                k: {"trajectories": v.trajectories, "samples": v.samples, "los": v.los, "nlos": v.nlos}
                for k, v in self.splits.items()
            },
            "total_samples": self.total_samples,
            "total_trajectories": self.total_trajectories,
            "mean_path_count": self.mean_path_count,
            "mean_rms_delay_spread_s": self.mean_rms_delay_spread_s,
            "los_fraction": self.los_fraction,
        }


def dataset_report(root: Path) -> DatasetReport:
    """Recompute statistics from records and cross-check the manifest."""
    ds = read_dataset(root)
    split_stats = {}
    counts: list[int] = []
    spreads: list[float] = []
    los_flags: list[bool] = []
    total_samples = 0
    total_traj = 0
    for split in ("train", "val", "test"):
        n_traj = 0
        n_samples = 0
        n_los = 0
        for entry in ds.trajectory_entries(split):
            tdir = ds.root / entry["dir"]
            labels = json.loads((tdir / "labels.json").read_text())
            frames = labels["frames"]
            n_traj += 1
            n_samples += len(frames)
            recomputed_los = sum(1 for fl in frames if fl["los"])
            if recomputed_los != entry["los_count"]:
                raise IntegrityError(
                    f"{entry['dir']}: manifest los_count {entry['los_count']} != recomputed {recomputed_los}"
                )
            n_los += recomputed_los
            for fl in frames:
                counts.append(fl["n_paths_ref"])
                los_flags.append(fl["los"])
                if fl["n_paths_ref"] > 0:
                    spreads.append(fl["rms_delay_spread_s"])
        split_stats[split] = SplitStats(n_traj, n_samples, n_los, n_samples - n_los)
        total_samples += n_samples
        total_traj += n_traj
    if total_traj != len(ds.manifest["trajectories"]):
        raise IntegrityError("split city lists do not cover every trajectory exactly once")
    return DatasetReport(
        splits=split_stats,
        total_samples=total_samples,
        total_trajectories=total_traj,
        mean_path_count=float(np.mean(counts)) if counts else 0.0,
        mean_rms_delay_spread_s=float(np.mean(spreads)) if spreads else 0.0,
        los_fraction=float(np.mean(los_flags)) if los_flags else 0.0,
    )
