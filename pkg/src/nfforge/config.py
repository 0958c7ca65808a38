"""Declarative run configuration.

A config fully determines a dataset: every tunable of the generator lives
here, unknown keys are rejected, and the resolved values (including derived
defaults like the half-wavelength element spacing and the receive power
that pins boresight SNR) are embedded into the dataset manifest, so a
dataset is reproducible from its own manifest.

Seeds are mandatory: there is no wall-clock fallback.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .channel import default_noise_model
from .codebook import PolarGrid
from .errors import ConfigError
from .materials import SPEED_OF_LIGHT
from .scene import SceneParams


@dataclass(frozen=True)
class SceneConfig:
    building_count: tuple[int, int] = (6, 10)
    footprint_side: tuple[float, float] = (10.0, 24.0)
    road_spacing: float = 40.0
    road_width: float = 6.0
    min_gap: float = 2.0
    edge_margin: float = 1.0
    placement_attempts: int = 200

    def to_params(self, bs_height: float) -> SceneParams:
        return SceneParams(
            building_count=tuple(self.building_count),
            footprint_side=tuple(self.footprint_side),
            road_spacing=self.road_spacing,
            road_width=self.road_width,
            min_gap=self.min_gap,
            edge_margin=self.edge_margin,
            placement_attempts=self.placement_attempts,
            bs_height=bs_height,
        )


@dataclass(frozen=True)
class RunConfig:
    seed: int
    f_c: float = 7e9
    delta_f: float = 30e3
    k_subcarriers: int = 16
    m_y: int = 8
    m_z: int = 8
    element_spacing: float | None = None  # None -> lambda/2 at f_c
    t_frames: int = 20
    dt: float = 0.1
    bs_height: float = 65.0
    p_r: float | None = None  # None -> 20 dB boresight LoS SNR at 100 m, 64x64 reference
    sigma2: float = 1.0
    sigma2_gps: float = 0.5
    codebook: PolarGrid = field(default_factory=PolarGrid)
    scene: SceneConfig = field(default_factory=SceneConfig)
    cities: int = 5
    trajectories_per_city: int = 20
    modes: tuple[int, ...] = (1, 2, 3, 4, 5, 6, 7, 8, 9, 10)
    split_counts: tuple[int, int, int] | None = None  # None -> 22/4/4 proportions
    lidar_points: int = 10_000
    image_size: int = 512
    uav_radius: float = 0.5
    max_depth: int = 3
    workers: int = 1
    los_label_mode: str = "any"  # or "reference"
    scalar_tm_approx: bool = False
    ground_roughness_m: float = 0.006  # 0 disables the terrain roughness factor

    # -- resolved values -------------------------------------------------
    @property
    def spacing(self) -> float:
        if self.element_spacing is not None:
            return self.element_spacing
        return SPEED_OF_LIGHT / self.f_c / 2.0

    @property
    def resolved_p_r(self) -> float:
        if self.p_r is not None:
            return self.p_r
        return default_noise_model(self.f_c, sigma2=self.sigma2).p_r

    def validate(self) -> None:
        if self.seed is None or int(self.seed) < 0:
            raise ConfigError("seed is mandatory and must be a non-negative integer")
        if self.cities < 3:
            raise ConfigError("need at least 3 cities (one per split)")
        if not all(1 <= m <= 10 for m in self.modes):
            raise ConfigError(f"modes must be ids in 1..10, got {self.modes}")
        if self.los_label_mode not in ("any", "reference"):
            raise ConfigError(f"los_label_mode must be 'any' or 'reference', got {self.los_label_mode}")
        if self.k_subcarriers < 1 or self.t_frames < 2:
            raise ConfigError("k_subcarriers must be >= 1 and t_frames >= 2")
        if self.max_depth < 0 or self.max_depth > 3:
            raise ConfigError("max_depth must be in 0..3")

    # -- serialization ----------------------------------------------------
    def to_manifest_dict(self) -> dict:
        doc = asdict(self)
        doc["codebook"] = self.codebook.to_dict()
        doc["modes"] = list(self.modes)
        doc["split_counts"] = list(self.split_counts) if self.split_counts else None
        doc["resolved"] = {
            "element_spacing": self.spacing,
            "p_r": self.resolved_p_r,
        }
        return doc


_SCENE_KEYS = set(SceneConfig.__dataclass_fields__)
_CODEBOOK_KEYS = set(PolarGrid.__dataclass_fields__)
_TOP_KEYS = set(RunConfig.__dataclass_fields__)


def config_from_dict(doc: dict) -> RunConfig:
    """Build and validate a config, rejecting unknown keys by name."""
    unknown = set(doc) - _TOP_KEYS - {"resolved"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "seed" not in doc:
        raise ConfigError("config must set 'seed'")
    kwargs = dict(doc)
    kwargs.pop("resolved", None)
    if "codebook" in kwargs and isinstance(kwargs["codebook"], dict):
        unknown = set(kwargs["codebook"]) - _CODEBOOK_KEYS
        if unknown:
            raise ConfigError(f"unknown codebook keys: {sorted(unknown)}")
        kwargs["codebook"] = PolarGrid.from_dict({**PolarGrid().to_dict(), **kwargs["codebook"]})
    if "scene" in kwargs and isinstance(kwargs["scene"], dict):
        unknown = set(kwargs["scene"]) - _SCENE_KEYS
        if unknown:
            raise ConfigError(f"unknown scene keys: {sorted(unknown)}")
        kwargs["scene"] = SceneConfig(**{
            k: tuple(v) if isinstance(v, list) else v for k, v in kwargs["scene"].items()
        })
    for key in ("modes", "split_counts", "building_count"):
        if key in kwargs and isinstance(kwargs[key], list):
            kwargs[key] = tuple(kwargs[key])
    cfg = RunConfig(**kwargs)
    cfg.validate()
    return cfg


def config_from_file(path: Path) -> RunConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from None
    return config_from_dict(doc)
