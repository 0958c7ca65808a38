"""Electromagnetic material properties from ITU-R Recommendation P.2040-3.

The recommendation models the relative permittivity and conductivity of
common construction materials with a frequency power law

    eps_r = a * f_GHz**b
    sigma  = c * f_GHz**d   [S/m]

The coefficients are transcribed from Table 3 of the recommendation into a
versioned JSON data file shipped with the package; they are never hard-coded
in logic so a table revision is a data change, not a code change.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from .errors import UnknownMaterialError

VACUUM_PERMITTIVITY = 8.8541878128e-12  # F/m
SPEED_OF_LIGHT = 299_792_458.0  # m/s

#: Materials the scene generator assigns to buildings.
BUILDING_MATERIALS = ("Marble", "Wood", "Metal")
ROAD_MATERIAL = "Concrete"
GROUND_MATERIAL = "MediumDryGround"


@dataclass(frozen=True)
class Material:
    """One row of the ITU frequency-power-law table."""

    name: str
    permittivity_a: float
    permittivity_b: float
    conductivity_c: float
    conductivity_d: float
    f_min_ghz: float
    f_max_ghz: float

    def relative_permittivity(self, f_hz: float) -> float:
        f_ghz = f_hz / 1e9
        return self.permittivity_a * f_ghz**self.permittivity_b

    def conductivity(self, f_hz: float) -> float:
        """Conductivity in S/m at frequency ``f_hz``."""
        f_ghz = f_hz / 1e9
        return self.conductivity_c * f_ghz**self.conductivity_d

    def complex_permittivity(self, f_hz: float) -> complex:
        """Complex relative permittivity eta = eps_r - j*sigma/(2*pi*f*eps0)."""
        eps_r = self.relative_permittivity(f_hz)
        sigma = self.conductivity(f_hz)
        return eps_r - 1j * sigma / (2.0 * math.pi * f_hz * VACUUM_PERMITTIVITY)


@lru_cache(maxsize=1)
def material_table() -> dict[str, Material]:
    """Load the packaged material table (cached)."""
    raw = resources.files("nfforge").joinpath("data/itu_p2040_materials.json").read_text()
    doc = json.loads(raw)
    table = {}
    for name, row in doc["materials"].items():
        table[name] = Material(
            name=name,
            permittivity_a=row["a"],
            permittivity_b=row["b"],
            conductivity_c=row["c"],
            conductivity_d=row["d"],
            f_min_ghz=row["f_min_ghz"],
            f_max_ghz=row["f_max_ghz"],
        )
    return table


def get_material(name: str) -> Material:
    try:
        return material_table()[name]
    except KeyError:
        raise UnknownMaterialError(f"no material named {name!r} in the table") from None
