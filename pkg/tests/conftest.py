import pytest

from nfforge.raytrace import ArrayGeometry
from nfforge.scene import Scene, SceneParams, generate_scene

F_C = 7e9


@pytest.fixture(scope="session")
def empty_scene() -> Scene:
    """Ground plane only."""
    return generate_scene(7, SceneParams(building_count=(0, 0)))


@pytest.fixture(scope="session")
def city_scene() -> Scene:
    return generate_scene(3)


@pytest.fixture(scope="session")
def array8() -> ArrayGeometry:
    return ArrayGeometry.half_wavelength(8, 8, F_C, (0.0, 0.0, 65.0))


@pytest.fixture(scope="session")
def array1() -> ArrayGeometry:
    return ArrayGeometry(1, 1, 0.0214, (0.0, 0.0, 65.0))


def single_box_scene(x0=10.0, x1=20.0, y0=-5.0, y1=5.0, height=30.0, material="Metal", seed=0) -> Scene:
    """Hand-placed one-building scene for geometric oracles."""
    from nfforge.materials import get_material
    from nfforge.scene import Building, Rect

    params = SceneParams(building_count=(0, 0))
    base = generate_scene(seed, params)
    building = Building(Rect(x0, x1, y0, y1), height, get_material(material))
    return Scene(
        bounds=base.bounds,
        buildings=(building,),
        roads=base.roads,
        bs_position=base.bs_position,
        seed=seed,
        params=params,
    )
