import numpy as np
import pytest

from lineamorph.phantom import PhantomSpec, generate_phantom
from lineamorph.volume import LandmarkSet, VoxelMask


@pytest.fixture(scope="session")
def arc_phantom():
    """Reference arc ribbon: chord 300, sagitta 50, rhombus width 44 at t=0.55."""
    spec = PhantomSpec(
        length_mm=300.0,
        sagitta_mm=50.0,
        width_knots=((0.0, 12.0), (0.55, 44.0), (1.0, 12.0)),
        spacing_mm=(1.0, 1.0, 1.25),
    )
    return generate_phantom(spec)


@pytest.fixture(scope="session")
def flat_phantom():
    """Straight flat ribbon, constant width 20 mm, unit spacing."""
    spec = PhantomSpec(
        length_mm=200.0,
        sagitta_mm=0.0,
        width_knots=((0.0, 20.0), (1.0, 20.0)),
        spacing_mm=(1.0, 1.0, 1.0),
    )
    return generate_phantom(spec)


def make_box_mask(nx=8, ny=8, nz=8, spacing=(1.0, 1.0, 1.0), origin=(0.0, 0.0, 0.0)):
    data = np.zeros((nz, ny, nx), dtype=bool)
    data[2:6, 2:6, 2:6] = True
    return VoxelMask(dims=(nx, ny, nz), spacing=spacing, origin=origin, data=data)


def landmarks_for_box(mask: VoxelMask) -> LandmarkSet:
    lo, hi = mask.bbox_mm()
    cx = 0.5 * (lo[0] + hi[0])
    cy = 0.5 * (lo[1] + hi[1])
    return LandmarkSet(
        xiphoid=np.array([cx, cy, hi[2] - 1.0]),
        umbilicus=np.array([cx, cy, 0.5 * (lo[2] + hi[2])]),
        pubis=np.array([cx, cy, lo[2] + 1.0]),
    )
