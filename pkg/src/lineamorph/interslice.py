"""Dense-mask reconstruction from sparsely delineated slices.

Replaces the manual fill-between-slices step: each delineated axial slice
is turned into an exact signed Euclidean distance field (negative inside),
the fields of consecutive delineated slices are blended linearly in z, and
the zero sublevel set of the blend becomes the occupancy of the in-between
slices.  Topology changes between slices are handled implicitly by the
fields; no contour correspondence is attempted.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import binary_closing, distance_transform_edt, generate_binary_structure

from .errors import DimsMismatch, EmptySlice, TooFewSlices
from .volume import PlaneImage, VoxelMask, load_mask, save_mask, _parse_header
from pathlib import Path

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SparseDelineation:
    """A mask occupied only on the authored (delineated) slices."""

    base: VoxelMask
    delineated_z: tuple[int, ...]

    def __post_init__(self):
        zs = tuple(sorted(int(z) for z in set(self.delineated_z)))
        if not zs:
            raise ValueError("delineated_z must be non-empty")
        nz = self.base.dims[2]
        if zs[0] < 0 or zs[-1] >= nz:
            raise ValueError(f"delineated_z out of range for nz={nz}")
        object.__setattr__(self, "delineated_z", zs)
        occupied_slices = np.flatnonzero(self.base.data.any(axis=(1, 2)))
        stray = set(occupied_slices.tolist()) - set(zs)
        if stray:
            raise ValueError(
                f"occupied voxels on non-delineated slices: {sorted(stray)[:8]}"
            )


@dataclass(frozen=True)
class DistanceField:
    """Signed Euclidean distance per pixel, mm; negative inside."""

    dims: tuple[int, int]
    spacing: tuple[float, float]
    values: np.ndarray


def _signed_edt(occ: np.ndarray, sampling: tuple[float, float]) -> np.ndarray:
    """Exact signed EDT of a 2D boolean image (negative inside)."""
    outside = distance_transform_edt(~occ, sampling=sampling)
    inside = distance_transform_edt(occ, sampling=sampling)
    return outside - inside


def sdf_of_slice(plane: PlaneImage) -> DistanceField:
    """Exact signed distance field of one binary slice.

    Raises EmptySlice when the slice holds no occupied pixel.
    """
    if not plane.data.any():
        raise EmptySlice("cannot build a distance field from an empty slice")
    values = _signed_edt(plane.data, sampling=plane.spacing)
    return DistanceField(dims=plane.dims, spacing=plane.spacing, values=values)


def interpolate_stack(sparse: SparseDelineation, closing: bool = False) -> VoxelMask:
    """Reconstruct a dense mask from the delineated slices.

    Delineated slices are copied verbatim; every undelineated slice between
    consecutive delineated ones gets the zero sublevel set of the linearly
    blended signed distance fields.  Slices outside the delineated index
    range stay empty.  ``closing`` additionally applies one morphological
    closing with a 1-voxel-radius ball (manual hole-filling surrogate, off
    by default).
    """
    zs = sparse.delineated_z
    if len(zs) < 2:
        raise TooFewSlices("interpolation needs at least two delineated slices")

    base = sparse.base
    sy, sx = base.spacing[1], base.spacing[0]
    sampling = (sy, sx)  # data slices are (ny, nx)
    out = np.zeros_like(base.data)
    for z in zs:
        out[z] = base.data[z]

    big = float(np.hypot(base.dims[0] * sx, base.dims[1] * sy))

    def field_of(z: int) -> np.ndarray:
        occ = base.data[z]
        if not occ.any():
            # vanishing contour: interpolation tapers toward nothing
            return np.full(occ.shape, big, dtype=float)
        return _signed_edt(occ, sampling)

    for z0, z1 in zip(zs[:-1], zs[1:]):
        if z1 - z0 < 2:
            continue
        occ0, occ1 = base.data[z0], base.data[z1]
        if occ0.any() and occ1.any() and not (occ0 & occ1).any():
            log.warning(
                "delineated slices %d and %d are laterally disjoint; "
                "interpolation proceeds on the blended fields", z0, z1
            )
        f0, f1 = field_of(z0), field_of(z1)
        for z in range(z0 + 1, z1):
            alpha = (z - z0) / (z1 - z0)
            out[z] = (1.0 - alpha) * f0 + alpha * f1 <= 0.0

    if closing:
        ball = generate_binary_structure(3, 1)
        out = binary_closing(out, structure=ball)
        for z in zs:  # authored contours stay verbatim
            out[z] = base.data[z]

    return VoxelMask(
        dims=base.dims, spacing=base.spacing, origin=base.origin, data=out
    )


def dice(a: VoxelMask, b: VoxelMask) -> float:
    """Overlap ratio 2|A∩B| / (|A|+|B|); 1.0 when both masks are empty."""
    if a.dims != b.dims:
        raise DimsMismatch(f"dims differ: {a.dims} vs {b.dims}")
    na = int(np.count_nonzero(a.data))
    nb = int(np.count_nonzero(b.data))
    if na + nb == 0:
        return 1.0
    inter = int(np.count_nonzero(a.data & b.data))
    return 2.0 * inter / (na + nb)


# ---------------------------------------------------------------------------
# container round-trip (mask header + "delineated_z")
# ---------------------------------------------------------------------------
def save_sparse_delineation(sparse: SparseDelineation, path) -> None:
    save_mask(
        sparse.base, path, extra_header={"delineated_z": list(sparse.delineated_z)}
    )


def load_sparse_delineation(path) -> SparseDelineation:
    mask = load_mask(path)
    header = _parse_header(Path(path))
    zs = header.get("delineated_z")
    if zs is None:
        # fall back to the occupied slices (dense input treated as delineated)
        zs = np.flatnonzero(mask.data.any(axis=(1, 2))).tolist()
    return SparseDelineation(base=mask, delineated_z=tuple(int(z) for z in zs))
