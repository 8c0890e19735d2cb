import numpy as np
import pytest

from lineamorph.errors import DimsMismatch, EmptySlice, TooFewSlices
from lineamorph.interslice import (
    SparseDelineation,
    dice,
    interpolate_stack,
    load_sparse_delineation,
    save_sparse_delineation,
    sdf_of_slice,
)
from lineamorph.phantom import PhantomSpec, generate_phantom
from lineamorph.volume import PlaneImage, VoxelMask


def plane_from(data: np.ndarray, spacing=(1.0, 1.0)) -> PlaneImage:
    return PlaneImage(
        dims=data.shape,
        spacing=spacing,
        frame_origin=np.zeros(3),
        axis_u=np.array([1.0, 0.0, 0.0]),
        axis_v=np.array([0.0, 1.0, 0.0]),
        data=data,
    )


def disk_slice(n, cx, cy, r) -> np.ndarray:
    uu, vv = np.mgrid[0:n, 0:n]
    return (uu + 0.5 - cx) ** 2 + (vv + 0.5 - cy) ** 2 <= r * r


def stack_mask(slices: dict, n=48, nz=12, spacing=(1.0, 1.0, 1.0)) -> VoxelMask:
    data = np.zeros((nz, n, n), dtype=bool)
    for z, occ in slices.items():
        data[z] = occ
    return VoxelMask(dims=(n, n, nz), spacing=spacing, origin=(0, 0, 0), data=data)


class TestSdfOfSlice:
    def test_single_pixel(self):
        data = np.zeros((16, 16), dtype=bool)
        data[5, 7] = True
        su = 0.7
        field = sdf_of_slice(plane_from(data, spacing=(su, su)))
        assert field.values[5, 7] <= 0.0
        assert abs(field.values[8, 7] - 3 * su) <= su / 2

    def test_disk_center_depth(self):
        r = 9.0
        data = disk_slice(32, 16.0, 16.0, r)
        field = sdf_of_slice(plane_from(data))
        center = field.values[16, 16]
        assert abs(center + r) <= np.sqrt(2.0)  # one pixel diagonal

    def test_negative_inside_positive_outside(self):
        data = disk_slice(32, 16.0, 16.0, 6.0)
        field = sdf_of_slice(plane_from(data))
        assert np.all(field.values[data] <= 0.0)
        assert np.all(field.values[~data] >= 0.0)

    def test_empty_slice(self):
        with pytest.raises(EmptySlice):
            sdf_of_slice(plane_from(np.zeros((8, 8), dtype=bool)))

    def test_physical_spacing(self):
        data = np.zeros((10, 10), dtype=bool)
        data[5, 5] = True
        field = sdf_of_slice(plane_from(data, spacing=(2.0, 0.5)))
        # nearest approach from (5+2, 5) is 2 rows * su=2.0 -> 4.0
        assert abs(field.values[7, 5] - 4.0) < 1e-9


class TestInterpolateStack:
    def test_identical_contours_fill_identically(self):
        occ = disk_slice(48, 24.0, 24.0, 10.0)
        mask = stack_mask({2: occ, 8: occ})
        sparse = SparseDelineation(base=mask, delineated_z=(2, 8))
        out = interpolate_stack(sparse)
        for z in range(3, 8):
            assert np.array_equal(out.data[z], occ)
        assert not out.data[0].any() and not out.data[1].any()
        assert not out.data[9:].any()

    def test_concentric_disks_linear_radius(self):
        mask = stack_mask(
            {0: disk_slice(64, 32.0, 32.0, 10.0), 10: disk_slice(64, 32.0, 32.0, 20.0)},
            n=64, nz=11,
        )
        sparse = SparseDelineation(base=mask, delineated_z=(0, 10))
        out = interpolate_stack(sparse)
        mid = out.data[5]
        expected = disk_slice(64, 32.0, 32.0, 15.0)
        # within one voxel: dilation of each contains the other
        from scipy.ndimage import binary_dilation
        assert np.all(mid <= binary_dilation(expected))
        assert np.all(expected <= binary_dilation(mid))

    def test_delineated_slices_verbatim(self):
        a = disk_slice(48, 20.0, 24.0, 8.0)
        b = disk_slice(48, 28.0, 24.0, 12.0)
        mask = stack_mask({1: a, 9: b})
        sparse = SparseDelineation(base=mask, delineated_z=(1, 9))
        out = interpolate_stack(sparse)
        assert np.array_equal(out.data[1], a)
        assert np.array_equal(out.data[9], b)

    def test_one_slice_raises(self):
        occ = disk_slice(48, 24.0, 24.0, 10.0)
        mask = stack_mask({4: occ})
        sparse = SparseDelineation(base=mask, delineated_z=(4,))
        with pytest.raises(TooFewSlices):
            interpolate_stack(sparse)

    def test_idempotent_on_dense(self, flat_phantom):
        dense, _, _ = flat_phantom
        zs = tuple(int(z) for z in np.flatnonzero(dense.data.any(axis=(1, 2))))
        sparse = SparseDelineation(base=dense, delineated_z=zs)
        out = interpolate_stack(sparse)
        assert np.array_equal(out.data, dense.data)

    def test_monotone_in_contour_inclusion(self):
        small = stack_mask(
            {0: disk_slice(64, 32.0, 32.0, 5.0), 8: disk_slice(64, 32.0, 32.0, 9.0)},
            n=64, nz=9,
        )
        big = stack_mask(
            {0: disk_slice(64, 32.0, 32.0, 10.0), 8: disk_slice(64, 32.0, 32.0, 20.0)},
            n=64, nz=9,
        )
        out_small = interpolate_stack(SparseDelineation(base=small, delineated_z=(0, 8)))
        out_big = interpolate_stack(SparseDelineation(base=big, delineated_z=(0, 8)))
        assert np.all(out_small.data <= out_big.data)

    def test_disjoint_end_slices_not_an_error(self, caplog):
        a = disk_slice(48, 12.0, 24.0, 5.0)
        b = disk_slice(48, 36.0, 24.0, 5.0)
        mask = stack_mask({0: a, 8: b}, nz=9)
        sparse = SparseDelineation(base=mask, delineated_z=(0, 8))
        with caplog.at_level("WARNING", logger="lineamorph.interslice"):
            out = interpolate_stack(sparse)
        assert any("disjoint" in r.message for r in caplog.records)
        assert out.data[0].any() and out.data[8].any()

    def test_vanishing_contour_tapers(self):
        occ = disk_slice(48, 24.0, 24.0, 10.0)
        mask = stack_mask({0: occ, 8: np.zeros((48, 48), dtype=bool)}, nz=9)
        sparse = SparseDelineation(base=mask, delineated_z=(0, 8))
        out = interpolate_stack(sparse)
        counts = [int(out.data[z].sum()) for z in range(9)]
        assert counts[0] > 0 and counts[8] == 0
        assert all(c1 >= c2 for c1, c2 in zip(counts, counts[1:]))

    def test_closing_fills_small_holes(self):
        occ = disk_slice(48, 24.0, 24.0, 10.0)
        mask = stack_mask({2: occ, 6: occ}, nz=9)
        sparse = SparseDelineation(base=mask, delineated_z=(2, 6))
        out = interpolate_stack(sparse, closing=True)
        for z in (3, 4, 5):
            assert out.data[z].any()


class TestSparseDelineation:
    def test_stray_voxel_rejected(self):
        occ = disk_slice(48, 24.0, 24.0, 10.0)
        mask = stack_mask({2: occ, 5: occ})
        with pytest.raises(ValueError):
            SparseDelineation(base=mask, delineated_z=(2,))

    def test_round_trip(self, tmp_path):
        occ = disk_slice(48, 24.0, 24.0, 10.0)
        mask = stack_mask({2: occ, 8: occ})
        sparse = SparseDelineation(base=mask, delineated_z=(2, 8))
        save_sparse_delineation(sparse, tmp_path / "sp.lmh")
        back = load_sparse_delineation(tmp_path / "sp.lmh")
        assert back.delineated_z == (2, 8)
        assert np.array_equal(back.base.data, mask.data)


class TestDice:
    def test_identity(self, flat_phantom):
        mask, _, _ = flat_phantom
        assert dice(mask, mask) == 1.0

    def test_disjoint(self):
        a = stack_mask({1: disk_slice(48, 12.0, 12.0, 4.0)})
        b = stack_mask({1: disk_slice(48, 36.0, 36.0, 4.0)})
        assert dice(a, b) == 0.0

    def test_dims_mismatch(self):
        a = stack_mask({0: disk_slice(48, 24, 24, 4)}, nz=2)
        b = stack_mask({0: disk_slice(48, 24, 24, 4)}, nz=3)
        with pytest.raises(DimsMismatch):
            dice(a, b)

    def test_both_empty(self):
        a = VoxelMask(dims=(2, 2, 2), spacing=(1, 1, 1), origin=(0, 0, 0),
                      data=np.zeros((2, 2, 2), dtype=bool))
        assert dice(a, a) == 1.0

    def test_counted_overlap(self):
        # |a| = |b| = 100, |a & b| = 80 -> dice 0.8
        data_a = np.zeros((1, 20, 10), dtype=bool)
        data_b = np.zeros((1, 20, 10), dtype=bool)
        data_a[0, :10, :] = True          # rows 0..9
        data_b[0, 2:12, :] = True         # rows 2..11, overlap rows 2..9 = 80
        a = VoxelMask(dims=(10, 20, 1), spacing=(1, 1, 1), origin=(0, 0, 0), data=data_a)
        b = VoxelMask(dims=(10, 20, 1), spacing=(1, 1, 1), origin=(0, 0, 0), data=data_b)
        assert dice(a, b) == pytest.approx(0.8)
