import numpy as np
import pytest

from skullstrip.errors import GeometryError, ParameterError
from skullstrip.grid import (Grid, LabelMap, Volume, conform, conform_target,
                             orientation_from_affine, sample)


class TestGrid:
    def test_standard_lia_affine(self):
        g = Grid.standard(8, 1.0, "LIA")
        # axis 0 -> -x (Left), axis 1 -> -z (Inferior), axis 2 -> +y (Anterior)
        assert np.allclose(g.affine[:3, 0], [-1, 0, 0])
        assert np.allclose(g.affine[:3, 1], [0, 0, -1])
        assert np.allclose(g.affine[:3, 2], [0, 1, 0])
        assert np.allclose(g.world_center(), 0.0)

    def test_orientation_roundtrip(self):
        for code in ("LIA", "RAS", "PSL"):
            g = Grid.standard(10, 2.0, code)
            assert orientation_from_affine(g.affine) == code

    def test_invalid_dims(self):
        with pytest.raises(GeometryError):
            Grid.standard((0, 4, 4))

    def test_voxel_size_affine_mismatch(self):
        g = Grid.standard(4, 1.0)
        with pytest.raises(GeometryError):
            Grid(g.dims, (2.0, 2.0, 2.0), g.orientation, g.affine)

    def test_nonnegative_voxel_size(self):
        with pytest.raises(GeometryError):
            Grid.standard(4, 0.0)


class TestVolume:
    def test_requires_finite(self, grid8):
        data = np.zeros((8, 8, 8), dtype=np.float32)
        data[0, 0, 0] = np.nan
        with pytest.raises(ParameterError):
            Volume(grid8, data)

    def test_shape_checked(self, grid8):
        with pytest.raises(GeometryError):
            Volume(grid8, np.zeros((4, 4, 4), dtype=np.float32))


class TestSample:
    def test_voxel_center_both_modes(self, grid8):
        rng = np.random.default_rng(0)
        vol = Volume(grid8, rng.random((8, 8, 8)).astype(np.float32))
        p = (3, 5, 2)
        assert sample(vol, p, "trilinear") == pytest.approx(float(vol.data[p]), abs=1e-7)
        assert sample(vol, p, "nearest") == float(vol.data[p])

    def test_midway_interpolates(self, grid8):
        data = np.zeros((8, 8, 8), dtype=np.float32)
        data[4, 4, 4] = 1.0
        vol = Volume(grid8, data)
        assert sample(vol, (3.5, 4, 4), "trilinear") == pytest.approx(0.5)

    def test_outside_is_zero(self, grid8):
        vol = Volume(grid8, np.ones((8, 8, 8), dtype=np.float32))
        assert sample(vol, (-1.2, 0, 0)) == 0.0
        assert sample(vol, (0, 0, 9.0)) == 0.0
        assert sample(vol, (20, 20, 20), "nearest") == 0.0

    def test_exact_on_affine_field(self, grid8):
        # trilinear interpolation reproduces a * x + b exactly in the interior
        i, j, k = np.meshgrid(*(np.arange(8),) * 3, indexing="ij")
        data = (0.5 * i - 1.25 * j + 2.0 * k + 3.0).astype(np.float32)
        vol = Volume(grid8, data)
        rng = np.random.default_rng(1)
        for _ in range(50):
            p = rng.uniform(0.0, 7.0, 3)
            expected = 0.5 * p[0] - 1.25 * p[1] + 2.0 * p[2] + 3.0
            assert sample(vol, p) == pytest.approx(expected, abs=1e-5)


class TestConform:
    def test_identity_on_target_grid(self, grid8):
        rng = np.random.default_rng(2)
        vol = Volume(grid8, rng.random((8, 8, 8)).astype(np.float32))
        out = conform(vol, grid8)
        assert np.array_equal(out.data, vol.data)

    def test_idempotent_bit_exact(self):
        rng = np.random.default_rng(3)
        src = Grid.standard(12, 2.0, "RAS")
        vol = Volume(src, rng.random((12, 12, 12)).astype(np.float32))
        target = conform_target(src, 16, 1.5, "LIA")
        once = conform(vol, target)
        twice = conform(once, target)
        assert np.array_equal(once.data, twice.data)

    def test_upsample_preserves_extent(self):
        src = Grid.standard(16, 2.0, "LIA")
        rng = np.random.default_rng(4)
        vol = Volume(src, rng.random((16, 16, 16)).astype(np.float32))
        target = conform_target(src, 32, 1.0, "LIA")
        out = conform(vol, target)
        assert out.grid.dims == (32, 32, 32)
        # same world center, same world extent (dims * voxel size)
        assert np.allclose(out.grid.world_center(), src.world_center(), atol=1e-9)
        assert np.allclose(
            np.asarray(out.grid.dims) * out.grid.voxel_size,
            np.asarray(src.dims) * src.voxel_size,
        )

    def test_labelmap_nearest_no_new_labels(self, tiny_schema):
        rng = np.random.default_rng(5)
        src = Grid.standard(10, 1.0, "LIA")
        lm = LabelMap(src, rng.integers(0, 5, (10, 10, 10)).astype(np.int32),
                      tiny_schema)
        target = conform_target(src, 16, 0.7, "LIA")
        out = conform(lm, target)
        assert set(np.unique(out.data)) <= set(np.unique(lm.data)) | {0}

    def test_labelmap_rejects_trilinear(self, tiny_schema):
        src = Grid.standard(6, 1.0, "LIA")
        lm = LabelMap(src, np.zeros((6, 6, 6), dtype=np.int32), tiny_schema)
        with pytest.raises(ParameterError):
            conform(lm, src, "trilinear")

    def test_reorientation_moves_content_consistently(self):
        src = Grid.standard(8, 1.0, "RAS")
        data = np.zeros((8, 8, 8), dtype=np.float32)
        data[2, 3, 4] = 1.0
        vol = Volume(src, data)
        target = conform_target(src, 8, 1.0, "LIA")
        out = conform(vol, target, "nearest")
        # the bright voxel's world position must be unchanged
        src_world = src.affine @ np.array([2, 3, 4, 1.0])
        hot = np.argwhere(out.data == 1.0)
        assert len(hot) == 1
        dst_world = target.affine @ np.append(hot[0], 1.0)
        assert np.allclose(src_world, dst_world, atol=1e-9)
