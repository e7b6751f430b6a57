import numpy as np
import pytest

from oracles import conv3d_naive
from skullstrip._kernels import backend_name, has_native
from skullstrip.errors import ParameterError
from skullstrip.net import layers


def identity_kernel(channels, dtype=np.float32):
    w = np.zeros((channels, channels, 3, 3, 3), dtype=dtype)
    for c in range(channels):
        w[c, c, 1, 1, 1] = 1.0
    return w


class TestConvForward:
    def test_identity_kernel(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((3, 6, 6, 6)).astype(np.float32)
        y = layers.conv3d_forward(x, identity_kernel(3), np.zeros(3, np.float32))
        assert np.allclose(y, x, atol=1e-6)

    def test_all_ones_kernel_interior(self):
        x = np.ones((1, 5, 5, 5), dtype=np.float32)
        w = np.ones((1, 1, 3, 3, 3), dtype=np.float32)
        y = layers.conv3d_forward(x, w, np.zeros(1, np.float32))
        assert y[0, 2, 2, 2] == 27.0
        assert y[0, 0, 0, 0] == 8.0  # corner sees only the in-grid octant

    @pytest.mark.parametrize("seed", range(4))
    def test_matches_naive_loops(self, seed):
        rng = np.random.default_rng(10 + seed)
        x = rng.standard_normal((2, 4, 5, 6))
        w = rng.standard_normal((3, 2, 3, 3, 3))
        b = rng.standard_normal(3)
        y = layers.conv3d_forward(x, w, b)
        assert np.allclose(y, conv3d_naive(x, w, b), atol=1e-6)

    def test_bias_applied(self):
        x = np.zeros((1, 4, 4, 4), dtype=np.float32)
        w = np.zeros((2, 1, 3, 3, 3), dtype=np.float32)
        y = layers.conv3d_forward(x, w, np.array([1.5, -2.0], np.float32))
        assert np.all(y[0] == 1.5) and np.all(y[1] == -2.0)

    def test_shape_mismatch_rejected(self):
        x = np.zeros((2, 4, 4, 4), dtype=np.float32)
        w = np.zeros((3, 5, 3, 3, 3), dtype=np.float32)
        with pytest.raises(ParameterError):
            layers.conv3d_forward(x, w, np.zeros(3, np.float32))


class TestConvBackward:
    def test_zero_grad_out(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((2, 4, 4, 4)).astype(np.float32)
        w = rng.standard_normal((3, 2, 3, 3, 3)).astype(np.float32)
        gx, gw, gb = layers.conv3d_backward(x, w, np.zeros((3, 4, 4, 4), np.float32))
        assert not gx.any() and not gw.any() and not gb.any()

    def test_single_voxel_grad_is_input_patch(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((1, 5, 5, 5)).astype(np.float64)
        w = np.zeros((1, 1, 3, 3, 3))
        gy = np.zeros((1, 5, 5, 5))
        gy[0, 2, 3, 1] = 1.0
        _, gw, gb = layers.conv3d_backward(x, w, gy)
        patch = x[0, 1:4, 2:5, 0:3]
        assert np.allclose(gw[0, 0], patch)
        assert gb[0] == 1.0

    @pytest.mark.parametrize("seed", range(3))
    def test_finite_differences(self, seed):
        rng = np.random.default_rng(20 + seed)
        x = rng.standard_normal((2, 6, 6, 6))
        w = rng.standard_normal((2, 2, 3, 3, 3)) * 0.5
        b = rng.standard_normal(2) * 0.1
        gy = rng.standard_normal((2, 6, 6, 6))
        gx, gw, gb = layers.conv3d_backward(x, w, gy)
        h = 1e-5

        def loss(xx, ww, bb):
            return float((layers.conv3d_forward(xx, ww, bb) * gy).sum())

        for arr, grad, pick in ((x, gx, 6), (w, gw, 6), (b, gb, 2)):
            for _ in range(pick):
                idx = tuple(rng.integers(0, s) for s in arr.shape)
                orig = arr[idx]
                arr[idx] = orig + h
                up = loss(x, w, b)
                arr[idx] = orig - h
                dn = loss(x, w, b)
                arr[idx] = orig
                fd = (up - dn) / (2 * h)
                rel = abs(fd - grad[idx]) / max(abs(fd) + abs(grad[idx]), 1e-8)
                assert rel < 1e-4


@pytest.mark.skipif(not has_native(), reason="compiled extension not built")
class TestBackendAgreement:
    def test_forward_and_backward_close(self):
        from skullstrip._kernels import _native, _numpy
        rng = np.random.default_rng(3)
        for dtype, tol in ((np.float32, 1e-4), (np.float64, 1e-10)):
            x = rng.standard_normal((4, 7, 6, 5)).astype(dtype)
            w = rng.standard_normal((3, 4, 3, 3, 3)).astype(dtype)
            b = rng.standard_normal(3).astype(dtype)
            ya = _native.conv3d_forward(x, w, b)
            yb = _numpy.conv3d_forward(x, w, b)
            assert np.allclose(ya, yb, atol=tol)
            gy = rng.standard_normal(ya.shape).astype(dtype)
            for ga, gb_ in zip(_native.conv3d_backward(x, w, gy),
                               _numpy.conv3d_backward(x, w, gy)):
                assert np.allclose(ga, gb_, atol=tol * 10)

    def test_edt_identical_for_unit_spacing(self):
        from skullstrip._kernels import _native, _numpy
        rng = np.random.default_rng(4)
        for _ in range(10):
            m = rng.random(tuple(rng.integers(3, 14, 3))) < 0.3
            if not m.any():
                m.flat[0] = True
            assert np.array_equal(_native.edt_squared(m, (1.0, 1.0, 1.0)),
                                  _numpy.edt_squared(m, (1.0, 1.0, 1.0)))


class TestActivations:
    def test_leaky_slope_one_is_identity(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal((2, 4, 4, 4))
        assert np.array_equal(layers.leaky_relu(x, 1.0), x)

    def test_negative_scaling(self):
        x = np.array([-2.0])
        assert layers.leaky_relu(x, 0.2)[0] == pytest.approx(-0.4)

    def test_zero_takes_slope_branch(self):
        x = np.array([0.0])
        g = layers.leaky_relu_backward(x, np.array([1.0]), 0.2)
        assert g[0] == pytest.approx(0.2)

    def test_gradient_matches_fd_away_from_zero(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal(100)
        x = x[np.abs(x) > 1e-2]
        g = layers.leaky_relu_backward(x, np.ones_like(x), 0.2)
        h = 1e-6
        fd = (layers.leaky_relu(x + h, 0.2) - layers.leaky_relu(x - h, 0.2)) / (2 * h)
        assert np.allclose(g, fd, atol=1e-6)


class TestPoolUpsample:
    def test_constant_roundtrip(self):
        x = np.full((3, 4, 4, 4), 2.5, dtype=np.float32)
        pooled, idx = layers.maxpool2(x)
        assert np.all(pooled == 2.5)
        assert np.array_equal(layers.upsample2(pooled), x)

    def test_pool_picks_max(self):
        x = np.zeros((1, 2, 2, 2), dtype=np.float32)
        x[0, 1, 0, 1] = 7.0
        pooled, idx = layers.maxpool2(x)
        assert pooled[0, 0, 0, 0] == 7.0

    def test_ties_route_to_lowest_linear_index(self):
        x = np.ones((1, 2, 2, 2), dtype=np.float32)
        pooled, idx = layers.maxpool2(x)
        assert idx[0, 0, 0, 0] == 0
        g = layers.maxpool2_backward(idx, np.ones_like(pooled))
        assert g[0, 0, 0, 0] == 1.0
        assert g.sum() == 1.0

    def test_backward_routes_to_argmax_only(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((2, 4, 4, 4)).astype(np.float32)
        pooled, idx = layers.maxpool2(x)
        gy = rng.standard_normal(pooled.shape).astype(np.float32)
        gx = layers.maxpool2_backward(idx, gy)
        assert gx.shape == x.shape
        assert np.allclose(np.abs(gx).sum(), np.abs(gy).sum(), rtol=1e-6)
        # gradient lands exactly on maxima
        assert np.all((gx != 0) <= (x == layers.upsample2(pooled)))

    def test_odd_dims_rejected(self):
        with pytest.raises(ParameterError):
            layers.maxpool2(np.zeros((1, 3, 4, 4), dtype=np.float32))

    def test_upsample_backward_sums_blocks(self):
        gy = np.ones((1, 4, 4, 4), dtype=np.float32)
        gx = layers.upsample2_backward(gy)
        assert gx.shape == (1, 2, 2, 2)
        assert np.all(gx == 8.0)


class TestSoftmax:
    def test_channels_sum_to_one(self):
        rng = np.random.default_rng(8)
        x = rng.standard_normal((2, 5, 5, 5)) * 10
        y = layers.softmax_channels(x)
        assert np.allclose(y.sum(axis=0), 1.0, atol=1e-6)
        assert np.all(y >= 0)

    def test_equal_logits_give_half(self):
        x = np.zeros((2, 3, 3, 3))
        y = layers.softmax_channels(x)
        assert np.allclose(y, 0.5)

    def test_backward_matches_fd(self):
        rng = np.random.default_rng(9)
        x = rng.standard_normal((2, 2, 2, 2))
        gy = rng.standard_normal((2, 2, 2, 2))
        y = layers.softmax_channels(x)
        gx = layers.softmax_channels_backward(y, gy)
        h = 1e-6
        for idx in np.ndindex(x.shape):
            orig = x[idx]
            x[idx] = orig + h
            up = float((layers.softmax_channels(x) * gy).sum())
            x[idx] = orig - h
            dn = float((layers.softmax_channels(x) * gy).sum())
            x[idx] = orig
            fd = (up - dn) / (2 * h)
            assert fd == pytest.approx(gx[idx], abs=1e-6)
