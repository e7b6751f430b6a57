import numpy as np
import pytest

from skullstrip.errors import ParameterError
from skullstrip.losses import dice_loss, usdt_loss, wsdt_loss


def one_hot(mask):
    return np.stack([mask, ~mask]).astype(np.float64)


class TestDiceLoss:
    def test_perfect_prediction_is_minus_one(self):
        rng = np.random.default_rng(0)
        y = one_hot(rng.random((4, 4, 4)) < 0.5)
        res = dice_loss(y, y)
        assert res.value == pytest.approx(-1.0, abs=1e-12)

    def test_uniform_prediction_is_minus_two_thirds(self):
        rng = np.random.default_rng(1)
        y = one_hot(rng.random((5, 5, 5)) < 0.3)
        pred = np.full_like(y, 0.5)
        res = dice_loss(y, pred)
        assert res.value == pytest.approx(-2.0 / 3.0, abs=1e-9)

    def test_gradient_matches_fd(self):
        rng = np.random.default_rng(2)
        y = one_hot(rng.random((4, 4, 4)) < 0.5)
        logits = rng.standard_normal((2, 4, 4, 4))
        pred = np.exp(logits) / np.exp(logits).sum(axis=0, keepdims=True)
        res = dice_loss(y, pred)
        h = 1e-7
        for _ in range(12):
            idx = tuple(rng.integers(0, s) for s in pred.shape)
            orig = pred[idx]
            pred[idx] = orig + h
            up = dice_loss(y, pred).value
            pred[idx] = orig - h
            dn = dice_loss(y, pred).value
            pred[idx] = orig
            fd = (up - dn) / (2 * h)
            rel = abs(fd - res.grad[idx]) / max(abs(fd) + abs(res.grad[idx]), 1e-9)
            assert rel < 1e-6

    @pytest.mark.parametrize("seed", range(10))
    def test_bounded_in_minus_one_zero(self, seed):
        rng = np.random.default_rng(10 + seed)
        y = one_hot(rng.random((4, 4, 4)) < rng.uniform(0.1, 0.9))
        p_brain = rng.random((4, 4, 4))
        pred = np.stack([p_brain, 1.0 - p_brain])
        value = dice_loss(y, pred).value
        assert -1.0 - 1e-12 <= value <= 0.0

    def test_symmetric_in_arguments(self):
        rng = np.random.default_rng(3)
        y = one_hot(rng.random((4, 4, 4)) < 0.5)
        p_brain = rng.random((4, 4, 4))
        pred = np.stack([p_brain, 1.0 - p_brain])
        assert dice_loss(y, pred).value == pytest.approx(dice_loss(pred, y).value)

    def test_invariant_to_simultaneous_channel_swap(self):
        rng = np.random.default_rng(4)
        y = one_hot(rng.random((4, 4, 4)) < 0.5)
        p_brain = rng.random((4, 4, 4))
        pred = np.stack([p_brain, 1.0 - p_brain])
        a = dice_loss(y, pred).value
        b = dice_loss(y[::-1], pred[::-1]).value
        assert a == pytest.approx(b, abs=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ParameterError):
            dice_loss(np.zeros((2, 4, 4, 4)), np.zeros((2, 3, 4, 4)))


class TestWsdtLoss:
    def test_zero_at_exact_prediction(self):
        rng = np.random.default_rng(5)
        d = rng.uniform(-20, 20, (1, 6, 6, 6))
        res = wsdt_loss(d, d.copy(), b=1e-3, h=4.0)
        assert res.value == 0.0
        assert not res.grad.any()

    def test_boundary_voxel_full_weight(self):
        d = np.zeros((1, 1, 1, 1))
        pred = np.full_like(d, 2.0)
        res = wsdt_loss(d, pred, b=1e-3, h=4.0)
        assert res.value == pytest.approx(4.0)

    def test_far_voxel_downweighted(self):
        d = np.full((1, 1, 1, 1), 10.0)
        pred = np.full_like(d, 12.0)
        res = wsdt_loss(d, pred, b=1e-3, h=4.0)
        assert res.value == pytest.approx(0.004)

    def test_weight_boundary_inclusive_at_h(self):
        d = np.full((1, 1, 1, 1), 4.0)  # |d| == h keeps weight 1
        pred = np.full_like(d, 5.0)
        assert wsdt_loss(d, pred, b=1e-3, h=4.0).value == pytest.approx(1.0)

    def test_b_one_equals_plain_mse(self):
        rng = np.random.default_rng(6)
        d = rng.uniform(-30, 30, (1, 5, 5, 5))
        pred = d + rng.standard_normal(d.shape)
        res = wsdt_loss(d, pred, b=1.0, h=4.0)
        assert res.value == pytest.approx(float(((pred - d) ** 2).mean()), rel=1e-12)
        assert usdt_loss(d, pred).value == pytest.approx(res.value, rel=1e-12)

    def test_monotone_in_error(self):
        d = np.zeros((1, 4, 4, 4))
        small = wsdt_loss(d, d + 1.0, b=1e-3, h=4.0).value
        large = wsdt_loss(d, d + 2.0, b=1e-3, h=4.0).value
        assert large > small >= 0.0

    def test_gradient_matches_fd(self):
        rng = np.random.default_rng(7)
        d = rng.uniform(-10, 10, (1, 4, 4, 4))
        pred = d + rng.standard_normal(d.shape)
        res = wsdt_loss(d, pred, b=1e-3, h=4.0)
        h = 1e-6
        for _ in range(10):
            idx = tuple(rng.integers(0, s) for s in pred.shape)
            orig = pred[idx]
            pred[idx] = orig + h
            up = wsdt_loss(d, pred, b=1e-3, h=4.0).value
            pred[idx] = orig - h
            dn = wsdt_loss(d, pred, b=1e-3, h=4.0).value
            pred[idx] = orig
            fd = (up - dn) / (2 * h)
            assert fd == pytest.approx(res.grad[idx], rel=1e-4, abs=1e-10)

    def test_parameter_validation(self):
        d = np.zeros((1, 2, 2, 2))
        with pytest.raises(ParameterError):
            wsdt_loss(d, d, b=2.0, h=4.0)
        with pytest.raises(ParameterError):
            wsdt_loss(d, d, b=0.5, h=-1.0)
