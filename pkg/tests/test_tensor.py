import math

import numpy as np
import pytest

from metadenoise.errors import DimensionError, NumericError
from metadenoise.tensor import as_tensor, finite_diff_gradient, mse_loss


class TestAsTensor:
    def test_shape_and_order(self):
        t = as_tensor([1.0, 2.0, 3.0, 4.0], shape=(2, 2))
        assert t.shape == (2, 2)
        assert t.dtype == np.float64
        assert t[1, 0] == 3.0  # row-major

    def test_rejects_nan_and_inf(self):
        with pytest.raises(NumericError):
            as_tensor([1.0, float("nan")])
        with pytest.raises(NumericError):
            as_tensor([np.inf, 0.0])

    def test_rejects_shape_mismatch(self):
        with pytest.raises(DimensionError):
            as_tensor([1.0, 2.0, 3.0], shape=(2, 2))

    def test_rejects_nonpositive_extent(self):
        with pytest.raises(DimensionError):
            as_tensor([], shape=(0,))


class TestMseLoss:
    def test_identity_is_zero(self):
        x = np.arange(12.0).reshape(3, 4)
        assert mse_loss(x, x) == 0.0

    def test_direct_arithmetic(self):
        assert mse_loss(np.array([1.0, 2.0]), np.array([0.0, 0.0])) == pytest.approx(2.5)

    def test_matches_double_loop_oracle(self, rng):
        pred = rng.normal(size=(4, 4))
        target = rng.normal(size=(4, 4))
        total = 0.0
        for i in range(4):
            for j in range(4):
                diff = pred[i, j] - target[i, j]
                total += diff * diff
        assert mse_loss(pred, target) == pytest.approx(total / 16.0, rel=1e-14)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            mse_loss(np.zeros(3), np.zeros(4))

    def test_nonnegative_and_zero_iff_equal(self, rng):
        for _ in range(20):
            a = rng.normal(size=7)
            b = rng.normal(size=7)
            loss = mse_loss(a, b)
            assert loss >= 0.0
            assert (loss == 0.0) == bool(np.array_equal(a, b))
        a = rng.normal(size=7)
        assert mse_loss(a, a.copy()) == 0.0


class TestFiniteDiff:
    def test_quadratic(self):
        grad = finite_diff_gradient(lambda t: float(t[0] ** 2), np.array([3.0]), h=1e-5)
        assert abs(grad[0] - 6.0) < 1e-8

    def test_constant_loss(self):
        grad = finite_diff_gradient(lambda t: 7.5, np.zeros(4), h=1e-5)
        assert np.all(grad == 0.0)

    def test_sine(self):
        grad = finite_diff_gradient(lambda t: math.sin(t[0]), np.array([0.0]), h=1e-5)
        assert abs(grad[0] - 1.0) < 1e-9

    def test_rejects_bad_step(self):
        with pytest.raises(ValueError):
            finite_diff_gradient(lambda t: 0.0, np.zeros(1), h=0.0)

    def test_nonfinite_loss(self):
        with pytest.raises(NumericError):
            finite_diff_gradient(lambda t: float("nan"), np.zeros(1), h=1e-5)
