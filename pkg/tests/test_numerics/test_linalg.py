import os
import sys

import numpy as np
import pytest
from pydantic import ValidationError

dir_path = os.path.dirname(os.path.realpath(__file__))
sys.path.append(os.path.realpath(f"{dir_path}/../.."))

from voxquery.errors import ShapeError
from voxquery.numerics import layer_norm, linear_apply, relu, softmax


class TestLinearApply:
    # Identity weight and zero bias return the input
    def test_identity(self):
        m = {"weight": np.eye(2), "bias": np.zeros(2)}
        np.testing.assert_array_equal(linear_apply(m, np.array([1.0, 2.0])), [1.0, 2.0])

    # Hand-computed matrix product
    def test_hand_computed(self):
        m = {"weight": np.array([[2.0, 0.0], [0.0, 3.0]]), "bias": np.array([1.0, 1.0])}
        np.testing.assert_array_equal(linear_apply(m, np.array([1.0, 1.0])), [3.0, 4.0])

    # Zero weight returns the bias for any input
    def test_zero_map(self):
        m = {"weight": np.zeros((3, 2)), "bias": np.array([1.0, -2.0, 0.5])}
        x = np.random.default_rng(0).normal(size=(4, 2))
        np.testing.assert_array_equal(linear_apply(m, x), np.tile(m["bias"], (4, 1)))

    # Leading axes are preserved
    def test_batched(self):
        rng = np.random.default_rng(1)
        m = {"weight": rng.normal(size=(5, 3)), "bias": rng.normal(size=5)}
        x = rng.normal(size=(2, 4, 3))
        out = linear_apply(m, x)
        assert out.shape == (2, 4, 5)
        np.testing.assert_allclose(out[1, 2], m["weight"] @ x[1, 2] + m["bias"])

    # Mismatched input extent raises a shape error
    def test_dimension_mismatch(self):
        m = {"weight": np.eye(2), "bias": np.zeros(2)}
        with pytest.raises(ShapeError):
            linear_apply(m, np.ones(3))

    # Curried form applies the same map
    def test_curried(self):
        m = {"weight": np.eye(2) * 2.0, "bias": np.zeros(2)}
        double = linear_apply(m)
        np.testing.assert_array_equal(double(np.array([1.0, 2.0])), [2.0, 4.0])

    # Non-array inputs are rejected by validation
    def test_rejects_list(self):
        m = {"weight": np.eye(2), "bias": np.zeros(2)}
        with pytest.raises(ValidationError):
            linear_apply(m, [1.0, 2.0])


class TestSoftmax:
    # Equal logits give a uniform distribution
    def test_uniform(self):
        np.testing.assert_allclose(softmax(np.zeros(3)), np.full(3, 1 / 3))

    # Log-weights recover normalised weights
    def test_log_weights(self):
        np.testing.assert_allclose(
            softmax(np.log(np.array([1.0, 2.0, 3.0]))), [1 / 6, 2 / 6, 3 / 6], rtol=1e-12
        )

    # Large logits do not overflow
    def test_stability(self):
        out = softmax(np.array([1000.0, 0.0]))
        assert np.all(np.isfinite(out))
        assert out[0] == pytest.approx(1.0)
        assert out[1] == pytest.approx(0.0, abs=1e-300)

    # Rows sum to one along the chosen axis
    def test_sums_to_one_along_axis(self):
        x = np.random.default_rng(2).normal(scale=30.0, size=(6, 7))
        np.testing.assert_allclose(softmax(x, axis=0).sum(axis=0), 1.0, atol=1e-12)
        np.testing.assert_allclose(softmax(x).sum(axis=-1), 1.0, atol=1e-12)


class TestLayerNorm:
    # Constant slices normalise to zero
    def test_constant_slice(self):
        out = layer_norm(np.full((2, 4), 3.0), np.ones(4), np.zeros(4))
        np.testing.assert_array_equal(out, np.zeros((2, 4)))

    # Two-element hand case with eps = 0
    def test_hand_case(self):
        out = layer_norm(np.array([1.0, 3.0]), np.ones(2), np.zeros(2), eps=0.0)
        np.testing.assert_allclose(out, [-1.0, 1.0])

    # Zero gamma gives beta everywhere
    def test_zero_gamma(self):
        beta = np.array([0.5, -1.0, 2.0])
        x = np.random.default_rng(3).normal(size=(5, 3))
        np.testing.assert_array_equal(layer_norm(x, np.zeros(3), beta), np.tile(beta, (5, 1)))

    # Output slices have zero mean and unit variance
    def test_moments(self):
        x = np.random.default_rng(4).normal(size=(10, 8))
        out = layer_norm(x, np.ones(8), np.zeros(8), eps=0.0)
        np.testing.assert_allclose(out.mean(axis=-1), 0.0, atol=1e-12)
        np.testing.assert_allclose(out.var(axis=-1), 1.0, atol=1e-12)

    # Mismatched affine parameters raise a shape error
    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            layer_norm(np.ones((2, 3)), np.ones(2), np.zeros(2))


class TestRelu:
    # Negative entries are clipped to zero
    def test_clips_negatives(self):
        np.testing.assert_array_equal(relu(np.array([-1.0, 0.0, 2.5])), [0.0, 0.0, 2.5])
