"""
Dense array math: affine maps, normalisation, interpolation and gradient checks.
"""

from .gradcheck import finite_diff_check
from .interpolate import (bilinear_sample, bilinear_sample_grad,
                          bilinear_sample_many, trilinear_sample,
                          trilinear_sample_grad, trilinear_sample_many,
                          upsample_trilinear)
from .linalg import layer_norm, linear_apply, relu, softmax

__all__ = [
    "linear_apply",
    "softmax",
    "layer_norm",
    "relu",
    "bilinear_sample",
    "trilinear_sample",
    "bilinear_sample_many",
    "trilinear_sample_many",
    "bilinear_sample_grad",
    "trilinear_sample_grad",
    "upsample_trilinear",
    "finite_diff_check",
]
