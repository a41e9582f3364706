"""
Prediction head: dilated 3D convolutions, channel mix, per-voxel classifier
and upsampling to label resolution.
"""

import numpy as np
import toolz as tz

from ..errors import ShapeError
from ..numerics import linear_apply, upsample_trilinear
from ..validation import ConvParams, HeadParams


def conv3d(x: np.ndarray, conv: ConvParams) -> np.ndarray:
    """
    3x3x3 convolution with the given dilation and zero padding, preserving the
    spatial shape.

    ``out[i] = bias + sum_o x[i + dilation * o] @ kernel[o + 1]`` over the 27
    offsets ``o`` in {-1, 0, 1}^3.

    Parameters
    ----------
    x : np.ndarray
        Volume (X, Y, Z, C_in)
    conv : ConvParams
        Kernel (3, 3, 3, C_in, C_out), bias (C_out,) and dilation

    Returns
    -------
    np.ndarray
        Volume (X, Y, Z, C_out)
    """
    kernel, d = conv["kernel"], int(conv["dilation"])
    if x.ndim != 4 or kernel.shape[:3] != (3, 3, 3) or kernel.shape[3] != x.shape[-1]:
        raise ShapeError(f"Cannot convolve a volume {x.shape} with a kernel {kernel.shape}")
    nx, ny, nz = x.shape[:3]
    padded = np.pad(x, ((d, d), (d, d), (d, d), (0, 0)))
    out = np.broadcast_to(conv["bias"], (nx, ny, nz, kernel.shape[4])).copy()
    for a in range(3):
        for b in range(3):
            for c in range(3):
                window = padded[a * d : a * d + nx, b * d : b * d + ny, c * d : c * d + nz]
                out += window @ kernel[a, b, c]
    return out


def aggregate(x: np.ndarray, head: HeadParams) -> np.ndarray:
    """
    Identity branch plus every dilated branch.
    """
    return tz.reduce(lambda acc, conv: acc + conv3d(x, conv), head["aspp"], x)


def prediction_head(
    scene_feats: np.ndarray, head: HeadParams, upsample_factor: int
) -> np.ndarray:
    """
    Per-voxel class logits from scene features.

    Parameters
    ----------
    scene_feats : np.ndarray
        Scene features (X, Y, Z, C)
    head : HeadParams
        Head parameters
    upsample_factor : int
        Label resolution over feature resolution

    Returns
    -------
    np.ndarray
        Logits (f * X, f * Y, f * Z, num_classes)
    """
    return tz.pipe(
        aggregate(scene_feats, head),
        linear_apply(head["mix"]),
        linear_apply(head["classifier"]),
        upsample_trilinear(factor=upsample_factor),
    )
