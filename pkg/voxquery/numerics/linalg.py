"""
Dense linear algebra on channel-last arrays.
"""

from typing import Annotated

import numpy as np
from pydantic import validate_call

from ..errors import ShapeError
from ..futils import curry
from ..validation import FloatArray, LinearMap, NumpyArrayAnnotation

NumericArray = Annotated[np.ndarray, NumpyArrayAnnotation[np.floating | np.integer]]


@curry
@validate_call()
def linear_apply(m: LinearMap, x: NumericArray) -> np.ndarray:
    """
    Apply an affine map to the last axis of ``x``.

    Parameters
    ----------
    m : LinearMap
        ``weight`` of shape (out_dim, in_dim) and ``bias`` of shape (out_dim,)
    x : np.ndarray
        Array of shape (..., in_dim)

    Returns
    -------
    np.ndarray
        Array of shape (..., out_dim), ``y[..., j] = sum_i weight[j, i] * x[..., i] + bias[j]``

    Raises
    ------
    ShapeError
        If the extents of ``m`` and ``x`` disagree

    Examples
    --------
    >>> m = {"weight": np.array([[2.0, 0.0], [0.0, 3.0]]), "bias": np.array([1.0, 1.0])}
    >>> linear_apply(m, np.array([1.0, 1.0]))
    array([3., 4.])
    """
    weight, bias = m["weight"], m["bias"]
    if weight.ndim != 2 or bias.shape != (weight.shape[0],):
        raise ShapeError(
            f"Inconsistent linear map: weight {weight.shape}, bias {bias.shape}"
        )
    if x.shape[-1] != weight.shape[1]:
        raise ShapeError(
            f"Expected last extent {weight.shape[1]}, got input of shape {x.shape}"
        )
    return x @ weight.T + bias


@curry
def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """
    Numerically stable softmax along ``axis``.

    Examples
    --------
    >>> softmax(np.log(np.array([1.0, 2.0, 3.0])))
    array([0.16666667, 0.33333333, 0.5       ])
    >>> softmax(np.array([1000.0, 0.0]))
    array([1., 0.])
    """
    shifted = np.exp(x - np.max(x, axis=axis, keepdims=True))
    return shifted / np.sum(shifted, axis=axis, keepdims=True)


@curry
@validate_call()
def layer_norm(
    x: NumericArray,
    gamma: FloatArray,
    beta: FloatArray,
    eps: float = 1e-5,
) -> np.ndarray:
    """
    Normalise every slice along the last axis to zero mean and unit variance,
    then scale by ``gamma`` and shift by ``beta``.

    Parameters
    ----------
    x : np.ndarray
        Array of shape (..., C), C >= 1
    gamma, beta : np.ndarray
        Affine parameters of shape (C,)
    eps : float
        Added to the (biased) variance before the square root

    Examples
    --------
    >>> layer_norm(np.array([1.0, 3.0]), np.ones(2), np.zeros(2), eps=0.0)
    array([-1.,  1.])
    """
    if gamma.shape != (x.shape[-1],) or beta.shape != (x.shape[-1],):
        raise ShapeError(
            f"Affine parameters {gamma.shape}, {beta.shape} do not match input {x.shape}"
        )
    centred = x - np.mean(x, axis=-1, keepdims=True)
    variance = np.mean(centred**2, axis=-1, keepdims=True)
    return centred / np.sqrt(variance + eps) * gamma + beta


def relu(x: np.ndarray) -> np.ndarray:
    """
    Elementwise ``max(0, x)``.
    """
    return np.maximum(x, 0.0)
