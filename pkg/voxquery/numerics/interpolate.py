"""
Align-corners interpolation with zero padding.

A normalised coordinate ``p`` in [0, 1] maps to the index ``p * (extent - 1)``
along its axis; texels outside the array contribute zero. For images the point
is ``(x, y)`` with ``x`` along the width (columns) and ``y`` along the height
(rows). For volumes the point is ``(x, y, z)`` along the array's first three axes.
"""

import itertools
from typing import Annotated

import numpy as np
import toolz as tz
from pydantic import AfterValidator, validate_call

from ..errors import DomainError, NonDifferentiableError
from ..futils import curry
from ..validation import FloatArray, NumpyArrayAnnotation, is_ndim

Image = Annotated[np.ndarray, NumpyArrayAnnotation[np.floating], AfterValidator(is_ndim(ndim=3))]
Volume = Annotated[np.ndarray, NumpyArrayAnnotation[np.floating], AfterValidator(is_ndim(ndim=4))]


def _image_coords(fmap: np.ndarray, points: np.ndarray) -> np.ndarray:
    # (x, y) normalised -> (row, col) texel coordinates
    height, width = fmap.shape[:2]
    return np.stack(
        [points[..., 1] * (height - 1), points[..., 0] * (width - 1)], axis=-1
    )


def _volume_coords(vol: np.ndarray, points: np.ndarray) -> np.ndarray:
    return points * (np.array(vol.shape[:3], dtype=np.float64) - 1)


def _sample_many(grid: np.ndarray, coords: np.ndarray) -> np.ndarray:
    """
    Multilinear interpolation of ``grid`` (spatial axes first, channels last)
    at texel coordinates ``coords`` of shape (N, d).
    """
    ndim = coords.shape[-1]
    extents = np.array(grid.shape[:ndim])
    lower = np.floor(coords)
    frac = coords - lower
    lower = lower.astype(np.int64)

    out = np.zeros((coords.shape[0], grid.shape[-1]), dtype=np.result_type(grid, np.float64))
    for corner in itertools.product((0, 1), repeat=ndim):
        idx = lower + np.array(corner)
        inside = np.all((idx >= 0) & (idx < extents), axis=-1)
        weight = np.prod(np.where(np.array(corner), frac, 1.0 - frac), axis=-1)
        clipped = np.clip(idx, 0, extents - 1)
        values = grid[tuple(clipped.T)]
        out += np.where(inside, weight, 0.0)[:, None] * values
    return out


def _sample_grad(grid: np.ndarray, coords: np.ndarray) -> np.ndarray:
    """
    Derivative of ``_sample_many`` at one texel coordinate, shape (C, d).
    """
    if np.any(coords == np.floor(coords)):
        raise NonDifferentiableError(
            f"Point with texel coordinates {coords.tolist()} lies on a lattice line"
        )
    ndim = coords.shape[0]
    extents = np.array(grid.shape[:ndim])
    lower = np.floor(coords).astype(np.int64)
    frac = coords - lower

    grad = np.zeros((grid.shape[-1], ndim))
    for corner in itertools.product((0, 1), repeat=ndim):
        idx = lower + np.array(corner)
        if np.any(idx < 0) or np.any(idx >= extents):
            continue
        value = grid[tuple(idx)]
        factors = np.where(np.array(corner), frac, 1.0 - frac)
        for axis in range(ndim):
            slope = 1.0 if corner[axis] else -1.0
            grad[:, axis] += slope * np.prod(np.delete(factors, axis)) * value
    return grad


@curry
@validate_call()
def bilinear_sample(fmap: Image, p: FloatArray) -> np.ndarray:
    """
    Sample a feature map at a normalised 2D point.

    Reads the four texels around ``p`` one at a time; this is the reference
    that ``bilinear_sample_many`` is tested against.

    Parameters
    ----------
    fmap : np.ndarray
        Feature map of shape (H, W, C)
    p : np.ndarray
        Point ``(x, y)``; values outside [0, 1] are allowed

    Returns
    -------
    np.ndarray
        Feature vector of shape (C,)

    Examples
    --------
    >>> fmap = np.arange(4.0).reshape(2, 2, 1)
    >>> bilinear_sample(fmap, np.array([0.5, 0.5]))
    array([1.5])
    >>> bilinear_sample(fmap, np.array([-5.0, 0.5]))
    array([0.])
    """
    height, width = fmap.shape[:2]
    u, v = p[0] * (width - 1), p[1] * (height - 1)
    u0, v0 = int(np.floor(u)), int(np.floor(v))
    fu, fv = u - u0, v - v0

    out = np.zeros(fmap.shape[-1])
    for row, wv in ((v0, 1.0 - fv), (v0 + 1, fv)):
        for col, wu in ((u0, 1.0 - fu), (u0 + 1, fu)):
            if 0 <= row < height and 0 <= col < width:
                out = out + wv * wu * fmap[row, col]
    return out


@curry
@validate_call()
def trilinear_sample(vol: Volume, p: FloatArray) -> np.ndarray:
    """
    Sample a volume at a normalised 3D point by reading its eight corner voxels.

    Parameters
    ----------
    vol : np.ndarray
        Volume of shape (X, Y, Z, C)
    p : np.ndarray
        Point ``(x, y, z)``; values outside [0, 1] are allowed

    Returns
    -------
    np.ndarray
        Feature vector of shape (C,)
    """
    extents = vol.shape[:3]
    coords = [p[axis] * (extents[axis] - 1) for axis in range(3)]
    lower = [int(np.floor(c)) for c in coords]
    frac = [c - lo for c, lo in zip(coords, lower)]

    out = np.zeros(vol.shape[-1])
    for corner in itertools.product((0, 1), repeat=3):
        idx = [lo + d for lo, d in zip(lower, corner)]
        if all(0 <= i < n for i, n in zip(idx, extents)):
            weight = np.prod([f if d else 1.0 - f for f, d in zip(frac, corner)])
            out = out + weight * vol[idx[0], idx[1], idx[2]]
    return out


def bilinear_sample_many(fmap: np.ndarray, points: np.ndarray) -> np.ndarray:
    """
    Sample ``fmap`` (H, W, C) at every row of ``points`` (N, 2), returning (N, C).
    """
    return _sample_many(fmap, _image_coords(fmap, points.reshape(-1, 2)))


def trilinear_sample_many(vol: np.ndarray, points: np.ndarray) -> np.ndarray:
    """
    Sample ``vol`` (X, Y, Z, C) at every row of ``points`` (N, 3), returning (N, C).
    """
    return _sample_many(vol, _volume_coords(vol, points.reshape(-1, 3)))


@curry
@validate_call()
def bilinear_sample_grad(fmap: Image, p: FloatArray) -> np.ndarray:
    """
    Derivative of ``bilinear_sample`` with respect to the normalised point.

    Returns
    -------
    np.ndarray
        Matrix of shape (C, 2); column 0 is the derivative along ``x`` and
        column 1 along ``y``

    Raises
    ------
    NonDifferentiableError
        If ``p`` lies on a texel row or column

    Examples
    --------
    >>> ramp = np.tile(np.arange(5.0)[None, :, None], (3, 1, 1))  # f = column index
    >>> bilinear_sample_grad(ramp, np.array([0.3, 0.4]))
    array([[4., 0.]])
    """
    height, width = fmap.shape[:2]
    grad = _sample_grad(fmap, _image_coords(fmap, p))
    # chain rule through the align-corners scaling, reordered to (x, y)
    return grad[:, ::-1] * np.array([width - 1, height - 1], dtype=np.float64)


@curry
@validate_call()
def trilinear_sample_grad(vol: Volume, p: FloatArray) -> np.ndarray:
    """
    Derivative of ``trilinear_sample`` with respect to the normalised point,
    shape (C, 3).

    Raises
    ------
    NonDifferentiableError
        If ``p`` lies on a lattice plane
    """
    return _sample_grad(vol, _volume_coords(vol, p)) * (
        np.array(vol.shape[:3], dtype=np.float64) - 1
    )


def _upsample_axis(arr: np.ndarray, axis: int, n_out: int) -> np.ndarray:
    n_in = arr.shape[axis]
    if n_in == n_out:
        return arr
    src = (
        np.arange(n_out) * (n_in - 1) / (n_out - 1)
        if n_out > 1
        else np.zeros(1)
    )
    lower = np.floor(src).astype(np.int64)
    upper = np.minimum(lower + 1, n_in - 1)
    shape = [1] * arr.ndim
    shape[axis] = n_out
    frac = (src - lower).reshape(shape)
    return (1.0 - frac) * np.take(arr, lower, axis=axis) + frac * np.take(
        arr, upper, axis=axis
    )


@curry
@validate_call()
def upsample_trilinear(vol: Volume, factor: int) -> np.ndarray:
    """
    Align-corners trilinear upsampling of a volume by an integer factor.

    Every output voxel ``(i, j, k)`` takes the value ``trilinear_sample`` gives
    at ``(i / (fX - 1), j / (fY - 1), k / (fZ - 1))``. The interpolation is
    separable, so it runs one axis at a time.

    Parameters
    ----------
    vol : np.ndarray
        Volume of shape (X, Y, Z, C)
    factor : int
        Upsampling factor, at least 1; 1 returns a copy of ``vol``

    Returns
    -------
    np.ndarray
        Volume of shape (factor * X, factor * Y, factor * Z, C)
    """
    if factor < 1:
        raise DomainError(f"Upsampling factor must be at least 1, got {factor}")
    if factor == 1:
        return vol.copy()
    return tz.reduce(
        lambda arr, axis: _upsample_axis(arr, axis, factor * vol.shape[axis]),
        range(3),
        vol,
    )
