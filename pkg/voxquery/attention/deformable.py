"""
Multi-head deformable attention over image feature levels and scene volumes.

Each query reads ``sampling_points`` values per head and level around its
reference point. Sampling locations are ``ref + offset / (extent - 1)`` per
axis, so a raw offset of 1.0 moves one texel (or voxel). Attention weights are
softmax-normalised over all levels and points of a head.
"""

import numpy as np

from ..errors import ShapeError
from ..numerics import (bilinear_sample_many, linear_apply, softmax,
                        trilinear_sample_many)
from ..validation import DeformableAttnParams


def level_scale(level: np.ndarray, ndim: int) -> np.ndarray:
    """
    Per-axis ``extent - 1`` of a feature level in point order, at least 1.

    Image levels are (H, W, C) with points ``(x, y)``; volumes are (X, Y, Z, C)
    with points ``(x, y, z)``.
    """
    extents = level.shape[:ndim][::-1] if ndim == 2 else level.shape[:ndim]
    return np.maximum(np.array(extents, dtype=np.float64) - 1, 1)


def _check_inputs(
    params: DeformableAttnParams,
    queries: np.ndarray,
    ref_points: np.ndarray,
    levels: list[np.ndarray],
) -> None:
    ndim, heads = params["ndim"], params["heads"]
    if queries.ndim != 2 or ref_points.shape != (queries.shape[0], ndim):
        raise ShapeError(
            f"Expected queries (N, C) and reference points (N, {ndim}), got {queries.shape} and {ref_points.shape}"
        )
    if len(levels) != params["levels"] or not levels:
        raise ShapeError(f"Expected {params['levels']} feature levels, got {len(levels)}")
    if queries.shape[1] % heads:
        raise ShapeError(f"Embedding dim {queries.shape[1]} is not divisible by {heads} heads")
    for level in levels:
        if level.ndim != ndim + 1 or level.shape[-1] != queries.shape[1]:
            raise ShapeError(
                f"Feature level of shape {level.shape} does not match {ndim}D queries of dim {queries.shape[1]}"
            )


def sampling_weights(params: DeformableAttnParams, queries: np.ndarray) -> np.ndarray:
    """
    Post-softmax attention weights of shape (N, heads, levels, sampling_points).
    """
    heads, n_levels, n_points = params["heads"], params["levels"], params["sampling_points"]
    logits = linear_apply(params["weight_net"], queries).reshape(
        queries.shape[0], heads, n_levels * n_points
    )
    return softmax(logits, axis=-1).reshape(queries.shape[0], heads, n_levels, n_points)


def sampling_locations(
    params: DeformableAttnParams,
    queries: np.ndarray,
    ref_points: np.ndarray,
    levels: list[np.ndarray],
) -> np.ndarray:
    """
    Normalised sampling locations of shape (N, heads, levels, sampling_points, ndim).
    """
    ndim = params["ndim"]
    offsets = linear_apply(params["offset_net"], queries).reshape(
        queries.shape[0], params["heads"], params["levels"], params["sampling_points"], ndim
    )
    scales = np.stack([level_scale(level, ndim) for level in levels])
    return ref_points[:, None, None, None, :] + offsets / scales[None, None, :, None, :]


def _deformable_attn(
    params: DeformableAttnParams,
    queries: np.ndarray,
    ref_points: np.ndarray,
    levels: list[np.ndarray],
) -> np.ndarray:
    _check_inputs(params, queries, ref_points, levels)
    n_queries, dim = queries.shape
    heads = params["heads"]
    head_dim = dim // heads
    sampler = bilinear_sample_many if params["ndim"] == 2 else trilinear_sample_many

    locations = sampling_locations(params, queries, ref_points, levels)
    weights = sampling_weights(params, queries)

    out = np.zeros((n_queries, heads, head_dim))
    for l, level in enumerate(levels):
        values = linear_apply(params["value_proj"], level)
        for h in range(heads):
            head_values = values[..., h * head_dim : (h + 1) * head_dim]
            sampled = sampler(head_values, locations[:, h, l].reshape(-1, params["ndim"]))
            sampled = sampled.reshape(n_queries, params["sampling_points"], head_dim)
            out[:, h] += np.einsum("nk,nkd->nd", weights[:, h, l], sampled)
    return linear_apply(params["output_proj"], out.reshape(n_queries, dim))


def deformable_attn_2d(
    params: DeformableAttnParams,
    queries: np.ndarray,
    ref_points: np.ndarray,
    features: list[np.ndarray],
) -> np.ndarray:
    """
    Deformable attention from queries into a multi-scale image feature pyramid.

    Parameters
    ----------
    params : DeformableAttnParams
        Parameters with ``ndim == 2``
    queries : np.ndarray
        Query embeddings (N, C)
    ref_points : np.ndarray
        Normalised image reference points ``(x, y)``, (N, 2)
    features : list[np.ndarray]
        Feature levels, each (H_l, W_l, C)

    Returns
    -------
    np.ndarray
        Attention output (N, C); the residual is not included

    Raises
    ------
    ShapeError
        If queries, reference points, levels and parameters disagree
    """
    return _deformable_attn(params, queries, ref_points, list(features))


def deformable_attn_3d(
    params: DeformableAttnParams,
    queries: np.ndarray,
    ref_points: np.ndarray,
    volume: np.ndarray,
) -> np.ndarray:
    """
    Deformable attention from queries into a single scene volume.

    Parameters
    ----------
    params : DeformableAttnParams
        Parameters with ``ndim == 3`` and one level
    queries : np.ndarray
        Query embeddings (M, C)
    ref_points : np.ndarray
        Normalised lattice reference points, (M, 3)
    volume : np.ndarray
        Scene features (X, Y, Z, C)

    Returns
    -------
    np.ndarray
        Attention output (M, C); the residual is not included
    """
    return _deformable_attn(params, queries, ref_points, [volume])
