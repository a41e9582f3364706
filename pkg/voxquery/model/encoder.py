"""
Deformable self-attention over the image feature pyramid.
"""

import numpy as np
import toolz as tz

from ..attention import deformable_attn_2d, residual_block
from ..validation import StageParams


def texel_positions(level: np.ndarray) -> np.ndarray:
    """
    Normalised ``(x, y)`` position of every texel of an (H, W, C) level, row-major.
    """
    height, width = level.shape[:2]
    rows, cols = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    return np.stack(
        [cols.reshape(-1) / max(width - 1, 1), rows.reshape(-1) / max(height - 1, 1)],
        axis=-1,
    )


def encoder_layer(stage: StageParams, features: list[np.ndarray]) -> list[np.ndarray]:
    """
    One encoder layer: every texel of every level queries the whole pyramid
    around its own position.
    """
    queries = np.concatenate([level.reshape(-1, level.shape[-1]) for level in features])
    refs = np.concatenate([texel_positions(level) for level in features])
    updated = residual_block(
        stage["block"], queries, deformable_attn_2d(stage["attn"], queries, refs, features)
    )
    splits = np.cumsum([level.shape[0] * level.shape[1] for level in features])[:-1]
    return [
        part.reshape(level.shape)
        for part, level in zip(np.split(updated, splits), features)
    ]


def encode_features(
    stages: list[StageParams], features: list[np.ndarray]
) -> list[np.ndarray]:
    """
    Apply the encoder layers in order; no layers returns ``features`` unchanged.
    """
    return tz.reduce(lambda levels, stage: encoder_layer(stage, levels), stages, list(features))
