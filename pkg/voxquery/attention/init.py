"""
Deterministic parameter initialisation for attention stages.
"""

import numpy as np
from pydantic import validate_call

from ..errors import ConfigError
from ..futils import curry
from ..validation import (DeformableAttnParams, DotProductAttnParams,
                          LinearMap, ResidualBlockParams)


@curry
def init_linear(rng: np.random.Generator, in_dim: int, out_dim: int) -> LinearMap:
    """
    Xavier-uniform weight (out_dim, in_dim) and zero bias.
    """
    limit = np.sqrt(6.0 / (in_dim + out_dim))
    return {
        "weight": rng.uniform(-limit, limit, size=(out_dim, in_dim)),
        "bias": np.zeros(out_dim),
    }


def head_directions(heads: int, ndim: int) -> np.ndarray:
    """
    One direction per head on the unit square (cube), shape (heads, ndim).

    Head ``h`` points at angle ``2 pi h / heads`` in the first two axes; in 3D
    the third component is ``cos(2 angle)`` so opposite heads differ in height.
    Each direction is scaled so its largest component has magnitude 1.
    """
    angles = np.arange(heads) * (2 * np.pi / heads)
    directions = np.stack(
        [np.cos(angles), np.sin(angles)] + ([np.cos(2 * angles)] if ndim == 3 else []),
        axis=-1,
    )
    return directions / np.abs(directions).max(axis=-1, keepdims=True)


@curry
@validate_call(config={"arbitrary_types_allowed": True})
def init_deformable(
    rng: np.random.Generator,
    embed_dim: int,
    heads: int,
    levels: int,
    sampling_points: int,
    ndim: int,
) -> DeformableAttnParams:
    """
    Deformable attention parameters with a fixed initial sampling stencil.

    The offset network has zero weights and a bias placing sample ``k`` of head
    ``h`` at ``(k + 1)`` texels along that head's direction, on every level. The
    weight network is zero, so initial attention weights are uniform.

    Raises
    ------
    ConfigError
        If ``embed_dim`` is not divisible by ``heads`` or ``ndim`` is not 2 or 3
    """
    if ndim not in (2, 3):
        raise ConfigError(f"Deformable attention is 2D or 3D, got ndim={ndim}")
    if heads < 1 or embed_dim % heads:
        raise ConfigError(f"Embedding dim {embed_dim} is not divisible by {heads} heads")
    n_samples = heads * levels * sampling_points

    stencil = (
        head_directions(heads, ndim)[:, None, None, :]
        * (np.arange(sampling_points) + 1.0)[None, None, :, None]
    )
    stencil = np.broadcast_to(stencil, (heads, levels, sampling_points, ndim))
    return {
        "ndim": ndim,
        "heads": heads,
        "levels": levels,
        "sampling_points": sampling_points,
        "value_proj": init_linear(rng, embed_dim, embed_dim),
        "output_proj": init_linear(rng, embed_dim, embed_dim),
        "offset_net": {
            "weight": np.zeros((n_samples * ndim, embed_dim)),
            "bias": stencil.reshape(-1).copy(),
        },
        "weight_net": {
            "weight": np.zeros((n_samples, embed_dim)),
            "bias": np.zeros(n_samples),
        },
    }


@curry
@validate_call(config={"arbitrary_types_allowed": True})
def init_dot_product(
    rng: np.random.Generator, embed_dim: int, heads: int
) -> DotProductAttnParams:
    """
    Xavier-initialised query, key, value and output projections.
    """
    if heads < 1 or embed_dim % heads:
        raise ConfigError(f"Embedding dim {embed_dim} is not divisible by {heads} heads")
    return {
        "heads": heads,
        "q_proj": init_linear(rng, embed_dim, embed_dim),
        "k_proj": init_linear(rng, embed_dim, embed_dim),
        "v_proj": init_linear(rng, embed_dim, embed_dim),
        "output_proj": init_linear(rng, embed_dim, embed_dim),
    }


@curry
@validate_call(config={"arbitrary_types_allowed": True})
def init_residual_block(
    rng: np.random.Generator, embed_dim: int, ffn_ratio: int = 4
) -> ResidualBlockParams:
    """
    Feed-forward network with ``ffn_ratio * embed_dim`` hidden units and identity layer norms.
    """
    hidden = ffn_ratio * embed_dim
    identity_norm = lambda: {"gamma": np.ones(embed_dim), "beta": np.zeros(embed_dim), "eps": 1e-5}
    return {
        "ffn_hidden": init_linear(rng, embed_dim, hidden),
        "ffn_out": init_linear(rng, hidden, embed_dim),
        "norm_attn": identity_norm(),  # type: ignore
        "norm_ffn": identity_norm(),  # type: ignore
    }
