"""
Parameter tree of the whole model and instance query construction.
"""

from typing import Optional

import numpy as np
from loguru import logger

from ..attention import (init_deformable, init_dot_product, init_linear,
                         init_residual_block)
from ..validation import (HeadParams, InstanceQueries, ModelParams,
                          StageParams)
from .config import STAGE_NAMES, ModelConfig

HEAD_DILATIONS = (1, 2, 3)


def _deformable_stage(
    rng: np.random.Generator, config: ModelConfig, levels: int, ndim: int
) -> StageParams:
    return {
        "attn": init_deformable(
            rng, config.embed_dim, config.heads, levels, config.sampling_points, ndim
        ),
        "block": init_residual_block(rng, config.embed_dim, config.ffn_ratio),
    }


def _dot_product_stage(rng: np.random.Generator, config: ModelConfig) -> StageParams:
    return {
        "attn": init_dot_product(rng, config.embed_dim, config.heads),
        "block": init_residual_block(rng, config.embed_dim, config.ffn_ratio),
    }


def _decoder_layer(rng: np.random.Generator, config: ModelConfig) -> dict[str, StageParams]:
    builders = {
        "instance_image": lambda: _deformable_stage(rng, config, config.feature_levels, 2),
        "scene_instance": lambda: _dot_product_stage(rng, config),
        "scene_self": lambda: _deformable_stage(rng, config, 1, 3),
        "instance_scene": lambda: _deformable_stage(rng, config, 1, 3),
        "instance_self": lambda: _dot_product_stage(rng, config),
    }
    return {name: builders[name]() for name in STAGE_NAMES}


def _head(rng: np.random.Generator, config: ModelConfig) -> HeadParams:
    dim = config.embed_dim
    return {
        "aspp": [
            {
                "kernel": rng.normal(scale=1.0 / np.sqrt(27 * dim), size=(3, 3, 3, dim, dim)),
                "bias": np.zeros(dim),
                "dilation": dilation,
            }
            for dilation in HEAD_DILATIONS
        ],
        "mix": init_linear(rng, dim, dim),
        "classifier": init_linear(rng, dim, config.num_classes),
    }


def init_params(config: ModelConfig, seed: int = 0) -> ModelParams:
    """
    Build every parameter of the model from a seed.

    All five decoder stages get parameters whether or not they are enabled, so
    one parameter set serves every stage-flag combination of a configuration.

    Parameters
    ----------
    config : ModelConfig
        Architecture
    seed : int
        Seed of ``numpy.random.default_rng``

    Returns
    -------
    ModelParams
        Parameter tree; identical seeds give bitwise identical trees
    """
    rng = np.random.default_rng(seed)
    dims = config.grid.dims
    params: ModelParams = {
        "scene_embeddings": rng.normal(size=(*dims, config.embed_dim)),
        "query_embeddings": rng.normal(size=(config.num_queries, config.embed_dim)),
        "query_ref_logits": rng.normal(size=(config.num_queries, 2)),
        "encoder": [
            _deformable_stage(rng, config, config.feature_levels, 2)
            for _ in range(config.encoder_layers)
        ],
        "proposal": _deformable_stage(rng, config, config.feature_levels, 2),
        "decoder": [_decoder_layer(rng, config) for _ in range(config.decoder_layers)],
        "head": _head(rng, config),
    }
    logger.debug(
        f"Initialised parameters for {config.decoder_layers} decoder layers, "
        f"{config.encoder_layers} encoder layers and {config.num_queries} queries"
    )
    return params


def stratified_points(n: int) -> np.ndarray:
    """
    ``n`` normalised image points at the cell centres of a near-square grid,
    filled row by row.

    Examples
    --------
    >>> stratified_points(4)
    array([[0.25, 0.25],
           [0.75, 0.25],
           [0.25, 0.75],
           [0.75, 0.75]])
    """
    cols = max(int(np.ceil(np.sqrt(n))), 1)
    rows = max(int(np.ceil(n / cols)), 1)
    index = np.arange(n)
    return np.stack([(index % cols + 0.5) / cols, (index // cols + 0.5) / rows], axis=-1)


def build_instance_queries(
    config: ModelConfig, params: ModelParams
) -> Optional[InstanceQueries]:
    """
    Instance queries for the configured query mode.

    ``learnable`` squashes the stored reference logits through a sigmoid;
    ``detached`` places the reference points on a fixed stratified grid;
    ``none`` (or zero queries) returns ``None``.
    """
    if not config.uses_instances:
        return None
    learnable = config.query_mode == "learnable"
    refs = (
        1.0 / (1.0 + np.exp(-params["query_ref_logits"]))
        if learnable
        else stratified_points(config.num_queries)
    )
    return {
        "embeddings": params["query_embeddings"],
        "ref_points_2d": refs,
        "learnable": learnable,
    }
