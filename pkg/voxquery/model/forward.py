"""
End-to-end forward pass from camera, depth and image features to voxel logits.
"""

from typing import Optional

import numpy as np
from loguru import logger

from ..errors import ConfigError
from ..validation import (CameraModel, DepthMap, InstanceQueries, ModelParams,
                          PipelineTrace)
from .config import ModelConfig
from .decoder import run_decoder_stack
from .encoder import encode_features
from .head import prediction_head
from .params import build_instance_queries
from .scene import init_scene, project_features, voxel_proposal_layer


def _check_inputs(config: ModelConfig, features: list[np.ndarray], params: ModelParams) -> None:
    if len(features) != config.feature_levels:
        raise ConfigError(
            f"Expected {config.feature_levels} feature levels, got {len(features)}"
        )
    if any(level.ndim != 3 or level.shape[-1] != config.embed_dim for level in features):
        raise ConfigError(
            f"Feature levels {[level.shape for level in features]} do not have {config.embed_dim} channels"
        )
    if len(params["decoder"]) != config.decoder_layers or len(params["encoder"]) != config.encoder_layers:
        raise ConfigError(
            f"Parameters hold {len(params['encoder'])} encoder and {len(params['decoder'])} decoder layers, "
            f"configuration asks for {config.encoder_layers} and {config.decoder_layers}"
        )


def trace_pipeline(
    config: ModelConfig,
    cam: CameraModel,
    depth: DepthMap,
    features: list[np.ndarray],
    params: ModelParams,
    instances: Optional[InstanceQueries] = None,
) -> PipelineTrace:
    """
    Forward pass keeping every intermediate state.

    Parameters
    ----------
    config : ModelConfig
        Architecture
    cam : CameraModel
        Camera
    depth : DepthMap
        Depth map of the camera image
    features : list[np.ndarray]
        Image feature pyramid, finest level first
    params : ModelParams
        Parameters built for ``config``
    instances : InstanceQueries | None
        Instance queries overriding those built from ``params``; ignored when
        the query mode is ``none``

    Returns
    -------
    PipelineTrace
        Intermediate scenes, instances and the final and auxiliary logits

    Raises
    ------
    ConfigError
        If the inputs and parameters do not match the configuration
    """
    _check_inputs(config, features, params)
    grid = config.grid.spec()
    features = encode_features(params["encoder"], features)
    scene = init_scene(grid, cam, depth, params["scene_embeddings"])
    lifted = (
        voxel_proposal_layer(scene, features, params["proposal"])
        if config.lifting == "proposal"
        else project_features(scene, features, cam, grid)
    )
    queries = (
        (instances if instances is not None else build_instance_queries(config, params))
        if config.uses_instances
        else None
    )
    final_scene, final_instances, scenes = run_decoder_stack(
        lifted, queries, features, cam, grid, depth, params["decoder"], config.stages
    )
    logits = prediction_head(final_scene["embeddings"], params["head"], config.upsample_factor)
    aux_logits = [prediction_head(s["embeddings"], params["head"], 1) for s in scenes]
    logger.debug(f"Forward pass produced logits of shape {logits.shape}")
    return {
        "features": features,
        "initial": scene,
        "lifted": lifted,
        "scenes": scenes,
        "instances_in": queries,
        "instances": final_instances,
        "logits": logits,
        "aux_logits": aux_logits,
    }


def forward_pipeline(
    config: ModelConfig,
    cam: CameraModel,
    depth: DepthMap,
    features: list[np.ndarray],
    params: ModelParams,
    instances: Optional[InstanceQueries] = None,
) -> tuple[np.ndarray, list[np.ndarray]]:
    """
    Final logits at label resolution and the per-layer auxiliary logits at
    decoder resolution. See ``trace_pipeline``.
    """
    trace = trace_pipeline(config, cam, depth, features, params, instances)
    return trace["logits"], trace["aux_logits"]
