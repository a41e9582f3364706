"""
The scene completion model: configuration, parameters, encoder, voxel
lifting, decoder layers and prediction head.
"""

from .config import (INSTANCE_STAGES, STAGE_NAMES, CameraConfig, GridConfig,
                     ModelConfig, OutputConfig, RunConfig, SceneConfig,
                     StageFlags, load_run_config)
from .decoder import (center_depth, decoder_layer, lift_reference_points,
                      reference_depths, run_decoder_stack)
from .encoder import encode_features, encoder_layer, texel_positions
from .forward import forward_pipeline, trace_pipeline
from .head import aggregate, conv3d, prediction_head
from .params import (HEAD_DILATIONS, build_instance_queries, init_params,
                     stratified_points)
from .scene import init_scene, project_features, voxel_proposal_layer

__all__ = [
    "STAGE_NAMES",
    "INSTANCE_STAGES",
    "GridConfig",
    "StageFlags",
    "ModelConfig",
    "SceneConfig",
    "CameraConfig",
    "OutputConfig",
    "RunConfig",
    "load_run_config",
    "HEAD_DILATIONS",
    "init_params",
    "stratified_points",
    "build_instance_queries",
    "texel_positions",
    "encoder_layer",
    "encode_features",
    "init_scene",
    "voxel_proposal_layer",
    "project_features",
    "center_depth",
    "reference_depths",
    "lift_reference_points",
    "decoder_layer",
    "run_decoder_stack",
    "conv3d",
    "aggregate",
    "prediction_head",
    "trace_pipeline",
    "forward_pipeline",
]
