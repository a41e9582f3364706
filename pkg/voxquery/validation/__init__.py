"""
Datatypes and validators for function arguments.
"""

from .datatype import (IGNORE_LABEL, BoolArray, CameraModel, ConvParams,
                       DeformableAttnParams, DepthMap, DotProductAttnParams,
                       FloatArray, H5File, H5Group, HeadParams, IntArray,
                       InstanceQueries, LayerNormParams, LinearMap, LossReport,
                       MetricReport, ModelParams, NumpyArrayAnnotation,
                       PipelineTrace, ResidualBlockParams, SceneVolume,
                       StageParams, SyntheticScene, VoxelGridSpec,
                       VoxelProposal)
from .numpy import all_finite, is_ndim

__all__ = [
    "IGNORE_LABEL",
    "all_finite",
    "is_ndim",
    "NumpyArrayAnnotation",
    "FloatArray",
    "IntArray",
    "BoolArray",
    "H5File",
    "H5Group",
    "LinearMap",
    "LayerNormParams",
    "DeformableAttnParams",
    "DotProductAttnParams",
    "ResidualBlockParams",
    "StageParams",
    "ConvParams",
    "HeadParams",
    "ModelParams",
    "CameraModel",
    "VoxelGridSpec",
    "DepthMap",
    "VoxelProposal",
    "InstanceQueries",
    "SceneVolume",
    "LossReport",
    "MetricReport",
    "SyntheticScene",
    "PipelineTrace",
]
