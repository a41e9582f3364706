"""
Datatype definitions for validation.
"""

from types import UnionType
from typing import (Annotated, Any, Final, NotRequired, Optional, TypedDict,
                    get_args, get_origin)

import h5py
import numpy as np
from pydantic import GetCoreSchemaHandler
from pydantic_core import CoreSchema, core_schema

IGNORE_LABEL: Final[int] = 255
"""Label of voxels excluded from every loss and metric."""


class NumpyArrayAnnotation:
    """
    Pydantic core schema for numpy arrays.

    Annotate with ``Annotated[np.ndarray, NumpyArrayAnnotation]`` for an array of
    any dtype, or ``Annotated[np.ndarray, NumpyArrayAnnotation[np.floating]]`` to
    require the dtype to be a sub-dtype of the given numpy scalar type. Only the
    dtype is inspected, so validation costs the same for any array size.

    Examples
    --------
    >>> import numpy as np
    >>> from pydantic import validate_call
    >>> from typing import Annotated
    >>> @validate_call()
    ... def test(
    ...     a: Annotated[np.ndarray, NumpyArrayAnnotation],
    ...     b: Annotated[np.ndarray, NumpyArrayAnnotation[np.floating]],
    ...     c: Annotated[np.ndarray, NumpyArrayAnnotation[np.bool_ | np.integer]],
    ... ):
    ...     return a, b, c
    >>> test(np.array(['a']), np.array([1.0]), np.array([True]))  # no error
    (array(['a'], dtype='<U1'), array([1.]), array([ True]))
    >>> test(np.array(['a']), np.array([1]), np.array([3]))  # error, b is not floating
    >>> test([1, 3], np.array([1.0]), np.array([3]))  # error, a is not an array
    """

    def __class_getitem__(cls, type_: Any):  # type: ignore
        """
        Dynamically create a subclass of NumpyArrayAnnotation with the specified dtype(s).
        """
        type_ = get_args(type_)[0] if get_origin(type_) is Annotated else type_

        class TypedNumpyArrayAnnotation(cls):
            types__: tuple[type, ...] = (
                get_args(type_) if isinstance(type_, UnionType) else (type_,)
            )

        TypedNumpyArrayAnnotation.__name__ = f"TypedNumpyArrayAnnotation[{type_}]"
        return TypedNumpyArrayAnnotation

    @classmethod
    def __get_pydantic_core_schema__(
        cls, source_type: Any, handler: GetCoreSchemaHandler
    ) -> CoreSchema:
        def dtype_matches(arr: np.ndarray) -> np.ndarray:
            types = getattr(cls, "types__", None)
            if types is None or any(np.issubdtype(arr.dtype, t) for t in types):
                return arr
            raise ValueError(f"Array dtype {arr.dtype} is not one of {types}")

        array_schema = core_schema.chain_schema(
            [
                core_schema.is_instance_schema(np.ndarray),
                core_schema.no_info_plain_validator_function(dtype_matches),
            ]
        )
        return core_schema.json_or_python_schema(
            json_schema=array_schema,
            python_schema=array_schema,
            serialization=core_schema.plain_serializer_function_ser_schema(
                lambda instance: instance.tolist()
            ),
        )


FloatArray = Annotated[np.ndarray, NumpyArrayAnnotation[np.floating]]
IntArray = Annotated[np.ndarray, NumpyArrayAnnotation[np.integer]]
BoolArray = Annotated[np.ndarray, NumpyArrayAnnotation[np.bool_]]


class _H5FileAnnotation:
    """
    Pydantic core schema for h5 files.
    """

    @classmethod
    def __get_pydantic_core_schema__(
        cls, source_type: Any, handler: GetCoreSchemaHandler
    ) -> CoreSchema:
        return core_schema.is_instance_schema(h5py.File)


H5File = Annotated[h5py.File, _H5FileAnnotation]
H5File.__doc__ = """
Pydantic schema for h5 files.
"""


class _H5GroupAnnotation:
    """
    Pydantic core schema for h5 groups.
    """

    @classmethod
    def __get_pydantic_core_schema__(
        cls, source_type: Any, handler: GetCoreSchemaHandler
    ) -> CoreSchema:
        return core_schema.is_instance_schema(h5py.Group)


H5Group = Annotated[h5py.Group, _H5GroupAnnotation]
H5Group.__doc__ = """
Pydantic schema for h5 groups. See ``voxquery.validation.H5File``.
"""


# ============ Parameter records ============


class LinearMap(TypedDict):
    """
    Affine map ``y = x @ weight.T + bias``.
    """

    weight: FloatArray
    """Matrix of shape (out_dim, in_dim)."""
    bias: FloatArray
    """Vector of shape (out_dim,)."""


class LayerNormParams(TypedDict):
    gamma: FloatArray
    beta: FloatArray
    eps: float


class DeformableAttnParams(TypedDict):
    """
    Multi-head deformable attention over 2D feature levels or a 3D volume.

    Sampling locations are ``ref + offset_net(q) / (extent - 1)`` per level, so a
    raw offset of 1.0 moves one texel (voxel) along that axis.
    """

    ndim: int
    """2 for image features, 3 for scene volumes."""
    heads: int
    levels: int
    sampling_points: int
    value_proj: LinearMap
    output_proj: LinearMap
    offset_net: LinearMap
    """Query -> heads * levels * sampling_points * ndim raw offsets."""
    weight_net: LinearMap
    """Query -> heads * levels * sampling_points logits, softmaxed per head."""


class DotProductAttnParams(TypedDict):
    heads: int
    q_proj: LinearMap
    k_proj: LinearMap
    v_proj: LinearMap
    output_proj: LinearMap


class ResidualBlockParams(TypedDict):
    """
    Post-norm residual wrapper: ``LN(y + FFN(y))`` with ``y = LN(x + attn_out)``.
    """

    ffn_hidden: LinearMap
    ffn_out: LinearMap
    norm_attn: LayerNormParams
    norm_ffn: LayerNormParams


class StageParams(TypedDict):
    attn: DeformableAttnParams | DotProductAttnParams
    block: ResidualBlockParams


class ConvParams(TypedDict):
    kernel: FloatArray
    """(3, 3, 3, C_in, C_out) taps, indexed by offset + 1 per axis."""
    bias: FloatArray
    dilation: int


class HeadParams(TypedDict):
    """
    Dilated-convolution aggregation, channel mix and per-voxel classifier.
    """

    aspp: list[ConvParams]
    mix: LinearMap
    classifier: LinearMap


class ModelParams(TypedDict):
    scene_embeddings: FloatArray
    """(X, Y, Z, C) learnable voxel features at decoder resolution."""
    query_embeddings: FloatArray
    """(N, C) learnable instance query features."""
    query_ref_logits: FloatArray
    """(N, 2) unconstrained reference points; the model uses their sigmoid."""
    encoder: list[StageParams]
    proposal: StageParams
    decoder: list[dict[str, StageParams]]
    """Per decoder layer, stage name -> parameters."""
    head: HeadParams


# ============ Geometry records ============


class CameraModel(TypedDict):
    """
    Pinhole camera; extrinsics map world to camera, ``x_c = R @ x_w + T``.
    """

    intrinsics: FloatArray
    """K, 3x3 in pixel units with last row (0, 0, 1)."""
    rotation: FloatArray
    """R, 3x3 orthonormal with determinant +1."""
    translation: FloatArray
    """T, 3-vector in meters."""
    image_size: tuple[int, int]
    """(width, height) in pixels."""


class VoxelGridSpec(TypedDict):
    origin: FloatArray
    """World-frame corner of voxel (0, 0, 0), meters."""
    voxel_size: FloatArray
    """Edge length per axis, meters."""
    dims: tuple[int, int, int]
    """(X, Y, Z) voxel counts."""


class DepthMap(TypedDict):
    values: FloatArray
    """(H, W) camera z-depths in meters."""
    valid: BoolArray
    """(H, W) validity mask; valid depths are finite and positive."""


class VoxelProposal(TypedDict):
    """
    Voxels on the implicit surface, as aligned arrays sorted by lattice index.
    """

    indices: IntArray
    """(P, 3) lattice coordinates."""
    canonical_pixels: FloatArray
    """(P, 2) normalized pixel of each voxel center, clamped into [0, 1]^2."""


# ============ Model state ============


class InstanceQueries(TypedDict):
    embeddings: FloatArray
    """(N, C) query embeddings."""
    ref_points_2d: FloatArray
    """(N, 2) normalized image reference points in [0, 1]^2."""
    learnable: bool


class SceneVolume(TypedDict):
    embeddings: FloatArray
    """(X, Y, Z, C) per-voxel features."""
    fov_mask: BoolArray
    """(X, Y, Z) voxels whose centers project into the image."""
    proposal: VoxelProposal


# ============ Reports ============


class LossReport(TypedDict):
    total: float
    scal_geo: float
    scal_sem: float
    ce: float
    aux: list[float]
    """Unscaled per-layer auxiliary totals; each enters ``total`` scaled by 0.5."""
    grad: NotRequired[np.ndarray]
    """Gradient of the final-logit loss w.r.t. the final logits."""


class MetricReport(TypedDict):
    iou: float | None
    """Occupancy IoU, None when no voxel is occupied in prediction or ground truth."""
    miou: float | None
    precision: float | None
    recall: float | None
    per_class_iou: dict[str, float | None]
    """IoU per semantic class in table order; None for classes absent from both."""


class SyntheticScene(TypedDict):
    labels: IntArray
    """(X, Y, Z) uint8 labels at target resolution."""
    camera: CameraModel
    depth: DepthMap
    class_image: IntArray
    """(H, W) class id of the first voxel hit by each pixel ray, 0 on a miss."""
    features: list[np.ndarray]
    """Feature pyramid, finest level first, each (H_l, W_l, C)."""


class PipelineTrace(TypedDict):
    """
    Every intermediate state of one forward pass.
    """

    features: list[np.ndarray]
    """Encoded feature pyramid."""
    initial: SceneVolume
    """Scene straight after initialisation."""
    lifted: SceneVolume
    """Scene after lifting the image into the proposed (or visible) voxels."""
    scenes: list[SceneVolume]
    """Scene after each decoder layer."""
    instances_in: Optional[InstanceQueries]
    instances: Optional[InstanceQueries]
    """Instance queries after the last decoder layer."""
    logits: np.ndarray
    aux_logits: list[np.ndarray]
    """Decoder-resolution logits of every layer, through the shared head."""
