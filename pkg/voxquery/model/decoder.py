"""
Decoder layers: five attention stages exchanging information between the
instance queries, the image features and the scene volume.

A layer runs the enabled stages in this order:

1. ``instance_image``: instances read the image around their 2D reference points
2. ``scene_instance``: visible voxels cross-attend to the instances
3. ``scene_self``: visible voxels read the volume around themselves
4. ``instance_scene``: instances read the volume around their lifted reference points
5. ``instance_self``: instances attend to each other

Every stage is wrapped by its residual block. Voxels outside the field of view
are never written.
"""

from typing import Callable, Optional

import numpy as np
import toolz as tz
from loguru import logger

from ..attention import (cross_attn, deformable_attn_2d, deformable_attn_3d,
                         residual_block, self_attn)
from ..errors import ConfigError
from ..futils import scan_pipe
from ..geometry import (denormalize_pixels, lift_pixels, project_points,
                        voxel_center_coords, world_to_grid_normalized)
from ..validation import (CameraModel, DepthMap, InstanceQueries, SceneVolume,
                          StageParams, VoxelGridSpec)
from .config import INSTANCE_STAGES, StageFlags

type DecoderState = tuple[SceneVolume, Optional[InstanceQueries]]


def _with_instances(
    instances: InstanceQueries, embeddings: np.ndarray
) -> InstanceQueries:
    return {**instances, "embeddings": embeddings}


def _with_visible(scene: SceneVolume, updated: np.ndarray) -> SceneVolume:
    embeddings = scene["embeddings"].copy()
    embeddings[scene["fov_mask"]] = updated
    return {**scene, "embeddings": embeddings}


def center_depth(cam: CameraModel, grid: VoxelGridSpec) -> float:
    """
    Camera depth of the grid's centre point.

    Raises
    ------
    ConfigError
        If the centre is not in front of the camera
    """
    center = grid["origin"] + 0.5 * np.array(grid["dims"]) * grid["voxel_size"]
    _, depth, in_front = project_points(cam, center[None, :])
    if not in_front[0]:
        raise ConfigError("Grid centre is behind the camera")
    return float(depth[0])


def reference_depths(
    cam: CameraModel,
    grid: VoxelGridSpec,
    depth: DepthMap,
    ref_points: np.ndarray,
) -> np.ndarray:
    """
    Depth under each normalised image reference point.

    Bilinear read of the depth map over the valid texels among the four
    neighbours, with the weights renormalised. Points with no valid neighbour
    of positive weight take ``center_depth``.
    """
    values = np.where(depth["valid"], depth["values"], 0.0)
    valid = depth["valid"] & np.isfinite(depth["values"]) & (depth["values"] > 0)
    height, width = values.shape
    x = np.clip(ref_points[:, 0], 0.0, 1.0) * (width - 1)
    y = np.clip(ref_points[:, 1], 0.0, 1.0) * (height - 1)
    x0 = np.minimum(np.floor(x).astype(np.int64), max(width - 2, 0))
    y0 = np.minimum(np.floor(y).astype(np.int64), max(height - 2, 0))
    fx, fy = x - x0, y - y0

    total = np.zeros(ref_points.shape[0])
    mass = np.zeros(ref_points.shape[0])
    for dy, dx in ((0, 0), (0, 1), (1, 0), (1, 1)):
        rows, cols = np.minimum(y0 + dy, height - 1), np.minimum(x0 + dx, width - 1)
        weight = (fy if dy else 1 - fy) * (fx if dx else 1 - fx) * valid[rows, cols]
        total += weight * np.where(valid[rows, cols], values[rows, cols], 0.0)
        mass += weight

    missing = mass <= 0
    if np.any(missing):
        logger.warning(
            f"{int(missing.sum())} instance reference points fall on invalid depth, using the grid centre depth"
        )
        fallback = center_depth(cam, grid)
        return np.where(missing, fallback, total / np.where(missing, 1.0, mass))
    return total / mass


def lift_reference_points(
    cam: CameraModel,
    grid: VoxelGridSpec,
    depth: DepthMap,
    ref_points: np.ndarray,
) -> np.ndarray:
    """
    Normalised 2D image reference points -> normalised lattice points, clamped
    into the grid.
    """
    return tz.pipe(
        lift_pixels(
            cam,
            denormalize_pixels(cam, ref_points),
            reference_depths(cam, grid, depth, ref_points),
        ),
        world_to_grid_normalized(grid),
    )


def _instance_image(stage: StageParams, features: list[np.ndarray]):
    def apply(state: DecoderState) -> DecoderState:
        scene, instances = state
        q = instances["embeddings"]
        attn = deformable_attn_2d(stage["attn"], q, instances["ref_points_2d"], features)
        return scene, _with_instances(instances, residual_block(stage["block"], q, attn))

    return apply


def _scene_instance(stage: StageParams):
    def apply(state: DecoderState) -> DecoderState:
        scene, instances = state
        visible = scene["embeddings"][scene["fov_mask"]]
        if visible.shape[0] == 0:
            return state
        keys = instances["embeddings"]
        attn = cross_attn(stage["attn"], visible, keys, keys)
        return _with_visible(scene, residual_block(stage["block"], visible, attn)), instances

    return apply


def _scene_self(stage: StageParams, grid: VoxelGridSpec):
    def apply(state: DecoderState) -> DecoderState:
        scene, instances = state
        mask = scene["fov_mask"]
        visible = scene["embeddings"][mask]
        if visible.shape[0] == 0:
            return state
        refs = voxel_center_coords(grid, normalized=True)[mask]
        attn = deformable_attn_3d(stage["attn"], visible, refs, scene["embeddings"])
        return _with_visible(scene, residual_block(stage["block"], visible, attn)), instances

    return apply


def _instance_scene(
    stage: StageParams, cam: CameraModel, grid: VoxelGridSpec, depth: DepthMap
):
    def apply(state: DecoderState) -> DecoderState:
        scene, instances = state
        q = instances["embeddings"]
        refs = lift_reference_points(cam, grid, depth, instances["ref_points_2d"])
        attn = deformable_attn_3d(stage["attn"], q, refs, scene["embeddings"])
        return scene, _with_instances(instances, residual_block(stage["block"], q, attn))

    return apply


def _instance_self(stage: StageParams):
    def apply(state: DecoderState) -> DecoderState:
        scene, instances = state
        q = instances["embeddings"]
        return scene, _with_instances(
            instances, residual_block(stage["block"], q, self_attn(stage["attn"], q))
        )

    return apply


def decoder_layer(
    scene: SceneVolume,
    instances: Optional[InstanceQueries],
    features: list[np.ndarray],
    cam: CameraModel,
    grid: VoxelGridSpec,
    depth: Optional[DepthMap],
    params: dict[str, StageParams],
    stages: StageFlags,
) -> DecoderState:
    """
    Apply one decoder layer.

    Parameters
    ----------
    scene : SceneVolume
        Scene volume at decoder resolution
    instances : InstanceQueries | None
        Instance queries; ``None`` skips every stage involving instances
    features : list[np.ndarray]
        Image feature pyramid
    cam : CameraModel
        Camera
    grid : VoxelGridSpec
        Decoder-resolution grid
    depth : DepthMap | None
        Depth map, required by ``instance_scene``
    params : dict[str, StageParams]
        Parameters of the layer's stages, keyed by stage name
    stages : StageFlags
        Enabled stages; a disabled stage is the identity

    Returns
    -------
    tuple[SceneVolume, InstanceQueries | None]
        Updated scene and instances; inputs are not modified

    Raises
    ------
    ConfigError
        If an enabled stage lacks its parameters, or ``instance_scene`` runs
        without a depth map
    """
    enabled = [
        name
        for name in stages.enabled()
        if instances is not None or name not in INSTANCE_STAGES
    ]
    if missing := [name for name in enabled if name not in params]:
        raise ConfigError(f"No parameters for decoder stages {missing}")
    if "instance_scene" in enabled and depth is None:
        raise ConfigError("Stage instance_scene needs a depth map")

    builders: dict[str, Callable[[], Callable[[DecoderState], DecoderState]]] = {
        "instance_image": lambda: _instance_image(params["instance_image"], features),
        "scene_instance": lambda: _scene_instance(params["scene_instance"]),
        "scene_self": lambda: _scene_self(params["scene_self"], grid),
        "instance_scene": lambda: _instance_scene(params["instance_scene"], cam, grid, depth),  # type: ignore
        "instance_self": lambda: _instance_self(params["instance_self"]),
    }
    logger.debug(f"Decoder layer with stages {enabled}")
    return tz.pipe((scene, instances), *(builders[name]() for name in enabled))


def run_decoder_stack(
    scene: SceneVolume,
    instances: Optional[InstanceQueries],
    features: list[np.ndarray],
    cam: CameraModel,
    grid: VoxelGridSpec,
    depth: Optional[DepthMap],
    layers: list[dict[str, StageParams]],
    stages: StageFlags,
) -> tuple[SceneVolume, Optional[InstanceQueries], list[SceneVolume]]:
    """
    Apply the decoder layers in order, threading the updated volume forward.

    Returns
    -------
    tuple[SceneVolume, InstanceQueries | None, list[SceneVolume]]
        Final scene, final instances and the scene after each layer; the last
        intermediate is the final scene

    Raises
    ------
    ConfigError
        If ``layers`` is empty
    """
    if not layers:
        raise ConfigError("The decoder needs at least one layer")
    states = scan_pipe(
        [
            lambda state, layer=layer: decoder_layer(
                state[0], state[1], features, cam, grid, depth, layer, stages
            )
            for layer in layers
        ],
        (scene, instances),
    )
    final_scene, final_instances = states[-1]
    return final_scene, final_instances, [s for s, _ in states]
