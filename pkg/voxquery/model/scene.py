"""
Scene volume initialisation and lifting of image features into it.
"""

import numpy as np
from loguru import logger

from ..attention import deformable_attn_2d, residual_block
from ..errors import ConfigError, ShapeError
from ..geometry import (check_camera, check_grid, compute_fov_mask,
                        project_points, propose_voxels, voxel_center_coords)
from ..numerics import bilinear_sample_many
from ..validation import (CameraModel, DepthMap, SceneVolume, StageParams,
                          VoxelGridSpec)


def init_scene(
    grid: VoxelGridSpec,
    cam: CameraModel,
    depth: DepthMap,
    embeddings: np.ndarray,
) -> SceneVolume:
    """
    Scene volume holding the learnable voxel embeddings, the voxel proposal
    from ``depth`` and the field-of-view mask.

    Parameters
    ----------
    grid : VoxelGridSpec
        Decoder-resolution grid
    cam : CameraModel
        Camera
    depth : DepthMap
        Depth map matching the camera image
    embeddings : np.ndarray
        Learnable voxel features (X, Y, Z, C); copied

    Raises
    ------
    ConfigError
        If the grid, camera, depth map and embeddings are inconsistent
    """
    check_camera(cam)
    check_grid(grid)
    if embeddings.shape[:3] != tuple(grid["dims"]):
        raise ConfigError(
            f"Scene embeddings {embeddings.shape} do not match grid dims {grid['dims']}"
        )
    try:
        proposal = propose_voxels(cam, grid, depth)
    except ShapeError as e:
        raise ConfigError(str(e)) from e
    fov_mask = compute_fov_mask(cam, grid)
    logger.debug(
        f"Scene with {int(fov_mask.sum())} visible and {proposal['indices'].shape[0]} proposed voxels"
    )
    return {
        "embeddings": embeddings.copy(),
        "fov_mask": fov_mask,
        "proposal": proposal,
    }


def voxel_proposal_layer(
    scene: SceneVolume, features: list[np.ndarray], stage: StageParams
) -> SceneVolume:
    """
    Initialise the proposed voxels from the image.

    Each proposed voxel queries the feature pyramid around its canonical pixel
    with deformable attention; the result passes through the residual block.
    Other voxels are left untouched and an empty proposal returns ``scene``.
    """
    indices = scene["proposal"]["indices"]
    if indices.shape[0] == 0:
        return scene
    where = tuple(indices.T)
    queries = scene["embeddings"][where]
    updated = residual_block(
        stage["block"],
        queries,
        deformable_attn_2d(
            stage["attn"], queries, scene["proposal"]["canonical_pixels"], features
        ),
    )
    embeddings = scene["embeddings"].copy()
    embeddings[where] = updated
    return {**scene, "embeddings": embeddings}


def project_features(
    scene: SceneVolume,
    features: list[np.ndarray],
    cam: CameraModel,
    grid: VoxelGridSpec,
) -> SceneVolume:
    """
    Add to every visible voxel the mean over levels of the image features
    sampled at its centre's projection.
    """
    where = np.nonzero(scene["fov_mask"])
    if where[0].size == 0:
        return scene
    centers = voxel_center_coords(grid)[where]
    pixels, _, _ = project_points(cam, centers)
    lifted = np.mean([bilinear_sample_many(level, pixels) for level in features], axis=0)
    embeddings = scene["embeddings"].copy()
    embeddings[where] = embeddings[where] + lifted
    return {**scene, "embeddings": embeddings}
