"""
World-aligned voxel lattice: centres, binning, proposals and field-of-view masks.
"""

import numpy as np
import toolz as tz
from loguru import logger
from pydantic import validate_call

from ..errors import ConfigError, ShapeError
from ..futils import curry
from ..validation import (CameraModel, DepthMap, FloatArray, VoxelGridSpec,
                          VoxelProposal)
from .camera import lift_pixels, project_points


def check_grid(grid: VoxelGridSpec) -> VoxelGridSpec:
    """
    Raise ``ConfigError`` unless every voxel size and extent is positive.
    """
    if np.any(np.asarray(grid["voxel_size"]) <= 0) or min(grid["dims"]) < 1:
        raise ConfigError(
            f"Grid needs positive voxel sizes and dims, got {grid['voxel_size']} and {grid['dims']}"
        )
    return grid


@curry
@validate_call()
def voxel_center_coords(grid: VoxelGridSpec, normalized: bool = False) -> np.ndarray:
    """
    Coordinates of every voxel centre.

    Parameters
    ----------
    grid : VoxelGridSpec
        Voxel lattice
    normalized : bool
        If ``True``, return the lattice index divided by ``dim - 1`` per axis
        (0 along axes with a single voxel) instead of world coordinates

    Returns
    -------
    np.ndarray
        Array of shape (X, Y, Z, 3)

    Examples
    --------
    >>> grid = {"origin": np.zeros(3), "voxel_size": np.ones(3), "dims": (1, 1, 1)}
    >>> voxel_center_coords(grid)
    array([[[[0.5, 0.5, 0.5]]]])
    """
    index = np.stack(
        np.meshgrid(*(np.arange(n, dtype=np.float64) for n in grid["dims"]), indexing="ij"),
        axis=-1,
    )
    if normalized:
        return index / np.maximum(np.array(grid["dims"], dtype=np.float64) - 1, 1)
    return grid["origin"] + (index + 0.5) * grid["voxel_size"]


@curry
@validate_call()
def world_to_grid_normalized(grid: VoxelGridSpec, points: FloatArray) -> np.ndarray:
    """
    World points -> normalised voxel-centre lattice coordinates clamped into [0, 1]^3.

    The centre of voxel ``(i, j, k)`` maps to ``(i, j, k) / (dims - 1)``, matching
    ``voxel_center_coords(grid, normalized=True)``.
    """
    index = (points - grid["origin"]) / grid["voxel_size"] - 0.5
    scale = np.maximum(np.array(grid["dims"], dtype=np.float64) - 1, 1)
    return np.clip(index / scale, 0.0, 1.0)


@curry
@validate_call()
def world_to_voxel_index(
    grid: VoxelGridSpec, points: FloatArray
) -> tuple[np.ndarray, np.ndarray]:
    """
    Bin (N, 3) world points into half-open voxels ``[corner, corner + size)``.

    Returns
    -------
    tuple[np.ndarray, np.ndarray]
        Integer indices (N, 3) and a mask (N,) of points inside the grid
    """
    index = np.floor((points - grid["origin"]) / grid["voxel_size"]).astype(np.int64)
    inside = np.all((index >= 0) & (index < np.array(grid["dims"])), axis=-1)
    return index, inside


@curry
@validate_call()
def refine_grid(grid: VoxelGridSpec, factor: int) -> VoxelGridSpec:
    """
    Grid covering the same extent with ``factor`` times as many voxels per axis.
    """
    return {
        "origin": grid["origin"],
        "voxel_size": grid["voxel_size"] / factor,
        "dims": tuple(int(n) * factor for n in grid["dims"]),  # type: ignore
    }


@curry
@validate_call()
def compute_fov_mask(cam: CameraModel, grid: VoxelGridSpec) -> np.ndarray:
    """
    Voxels whose centres project into the image in front of the camera.

    Returns
    -------
    np.ndarray
        Boolean array of shape (X, Y, Z)
    """
    centers = voxel_center_coords(grid)
    pixels, _, in_front = project_points(cam, centers.reshape(-1, 3))
    with np.errstate(invalid="ignore"):
        in_image = np.all((pixels >= 0.0) & (pixels <= 1.0), axis=-1)
    return (in_front & in_image).reshape(tuple(grid["dims"]))


@curry
@validate_call()
def propose_voxels(
    cam: CameraModel, grid: VoxelGridSpec, depth: DepthMap
) -> VoxelProposal:
    """
    Voxels on the surface seen in the depth map.

    Every valid pixel is lifted to the world; the voxels receiving at least one
    lifted point are proposed. The canonical pixel of a proposed voxel is the
    projection of its centre, clamped into [0, 1]^2. When the centre is not in
    front of the camera, the mean normalised pixel of the points that proposed
    it is used instead.

    Parameters
    ----------
    cam : CameraModel
        Camera
    grid : VoxelGridSpec
        Voxel lattice
    depth : DepthMap
        Depth map of shape (H, W) matching the camera image size

    Returns
    -------
    VoxelProposal
        Indices (P, 3) sorted lexicographically and canonical pixels (P, 2)

    Raises
    ------
    ShapeError
        If the depth map does not match the image size
    """
    width, height = cam["image_size"]
    if depth["values"].shape != (height, width) or depth["valid"].shape != (height, width):
        raise ShapeError(
            f"Depth map of shape {depth['values'].shape} does not match image size {cam['image_size']}"
        )

    valid = depth["valid"] & np.isfinite(depth["values"]) & (depth["values"] > 0)
    rows, cols = np.nonzero(valid)
    pixels = np.stack([cols, rows], axis=-1).astype(np.float64)
    if pixels.shape[0] == 0:
        logger.warning("Depth map has no valid pixels, proposal is empty")
        return {"indices": np.zeros((0, 3), dtype=np.int64), "canonical_pixels": np.zeros((0, 2))}

    index, inside = tz.pipe(
        lift_pixels(cam, pixels, depth["values"][rows, cols]),
        world_to_voxel_index(grid),
    )
    indices, inverse = np.unique(index[inside], axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    if indices.shape[0] == 0:
        logger.warning("No lifted pixel falls inside the grid, proposal is empty")

    centers = grid["origin"] + (indices + 0.5) * grid["voxel_size"]
    projected, _, in_front = project_points(cam, centers.reshape(-1, 3))
    if not np.all(in_front):
        # mean normalised pixel of the lifted points inside each behind-camera voxel
        lifted = np.column_stack(
            [pixels[inside, 0] / max(width - 1, 1), pixels[inside, 1] / max(height - 1, 1)]
        )
        sums = np.zeros((indices.shape[0], 2))
        np.add.at(sums, inverse, lifted)
        means = sums / np.bincount(inverse, minlength=indices.shape[0])[:, None]
        projected = np.where(in_front[:, None], projected, means)

    logger.debug(f"Proposed {indices.shape[0]} voxels from {pixels.shape[0]} valid pixels")
    return {
        "indices": indices.astype(np.int64),
        "canonical_pixels": np.clip(projected, 0.0, 1.0),
    }
