"""
Synthetic labelled scenes: ground plane and boxes in a label grid, a depth map
ray-marched through it and a toy feature pyramid rendered from the hit classes.
"""

from typing import Final

import numpy as np
import toolz as tz
import toolz.curried as curried
from fn import _
from loguru import logger
from pydantic import validate_call
from tqdm import tqdm

from ..errors import ConfigError, ShapeError
from ..futils import curry, scan_pipe
from ..geometry import check_camera, check_grid, look_at_camera, refine_grid
from ..model.config import RunConfig
from ..validation import (CameraModel, DepthMap, IntArray, SyntheticScene,
                          VoxelGridSpec)

GROUND_CLASS: Final[int] = 9
"""``road``"""

_PHI = (1 + 5**0.5) / 2


def _box_extents(
    rng: np.random.Generator, grid: VoxelGridSpec, size_range: tuple[float, float], floor: int
) -> tuple[slice, slice, slice]:
    dims = np.array(grid["dims"])
    lo = np.maximum(np.ceil(size_range[0] / grid["voxel_size"]).astype(int), 1)
    hi = np.maximum(np.floor(size_range[1] / grid["voxel_size"]).astype(int), lo)
    room = np.array([dims[0], dims[1], dims[2] - floor])
    size = np.minimum(rng.integers(lo, hi + 1), room)
    start = rng.integers(0, room - size + 1) + np.array([0, 0, floor])
    return tuple(slice(int(s), int(s + n)) for s, n in zip(start, size))  # type: ignore


@validate_call()
def place_boxes(
    grid: VoxelGridSpec,
    seed: int,
    num_boxes: int,
    ground: bool,
    palette: tuple[int, ...],
    size_range: tuple[float, float],
) -> np.ndarray:
    """
    Label grid with an optional ground layer and randomly placed boxes.

    The ground occupies the lowest voxel layer with class ``road``. Boxes are
    aligned with the voxel lattice, rest on the ground (or the grid floor) and
    take their class from ``palette``; later boxes overwrite earlier ones.

    Parameters
    ----------
    grid : VoxelGridSpec
        Label-resolution grid
    seed : int
        Seed of the box placement
    num_boxes : int
        Number of boxes
    ground : bool
        Whether to add the ground layer
    palette : tuple[int, ...]
        Class ids drawn for boxes
    size_range : tuple[float, float]
        Range of box edge lengths in meters

    Returns
    -------
    np.ndarray
        (X, Y, Z) uint8 labels, 0 for empty voxels
    """
    if num_boxes and not palette:
        raise ConfigError("Box palette is empty")
    rng = np.random.default_rng(seed)
    labels = np.zeros(grid["dims"], dtype=np.uint8)
    floor = 0
    if ground:
        labels[:, :, 0] = GROUND_CLASS
        floor = min(1, grid["dims"][2] - 1)
    for _box in range(num_boxes):
        labels[_box_extents(rng, grid, size_range, floor)] = palette[int(rng.integers(len(palette)))]
    return labels


def _camera_center(cam: CameraModel) -> np.ndarray:
    return -cam["rotation"].T @ cam["translation"]


def _march(
    labels: np.ndarray,
    origin: np.ndarray,
    voxel_size: np.ndarray,
    center: np.ndarray,
    direction: np.ndarray,
) -> tuple[float, int]:
    """
    First occupied voxel along ``center + t * direction``, as (t, class), or
    (nan, 0) on a miss.
    """
    dims = np.array(labels.shape)
    upper = origin + dims * voxel_size
    if np.any((direction == 0) & ((center < origin) | (center > upper))):
        return np.nan, 0
    with np.errstate(divide="ignore", invalid="ignore"):
        t0 = (origin - center) / direction
        t1 = (upper - center) / direction
    near = np.nanmax(np.minimum(t0, t1))
    far = np.nanmin(np.maximum(t0, t1))
    if not near <= far or far <= 0:
        return np.nan, 0

    t = max(near, 0.0)
    idx = np.clip(np.floor((center + t * direction - origin) / voxel_size).astype(int), 0, dims - 1)
    step = np.where(direction > 0, 1, -1)
    while True:
        label = labels[tuple(idx)]
        if label != 0:
            return t, int(label)
        # exit time through each face, recomputed from the lattice to avoid drift
        with np.errstate(divide="ignore", invalid="ignore"):
            faces = origin + (idx + (step > 0)) * voxel_size
            t_next = np.where(direction != 0, (faces - center) / direction, np.inf)
        axis = int(np.argmin(t_next))
        t = float(t_next[axis])
        idx[axis] += step[axis]
        if not 0 <= idx[axis] < dims[axis]:
            return np.nan, 0


@curry
@validate_call()
def render_depth(
    labels: IntArray, grid: VoxelGridSpec, cam: CameraModel, progress: bool = False
) -> tuple[DepthMap, np.ndarray]:
    """
    Ray-march every pixel through a label grid.

    Rays start at the camera centre and pass through the pixel centre; the
    first non-empty voxel they enter is the hit. Depth is the camera-frame z of
    the entry point, so it equals the analytic distance to the first voxel
    face crossed.

    Parameters
    ----------
    labels : np.ndarray
        (X, Y, Z) labels, 0 for empty
    grid : VoxelGridSpec
        Grid of ``labels``
    cam : CameraModel
        Rendering camera
    progress : bool
        Show a progress bar over image rows

    Returns
    -------
    tuple[DepthMap, np.ndarray]
        Depth map (invalid where the ray misses or starts inside an occupied
        voxel) and the (H, W) class id of each hit, 0 on a miss
    """
    check_camera(cam)
    check_grid(grid)
    if labels.shape != tuple(grid["dims"]):
        raise ShapeError(f"Labels {labels.shape} do not match grid dims {grid['dims']}")

    width, height = cam["image_size"]
    center = _camera_center(cam)
    to_world = cam["rotation"].T @ np.linalg.inv(cam["intrinsics"])
    depth = np.full((height, width), np.nan)
    classes = np.zeros((height, width), dtype=np.uint8)
    for row in tqdm(range(height), desc="Rendering depth", disable=not progress, leave=False):
        for col in range(width):
            # unit camera depth, so the ray parameter is the depth
            direction = to_world @ np.array([col, row, 1.0])
            depth[row, col], classes[row, col] = _march(
                labels, grid["origin"], grid["voxel_size"], center, direction
            )
    valid = np.isfinite(depth) & (depth > 0)
    classes[~valid] = 0
    logger.debug(f"Rendered depth, {int(valid.sum())} of {valid.size} pixels hit")
    return {"values": depth, "valid": valid}, classes


def class_colors(num_classes: int, channels: int) -> np.ndarray:
    """
    Deterministic (num_classes, channels) hash colours ``sin((c + 1)(k + 1) phi)``.
    """
    c, k = np.meshgrid(np.arange(num_classes) + 1, np.arange(channels) + 1, indexing="ij")
    return np.sin(c * k * _PHI)


def _halve(image: np.ndarray) -> np.ndarray:
    """
    2x average pooling over rows and columns; odd trailing pixels are dropped
    and unit extents are kept.
    """
    for axis in (0, 1):
        n = image.shape[axis]
        if n > 1:
            pairs = np.take(image, np.arange(n - n % 2), axis=axis)
            shape = image.shape[:axis] + (n // 2, 2) + image.shape[axis + 1 :]
            image = pairs.reshape(shape).mean(axis=axis + 1)
    return image


@curry
@validate_call()
def build_feature_pyramid(
    class_image: IntArray, channels: int, levels: int
) -> list[np.ndarray]:
    """
    Toy multi-scale image features: every pixel takes the hash colour of its
    class, and each further level averages the previous one down by 2.

    Parameters
    ----------
    class_image : np.ndarray
        (H, W) class ids
    channels : int
        Feature channels C
    levels : int
        Pyramid levels, finest first

    Returns
    -------
    list[np.ndarray]
        ``levels`` arrays of shape (H_l, W_l, C)
    """
    if levels < 1 or channels < 1:
        raise ShapeError(f"Need at least one level and channel, got {levels} and {channels}")
    finest = class_colors(256, channels)[class_image]
    return [finest, *scan_pipe([_halve] * (levels - 1), finest)]


@validate_call()
def generate_scene(rc: RunConfig, progress: bool = False) -> SyntheticScene:
    """
    Build the synthetic scene of a run configuration.

    Labels live at target resolution (the decoder grid refined by
    ``upsample_factor``). Generation depends on ``rc.seed`` only, so equal
    configurations give bitwise equal scenes.

    Raises
    ------
    ConfigError
        If the camera focal length is not positive or the camera is degenerate
    """
    if rc.camera.focal <= 0:
        raise ConfigError(f"Focal length must be positive, got {rc.camera.focal}")
    grid = refine_grid(rc.model.grid.spec(), rc.model.upsample_factor)
    cam = look_at_camera(
        np.array(rc.camera.position, dtype=np.float64),
        rc.camera.image_size,
        rc.camera.focal,
        rc.camera.yaw,
    )
    labels = place_boxes(
        grid, rc.seed, rc.scene.num_boxes, rc.scene.ground, rc.scene.palette, rc.scene.box_size
    )
    depth, class_image = render_depth(labels, grid, cam, progress=progress)
    features = build_feature_pyramid(
        class_image,
        rc.scene.feature_channels or rc.model.embed_dim,
        rc.model.feature_levels,
    )
    logger.info(
        "Generated scene: "
        + ", ".join(tz.pipe(features, curried.map(_.shape), curried.map(str), list))
        + f" features, {int(np.count_nonzero(labels))} occupied voxels"
    )
    return {
        "labels": labels,
        "camera": cam,
        "depth": depth,
        "class_image": class_image,
        "features": features,
    }
