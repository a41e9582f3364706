"""
Pinhole camera model.

Extrinsics map world to camera coordinates, ``x_c = R @ x_w + T``. Pixels are
``(u, v)`` with ``u`` along the image width and ``v`` along its height. A
normalised pixel divides by ``(W - 1, H - 1)`` so that the first and last
pixel centres sit at 0 and 1.
"""

from typing import Annotated, Optional

import numpy as np
from pydantic import AfterValidator, validate_call

from ..errors import ConfigError, DomainError
from ..futils import curry
from ..validation import CameraModel, FloatArray, is_ndim

Points = Annotated[FloatArray, AfterValidator(is_ndim(ndim=2))]


def check_camera(cam: CameraModel) -> CameraModel:
    """
    Raise ``ConfigError`` unless ``cam`` is a valid pinhole camera.

    Checks that the intrinsics are invertible with last row (0, 0, 1), that the
    rotation is orthonormal with determinant +1 and that the image is nonempty.
    """
    K, R = np.asarray(cam["intrinsics"]), np.asarray(cam["rotation"])
    if K.shape != (3, 3) or R.shape != (3, 3) or np.shape(cam["translation"]) != (3,):
        raise ConfigError("Camera matrices must be 3x3 with a 3-vector translation")
    if not np.allclose(K[2], [0.0, 0.0, 1.0]) or abs(np.linalg.det(K)) < 1e-12:
        raise ConfigError(f"Intrinsics are degenerate or malformed: {K.tolist()}")
    if np.linalg.norm(R.T @ R - np.eye(3)) > 1e-9 or np.linalg.det(R) < 0:
        raise ConfigError("Rotation must be orthonormal with determinant +1")
    if min(cam["image_size"]) < 1:
        raise ConfigError(f"Image size must be positive, got {cam['image_size']}")
    return cam


@validate_call()
def intrinsics_from_focal(
    focal: float, image_size: tuple[int, int]
) -> np.ndarray:
    """
    Intrinsic matrix with square pixels and the principal point at the image centre.

    Parameters
    ----------
    focal : float
        Focal length in pixels
    image_size : tuple[int, int]
        (width, height) in pixels

    Examples
    --------
    >>> intrinsics_from_focal(32.0, (64, 48))
    array([[32. ,  0. , 31.5],
           [ 0. , 32. , 23.5],
           [ 0. ,  0. ,  1. ]])
    """
    width, height = image_size
    return np.array(
        [
            [focal, 0.0, (width - 1) / 2],
            [0.0, focal, (height - 1) / 2],
            [0.0, 0.0, 1.0],
        ]
    )


@validate_call()
def look_at_camera(
    position: FloatArray,
    image_size: tuple[int, int],
    focal: float,
    yaw: float = 0.0,
) -> CameraModel:
    """
    Forward-looking camera for a world frame with x forward, y left and z up.

    The camera sits at ``position`` and looks along the world direction
    ``(cos yaw, sin yaw, 0)``; image rows run downward and columns to the right.

    Parameters
    ----------
    position : np.ndarray
        Camera centre in world coordinates (meters)
    image_size : tuple[int, int]
        (width, height) in pixels
    focal : float
        Focal length in pixels
    yaw : float
        Heading about the world z axis in radians

    Returns
    -------
    CameraModel
        Camera whose optical axis is horizontal
    """
    c, s = np.cos(yaw), np.sin(yaw)
    # world -> heading frame, then heading frame (x fwd, y left, z up) -> camera (x right, y down, z fwd)
    undo_yaw = np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])
    axes = np.array([[0.0, -1.0, 0.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0]])
    rotation = axes @ undo_yaw
    return {
        "intrinsics": intrinsics_from_focal(focal, image_size),
        "rotation": rotation,
        "translation": -rotation @ position,
        "image_size": image_size,
    }


def normalize_pixels(cam: CameraModel, pixels: np.ndarray) -> np.ndarray:
    """
    Pixel units -> normalised image coordinates.
    """
    width, height = cam["image_size"]
    return pixels / np.array([max(width - 1, 1), max(height - 1, 1)], dtype=np.float64)


def denormalize_pixels(cam: CameraModel, points: np.ndarray) -> np.ndarray:
    """
    Normalised image coordinates -> pixel units.
    """
    width, height = cam["image_size"]
    return points * np.array([max(width - 1, 1), max(height - 1, 1)], dtype=np.float64)


@curry
@validate_call()
def image_to_camera(cam: CameraModel, pixel: FloatArray, depth: float) -> np.ndarray:
    """
    Back-project a pixel at a given camera depth, ``x_c = K^-1 (depth * (u, v, 1))``.

    Parameters
    ----------
    cam : CameraModel
        Camera
    pixel : np.ndarray
        ``(u, v)`` or homogeneous ``(u, v, 1)`` in pixel units
    depth : float
        Camera z-depth, strictly positive

    Returns
    -------
    np.ndarray
        Camera-frame point

    Raises
    ------
    DomainError
        If ``depth`` is not positive

    Examples
    --------
    >>> cam = {"intrinsics": np.array([[2.0, 0, 1], [0, 2, 1], [0, 0, 1]]),
    ...        "rotation": np.eye(3), "translation": np.zeros(3), "image_size": (4, 4)}
    >>> image_to_camera(cam, np.array([3.0, 5.0]), 4.0)
    array([4., 8., 4.])
    """
    if not depth > 0:
        raise DomainError(f"Depth must be positive, got {depth}")
    homogeneous = np.array([pixel[0], pixel[1], 1.0])
    return np.linalg.solve(cam["intrinsics"], depth * homogeneous)


@curry
@validate_call()
def camera_to_world(cam: CameraModel, x_c: FloatArray) -> np.ndarray:
    """
    Invert the extrinsics, ``x_w = R^T (x_c - T)``. Accepts (3,) or (N, 3).
    """
    return (x_c - cam["translation"]) @ cam["rotation"]


@curry
@validate_call()
def lift_pixel(cam: CameraModel, pixel: FloatArray, depth: float) -> np.ndarray:
    """
    World point seen at ``pixel`` (pixel units) with camera depth ``depth``.

    Examples
    --------
    >>> cam = {"intrinsics": np.eye(3), "rotation": np.eye(3),
    ...        "translation": np.zeros(3), "image_size": (4, 4)}
    >>> lift_pixel(cam, np.array([2.0, 3.0]), 0.5)
    array([1. , 1.5, 0.5])
    """
    return camera_to_world(cam, image_to_camera(cam, pixel, depth))


@curry
@validate_call()
def world_to_image(
    cam: CameraModel, x_w: FloatArray, normalized: bool = True
) -> Optional[tuple[np.ndarray, float]]:
    """
    Project a world point into the image.

    Parameters
    ----------
    cam : CameraModel
        Camera
    x_w : np.ndarray
        World point
    normalized : bool
        Return the pixel in normalised coordinates (default) or pixel units

    Returns
    -------
    tuple[np.ndarray, float] | None
        ``(pixel, depth)``, or ``None`` when the point is not in front of the camera
    """
    x_c = cam["rotation"] @ x_w + cam["translation"]
    if x_c[2] <= 0:
        return None
    projected = cam["intrinsics"] @ (x_c / x_c[2])
    pixel = projected[:2]
    return (normalize_pixels(cam, pixel) if normalized else pixel), float(x_c[2])


@curry
@validate_call()
def project_points(
    cam: CameraModel, points: Points
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Project (N, 3) world points.

    Returns
    -------
    tuple[np.ndarray, np.ndarray, np.ndarray]
        Normalised pixels (N, 2), camera depths (N,) and an in-front mask (N,).
        Pixels of points not in front of the camera are NaN.
    """
    x_c = points @ cam["rotation"].T + cam["translation"]
    depth = x_c[:, 2]
    in_front = depth > 0
    safe = np.where(in_front, depth, 1.0)[:, None]
    projected = (x_c / safe) @ cam["intrinsics"].T
    pixels = np.where(
        in_front[:, None], normalize_pixels(cam, projected[:, :2]), np.nan
    )
    return pixels, depth, in_front


@curry
@validate_call()
def lift_pixels(cam: CameraModel, pixels: Points, depths: FloatArray) -> np.ndarray:
    """
    Vectorised ``lift_pixel`` for (N, 2) pixels in pixel units and (N,) positive depths.
    """
    if np.any(~(depths > 0)):
        raise DomainError("Depths must be positive")
    homogeneous = np.concatenate([pixels, np.ones((pixels.shape[0], 1))], axis=1)
    x_c = depths[:, None] * (homogeneous @ np.linalg.inv(cam["intrinsics"]).T)
    return camera_to_world(cam, x_c)
