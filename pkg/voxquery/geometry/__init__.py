"""
Camera model, camera/world transforms and the voxel lattice.
"""

from .calibration import load_calibration, save_calibration
from .camera import (camera_to_world, check_camera, denormalize_pixels,
                     image_to_camera, intrinsics_from_focal, lift_pixel,
                     lift_pixels, look_at_camera, normalize_pixels,
                     project_points, world_to_image)
from .voxel import (check_grid, compute_fov_mask, propose_voxels, refine_grid,
                    voxel_center_coords, world_to_grid_normalized,
                    world_to_voxel_index)

__all__ = [
    "check_camera",
    "intrinsics_from_focal",
    "look_at_camera",
    "normalize_pixels",
    "denormalize_pixels",
    "image_to_camera",
    "camera_to_world",
    "lift_pixel",
    "lift_pixels",
    "world_to_image",
    "project_points",
    "check_grid",
    "voxel_center_coords",
    "world_to_grid_normalized",
    "world_to_voxel_index",
    "refine_grid",
    "compute_fov_mask",
    "propose_voxels",
    "load_calibration",
    "save_calibration",
]
