"""
Grid files, HDF5 bundles, synthetic scenes and run reports.
"""

from .grid_io import decode_grid, encode_grid, load_grid, save_grid
from .h5 import (dict_from_h5, dict_to_h5, linear_map_paths, load_params,
                 load_scene, save_params, save_scene)
from .report import emit_report, format_report, parse_report
from .synthetic import (GROUND_CLASS, build_feature_pyramid, class_colors,
                        generate_scene, place_boxes, render_depth)

__all__ = [
    "encode_grid",
    "decode_grid",
    "save_grid",
    "load_grid",
    "dict_to_h5",
    "dict_from_h5",
    "linear_map_paths",
    "save_params",
    "load_params",
    "save_scene",
    "load_scene",
    "emit_report",
    "format_report",
    "parse_report",
    "GROUND_CLASS",
    "place_boxes",
    "render_depth",
    "class_colors",
    "build_feature_pyramid",
    "generate_scene",
]
