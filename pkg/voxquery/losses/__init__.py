"""
Training losses and evaluation metrics.
"""

from .affinity import EPS, scene_class_affinity
from .composite import AUX_SCALE, base_loss, downsample_labels, total_loss
from .cross_entropy import valid_voxels, voxel_softmax, weighted_cross_entropy
from .metrics import compute_metrics, confusion_matrix, predict_labels
from .weights import (SEMANTIC_KITTI_CLASSES, SEMANTIC_KITTI_FREQUENCIES,
                      TABLE_ORDER, class_weights_from_frequencies,
                      label_frequencies)

__all__ = [
    "EPS",
    "AUX_SCALE",
    "voxel_softmax",
    "valid_voxels",
    "weighted_cross_entropy",
    "scene_class_affinity",
    "downsample_labels",
    "base_loss",
    "total_loss",
    "predict_labels",
    "confusion_matrix",
    "compute_metrics",
    "SEMANTIC_KITTI_CLASSES",
    "SEMANTIC_KITTI_FREQUENCIES",
    "TABLE_ORDER",
    "class_weights_from_frequencies",
    "label_frequencies",
]
