"""
SemanticKITTI class table and frequency-based class weights.
"""

from typing import Final

import numpy as np
from pydantic import validate_call

from ..errors import DomainError
from ..validation import FloatArray

SEMANTIC_KITTI_CLASSES: Final[tuple[str, ...]] = (
    "empty",
    "car",
    "bicycle",
    "motorcycle",
    "truck",
    "other-vehicle",
    "person",
    "bicyclist",
    "motorcyclist",
    "road",
    "parking",
    "sidewalk",
    "other-ground",
    "building",
    "fence",
    "vegetation",
    "trunk",
    "terrain",
    "pole",
    "traffic-sign",
)
"""Class names in label order; label 0 is ``empty``."""

TABLE_ORDER: Final[tuple[str, ...]] = (
    "road",
    "sidewalk",
    "parking",
    "other-ground",
    "building",
    "car",
    "truck",
    "bicycle",
    "motorcycle",
    "other-vehicle",
    "vegetation",
    "trunk",
    "terrain",
    "person",
    "bicyclist",
    "motorcyclist",
    "fence",
    "pole",
    "traffic-sign",
)
"""Semantic classes in the column order of the usual SemanticKITTI result tables."""

SEMANTIC_KITTI_FREQUENCIES: Final[dict[str, float]] = {
    "car": 3.92,
    "bicycle": 0.03,
    "motorcycle": 0.03,
    "truck": 0.16,
    "other-vehicle": 0.20,
    "person": 0.07,
    "bicyclist": 0.07,
    "motorcyclist": 0.05,
    "road": 15.30,
    "parking": 1.12,
    "sidewalk": 11.13,
    "other-ground": 0.56,
    "building": 14.1,
    "fence": 3.90,
    "vegetation": 39.3,
    "trunk": 0.51,
    "terrain": 9.17,
    "pole": 0.29,
    "traffic-sign": 0.08,
}
"""Share of occupied voxels per semantic class, in percent."""


@validate_call()
def class_weights_from_frequencies(freqs: FloatArray) -> np.ndarray:
    """
    Class weights ``1 / log(1.02 + f_c)`` rescaled to a mean of one.

    Parameters
    ----------
    freqs : np.ndarray
        Per-class voxel fractions in label order

    Returns
    -------
    np.ndarray
        Positive finite weights, rarer classes weighted higher

    Raises
    ------
    DomainError
        If a frequency is negative or not finite, or all are zero

    Examples
    --------
    >>> class_weights_from_frequencies(np.array([0.25, 0.25, 0.25, 0.25]))
    array([1., 1., 1., 1.])
    """
    if freqs.ndim != 1 or not np.all(np.isfinite(freqs)) or np.any(freqs < 0):
        raise DomainError("Class frequencies must be a finite nonnegative vector")
    if not np.any(freqs > 0):
        raise DomainError("Class frequencies are all zero")
    weights = 1.0 / np.log(1.02 + freqs)
    return weights / weights.mean()


def label_frequencies(labels: np.ndarray, num_classes: int) -> np.ndarray:
    """
    Fraction of non-ignored voxels in each class.
    """
    counts = np.bincount(labels[labels < num_classes].reshape(-1), minlength=num_classes)
    return counts / max(counts.sum(), 1)
