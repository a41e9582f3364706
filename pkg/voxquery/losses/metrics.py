"""
Occupancy IoU and per-class semantic IoU from confusion matrices.
"""

import math
from typing import Optional, Sequence

import numpy as np

from ..errors import ShapeError
from ..validation import IGNORE_LABEL, MetricReport
from .weights import SEMANTIC_KITTI_CLASSES, TABLE_ORDER


def predict_labels(logits: np.ndarray) -> np.ndarray:
    """
    Per-voxel argmax; ties go to the lowest class id.
    """
    return np.argmax(logits, axis=-1).astype(np.uint8)


def confusion_matrix(pred: np.ndarray, gt: np.ndarray, num_classes: int = 20) -> np.ndarray:
    """
    Counts ``cm[g, p]`` of voxels with ground truth ``g`` predicted as ``p``.

    Voxels whose ground truth is ``IGNORE_LABEL`` are skipped, whatever
    their prediction.

    Raises
    ------
    ShapeError
        If the shapes differ or a counted label is out of range
    """
    if pred.shape != gt.shape:
        raise ShapeError(f"Prediction {pred.shape} and ground truth {gt.shape} differ")
    mask = gt != IGNORE_LABEL
    g, p = gt[mask].astype(np.int64), pred[mask].astype(np.int64)
    if g.size and (max(g.max(), p.max()) >= num_classes or min(g.min(), p.min()) < 0):
        raise ShapeError(f"Labels outside [0, {num_classes})")
    return np.bincount(num_classes * g + p, minlength=num_classes**2).reshape(
        num_classes, num_classes
    )


def _ratio(num: int, den: int) -> Optional[float]:
    return num / den if den > 0 else None


def compute_metrics(
    cm: np.ndarray, class_names: Sequence[str] = SEMANTIC_KITTI_CLASSES
) -> MetricReport:
    """
    Occupancy and semantic scores of a confusion matrix.

    Parameters
    ----------
    cm : np.ndarray
        Confusion matrix from ``confusion_matrix``; class 0 is empty
    class_names : Sequence[str]
        Class names in label order. With the SemanticKITTI names the per-class
        scores follow the usual table column order, otherwise label order.

    Returns
    -------
    MetricReport
        ``iou`` of the occupied/empty collapse with its ``precision`` and
        ``recall``, ``per_class_iou`` of the non-empty classes and their mean
        ``miou``. Scores with an empty denominator are ``None``; classes
        absent from both prediction and ground truth do not enter ``miou``.

    Examples
    --------
    >>> cm = np.array([[5, 1], [2, 2]])
    >>> compute_metrics(cm, ["empty", "thing"])["iou"]
    0.4
    """
    num_classes = cm.shape[0]
    if cm.shape != (num_classes, num_classes) or len(class_names) != num_classes:
        raise ShapeError(f"Confusion matrix {cm.shape} does not match {len(class_names)} classes")
    cm = cm.astype(np.int64)
    tp = int(cm[1:, 1:].sum())
    fp = int(cm[0, 1:].sum())
    fn = int(cm[1:, 0].sum())

    diag = np.diag(cm)
    union = cm.sum(axis=0) + cm.sum(axis=1) - diag
    order = (
        [class_names.index(name) for name in TABLE_ORDER]
        if tuple(class_names) == SEMANTIC_KITTI_CLASSES
        else list(range(1, num_classes))
    )
    per_class = {class_names[c]: _ratio(int(diag[c]), int(union[c])) for c in order}
    present = [v for v in per_class.values() if v is not None]
    return {
        "iou": _ratio(tp, tp + fp + fn),
        "miou": math.fsum(present) / len(present) if present else None,
        "precision": _ratio(tp, tp + fp),
        "recall": _ratio(tp, tp + fn),
        "per_class_iou": per_class,
    }
