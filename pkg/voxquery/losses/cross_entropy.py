"""
Voxelwise softmax and class-weighted cross-entropy.
"""

import numpy as np

from ..errors import DomainError, ShapeError
from ..numerics import softmax
from ..validation import IGNORE_LABEL


def voxel_softmax(logits: np.ndarray) -> np.ndarray:
    """
    Softmax over the class axis of (..., num_classes) logits.
    """
    return softmax(logits, axis=-1)


def valid_voxels(labels: np.ndarray) -> np.ndarray:
    """
    Mask of voxels not labelled ``IGNORE_LABEL``; raises ``DomainError`` when empty.
    """
    mask = labels != IGNORE_LABEL
    if not mask.any():
        raise DomainError("Every voxel is ignored")
    return mask


def check_labels(logits: np.ndarray, labels: np.ndarray) -> None:
    if logits.shape[:-1] != labels.shape:
        raise ShapeError(f"Logits {logits.shape} do not match labels {labels.shape}")
    valid = labels[labels != IGNORE_LABEL]
    if valid.size and valid.max() >= logits.shape[-1]:
        raise ShapeError(f"Label {int(valid.max())} exceeds {logits.shape[-1]} classes")


def weighted_cross_entropy(
    logits: np.ndarray, labels: np.ndarray, weights: np.ndarray
) -> tuple[float, np.ndarray]:
    """
    Mean of ``-w[y] log p[y]`` over the non-ignored voxels.

    Parameters
    ----------
    logits : np.ndarray
        Logits (..., num_classes)
    labels : np.ndarray
        Integer labels (...), ``IGNORE_LABEL`` for excluded voxels
    weights : np.ndarray
        Class weights (num_classes,)

    Returns
    -------
    tuple[float, np.ndarray]
        Loss and its gradient with respect to ``logits``; ignored voxels get a
        zero gradient

    Raises
    ------
    DomainError
        If every voxel is ignored
    ShapeError
        If the shapes disagree

    Examples
    --------
    >>> loss, _ = weighted_cross_entropy(np.zeros((1, 2)), np.array([0]), np.ones(2))
    >>> round(loss, 4)
    0.6931
    """
    check_labels(logits, labels)
    if weights.shape != (logits.shape[-1],):
        raise ShapeError(f"Expected {logits.shape[-1]} class weights, got {weights.shape}")
    mask = valid_voxels(labels)
    x, y = logits[mask], labels[mask].astype(np.int64)
    count = x.shape[0]

    shifted = x - x.max(axis=-1, keepdims=True)
    log_p = shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    rows = np.arange(count)
    w = weights[y]
    loss = float(np.sum(-w * log_p[rows, y]) / count)

    local = np.exp(log_p)
    local[rows, y] -= 1.0
    grad = np.zeros_like(logits, dtype=np.float64)
    grad[mask] = w[:, None] * local / count
    return loss, grad
