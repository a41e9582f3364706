"""
Scene-class affinity loss from soft per-class precision, recall and specificity.

For class ``c`` with ground-truth indicator ``g`` and predicted probability
``p`` over the non-ignored voxels::

    P_c = sum(p g) / sum(p)
    R_c = sum(p g) / sum(g)
    S_c = sum((1 - p)(1 - g)) / sum(1 - g)

The loss is the mean over the classes present in the ground truth of
``-(log P_c + log R_c + log S_c)``; ``S_c`` is dropped when the class covers
every voxel. Soft counts are correctly rounded sums, so the loss does not
depend on voxel order.
"""

import math
from typing import Final, Literal

import numpy as np

from ..errors import ShapeError
from .cross_entropy import valid_voxels

EPS: Final[float] = 1e-8
"""Probabilities are clamped into [EPS, 1 - EPS] before any log."""


def _affinity(probs: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    # probs (M, K) over valid voxels, labels (M,) in [0, K)
    clamped = np.clip(probs, EPS, 1.0 - EPS)
    inside = (probs > EPS) & (probs < 1.0 - EPS)
    grad = np.zeros_like(clamped)
    terms = []
    for c in range(probs.shape[1]):
        g = labels == c
        if not g.any():
            continue
        p = clamped[:, c]
        tp = math.fsum(p[g])
        sp = math.fsum(p)
        term = -(math.log(tp / sp) + math.log(tp / g.sum()))
        d = -(2.0 * g / tp - 1.0 / sp)
        if not g.all():
            tn = math.fsum(1.0 - p[~g])
            term -= math.log(tn / (~g).sum())
            d = d + (~g) / tn
        terms.append(term)
        grad[:, c] = d
    return math.fsum(terms) / len(terms), grad * inside / len(terms)


def scene_class_affinity(
    p: np.ndarray,
    labels: np.ndarray,
    mode: Literal["semantic", "geometric"] = "semantic",
) -> tuple[float, np.ndarray]:
    """
    Scene-class affinity loss and its gradient.

    Parameters
    ----------
    p : np.ndarray
        Class probabilities (..., num_classes)
    labels : np.ndarray
        Integer labels (...), ``IGNORE_LABEL`` for excluded voxels
    mode : {"semantic", "geometric"}
        ``semantic`` runs over every class. ``geometric`` first collapses to
        empty (``p[..., 0]``) versus occupied (``1 - p[..., 0]``).

    Returns
    -------
    tuple[float, np.ndarray]
        Loss and its gradient with respect to ``p``. Components clamped by
        ``EPS`` and ignored voxels have zero gradient.

    Raises
    ------
    DomainError
        If every voxel is ignored

    Examples
    --------
    >>> p = np.array([[0.8, 0.2], [0.4, 0.6]])
    >>> loss, _ = scene_class_affinity(p, np.array([0, 1]))
    >>> round(loss, 4)
    1.0805
    """
    if p.shape[:-1] != labels.shape:
        raise ShapeError(f"Probabilities {p.shape} do not match labels {labels.shape}")
    mask = valid_voxels(labels)
    probs, y = p[mask], labels[mask].astype(np.int64)
    grad = np.zeros_like(p, dtype=np.float64)

    if mode == "semantic":
        loss, local = _affinity(probs, y)
        grad[mask] = local
        return loss, grad

    empty = probs[:, 0]
    loss, local = _affinity(np.stack([empty, 1.0 - empty], axis=-1), (y != 0).astype(np.int64))
    grad[mask, 0] = local[:, 0] - local[:, 1]
    return loss, grad
