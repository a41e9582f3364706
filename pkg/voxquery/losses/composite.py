"""
Composite training loss with auxiliary decoder-layer terms.
"""

import numpy as np
from loguru import logger

from ..errors import ShapeError
from ..validation import IGNORE_LABEL, LossReport
from .affinity import scene_class_affinity
from .cross_entropy import check_labels, voxel_softmax, weighted_cross_entropy

AUX_SCALE = 0.5


def downsample_labels(labels: np.ndarray, factor: int) -> np.ndarray:
    """
    Majority vote over ``factor``^3 blocks.

    ``IGNORE_LABEL`` takes part in the vote; a tie involving it gives
    ``IGNORE_LABEL``, other ties go to the lowest class id. Working memory
    grows with the number of voxels only.

    Raises
    ------
    ShapeError
        If a dimension is not divisible by ``factor``
    """
    if factor < 1 or any(n % factor for n in labels.shape):
        raise ShapeError(f"Labels {labels.shape} cannot be downsampled by {factor}")
    if factor == 1:
        return labels.copy()
    nx, ny, nz = (n // factor for n in labels.shape)
    # each row sorted, so equal labels form contiguous runs
    runs = np.sort(
        labels.reshape(nx, factor, ny, factor, nz, factor)
        .transpose(0, 2, 4, 1, 3, 5)
        .reshape(nx * ny * nz, factor**3),
        axis=1,
    )
    position = np.arange(runs.shape[1])
    starts = np.ones(runs.shape, dtype=bool)
    starts[:, 1:] = runs[:, 1:] != runs[:, :-1]
    run_start = np.maximum.accumulate(np.where(starts, position, 0), axis=1)
    length = position - run_start + 1
    # true once per maximal run, at its last element
    winners = length == length.max(axis=1, keepdims=True)
    lowest = runs[np.arange(runs.shape[0]), np.argmax(winners, axis=1)]
    votes = np.where(np.any(winners & (runs == IGNORE_LABEL), axis=1), IGNORE_LABEL, lowest)
    return votes.reshape(nx, ny, nz).astype(labels.dtype)


def base_loss(
    logits: np.ndarray, labels: np.ndarray, weights: np.ndarray, with_grad: bool = False
) -> tuple[float, float, float, np.ndarray | None]:
    """
    ``(scal_geo, scal_sem, ce, grad)`` on one set of logits; ``grad`` is the
    gradient of their sum with respect to ``logits``, or ``None``.
    """
    check_labels(logits, labels)
    p = voxel_softmax(logits)
    geo, geo_grad = scene_class_affinity(p, labels, "geometric")
    sem, sem_grad = scene_class_affinity(p, labels, "semantic")
    ce, ce_grad = weighted_cross_entropy(logits, labels, weights)
    if not with_grad:
        return geo, sem, ce, None
    # chain dL/dp through the softmax
    dp = geo_grad + sem_grad
    return geo, sem, ce, ce_grad + p * (dp - np.sum(p * dp, axis=-1, keepdims=True))


def total_loss(
    final_logits: np.ndarray,
    aux_logits: list[np.ndarray],
    labels: np.ndarray,
    weights: np.ndarray,
    with_grad: bool = False,
) -> LossReport:
    """
    ``scal_geo + scal_sem + ce`` on the final logits plus half of the same sum
    on every auxiliary output.

    Auxiliary logits coarser than ``labels`` are supervised with labels
    downsampled by ``downsample_labels``.

    Parameters
    ----------
    final_logits : np.ndarray
        Logits at label resolution (X, Y, Z, num_classes)
    aux_logits : list[np.ndarray]
        Per-layer logits, possibly at an integer fraction of label resolution
    labels : np.ndarray
        Labels (X, Y, Z)
    weights : np.ndarray
        Class weights for the cross-entropy
    with_grad : bool
        Attach the gradient of the final-logit loss under ``"grad"``

    Returns
    -------
    LossReport
        Components and ``total``, which equals
        ``scal_geo + scal_sem + ce + 0.5 * sum(aux)`` exactly
    """
    geo, sem, ce, grad = base_loss(final_logits, labels, weights, with_grad)
    aux = []
    for logits in aux_logits:
        factor = labels.shape[0] // max(logits.shape[0], 1)
        a_geo, a_sem, a_ce, _ = base_loss(logits, downsample_labels(labels, factor), weights)
        aux.append(a_geo + a_sem + a_ce)
    report: LossReport = {
        "total": geo + sem + ce + AUX_SCALE * sum(aux),
        "scal_geo": geo,
        "scal_sem": sem,
        "ce": ce,
        "aux": aux,
    }
    if grad is not None:
        report["grad"] = grad
    logger.debug(f"Loss {report['total']} with {len(aux)} auxiliary terms")
    return report
