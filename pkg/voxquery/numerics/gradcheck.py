"""
Central-difference gradient checking.
"""

from typing import Callable

import numpy as np
from loguru import logger
from pydantic import validate_call

from ..errors import GradientCheckError, ShapeError
from ..futils import curry
from ..validation import FloatArray


@curry
@validate_call()
def finite_diff_check(
    f: Callable[[np.ndarray], float],
    x: FloatArray,
    analytic_grad: FloatArray,
    h: float = 1e-5,
) -> float:
    """
    Compare an analytic gradient of a scalar function against central differences.

    Parameters
    ----------
    f : Callable[[np.ndarray], float]
        Scalar function of an array shaped like ``x``
    x : np.ndarray
        Point at which to check
    analytic_grad : np.ndarray
        Claimed gradient of ``f`` at ``x``
    h : float
        Step of the central difference

    Returns
    -------
    float
        ``max |analytic - numeric| / max(1, |numeric|)`` over all elements

    Raises
    ------
    GradientCheckError
        If ``f`` is not finite at a perturbed point; carries the element index

    Examples
    --------
    >>> x = np.array([1.5, -2.0, 3.0])
    >>> finite_diff_check(lambda a: 0.5 * np.sum(a**2), x, x) < 1e-8
    True
    >>> round(finite_diff_check(lambda a: 0.5 * np.sum(a**2), x, 2 * x), 6)
    1.0
    """
    if analytic_grad.shape != x.shape:
        raise ShapeError(
            f"Gradient of shape {analytic_grad.shape} does not match input {x.shape}"
        )

    def evaluate(index: tuple[int, ...], step: float) -> float:
        shifted = x.astype(np.float64, copy=True)
        shifted[index] += step
        value = float(f(shifted))
        if not np.isfinite(value):
            raise GradientCheckError(f"Non-finite function value {value}", index)
        return value

    numeric = np.zeros(x.shape)
    for index in np.ndindex(*x.shape):
        numeric[index] = (evaluate(index, h) - evaluate(index, -h)) / (2 * h)

    error = float(
        np.max(np.abs(analytic_grad - numeric) / np.maximum(1.0, np.abs(numeric)), initial=0.0)
    )
    logger.debug(f"Gradient check over {x.size} elements: max relative error {error:.3e}")
    return error
