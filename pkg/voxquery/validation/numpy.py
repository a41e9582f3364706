"""
Validation functions for numpy arrays.
"""

import numpy as np

from ..futils import curry


@curry
def is_ndim(arr: np.ndarray, *, ndim: int | list[int] | tuple[int, ...]) -> np.ndarray:
    """
    Assert that ``arr`` has ``ndim`` dimensions.

    Parameters
    ----------
    arr : np.ndarray
        Array to check.
    ndim : int | list[int] | tuple[int, ...]
        Number of dimensions to check for. If a list or tuple, check
        for any of the dimensions in the list.

    Returns
    -------
    np.ndarray
        The input array.

    Example
    -------
    >>> from pydantic import AfterValidator, validate_call
    >>> from typing import Annotated
    >>> @validate_call()
    ... def fov_voxels(
    ...     mask: Annotated[np.ndarray, NumpyArrayAnnotation, AfterValidator(is_ndim(ndim=3))]
    ... ):
    ...     return int(mask.sum())
    >>> fov_voxels(np.ones((4, 4, 2), dtype=bool))
    32
    >>> fov_voxels(np.ones((4, 4), dtype=bool))  # Error, expected 3 dimensions, got 2
    """
    allowed = (ndim,) if isinstance(ndim, int) else tuple(ndim)
    assert arr.ndim in allowed, f"Expected {ndim} dimensions, got {arr.ndim}"
    return arr


def all_finite(arr: np.ndarray) -> np.ndarray:
    """
    Assert that every element of ``arr`` is finite.

    Example
    -------
    >>> all_finite(np.array([1.0, 2.0]))
    array([1., 2.])
    >>> all_finite(np.array([1.0, np.nan]))  # Error, array contains non-finite values
    """
    assert np.all(np.isfinite(arr)), "Array contains non-finite values"
    return arr
