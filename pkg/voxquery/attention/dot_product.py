"""
Multi-head scaled dot-product attention.
"""

import numpy as np

from ..errors import DomainError, ShapeError
from ..numerics import linear_apply, softmax
from ..validation import DotProductAttnParams


def _split_heads(x: np.ndarray, heads: int) -> np.ndarray:
    return x.reshape(x.shape[0], heads, x.shape[1] // heads)


def cross_attn(
    params: DotProductAttnParams, q: np.ndarray, k: np.ndarray, v: np.ndarray
) -> np.ndarray:
    """
    ``softmax(Q K^T / sqrt(d_head)) V`` per head, heads concatenated and
    output-projected.

    Parameters
    ----------
    params : DotProductAttnParams
        Projections and head count
    q : np.ndarray
        Queries (M, C)
    k, v : np.ndarray
        Keys and values (N, C)

    Returns
    -------
    np.ndarray
        Attention output (M, C)

    Raises
    ------
    DomainError
        If there are no keys
    ShapeError
        If ``k`` and ``v`` disagree or C is not divisible by the head count
    """
    heads = params["heads"]
    if k.shape[0] == 0:
        raise DomainError("Attention over an empty key set")
    if k.shape != v.shape or q.shape[1] != k.shape[1] or q.shape[1] % heads:
        raise ShapeError(
            f"Incompatible attention inputs q {q.shape}, k {k.shape}, v {v.shape} for {heads} heads"
        )
    head_dim = q.shape[1] // heads
    queries = _split_heads(linear_apply(params["q_proj"], q), heads)
    keys = _split_heads(linear_apply(params["k_proj"], k), heads)
    values = _split_heads(linear_apply(params["v_proj"], v), heads)

    scores = np.einsum("mhd,nhd->hmn", queries, keys) / np.sqrt(head_dim)
    attended = np.einsum("hmn,nhd->mhd", softmax(scores, axis=-1), values)
    return linear_apply(params["output_proj"], attended.reshape(q.shape[0], -1))


def self_attn(params: DotProductAttnParams, q: np.ndarray) -> np.ndarray:
    """
    ``cross_attn(params, q, q, q)``.
    """
    return cross_attn(params, q, q, q)
