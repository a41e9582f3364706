"""
Post-norm residual block wrapping every attention stage.
"""

import numpy as np
import toolz as tz

from ..numerics import layer_norm, linear_apply, relu
from ..validation import LayerNormParams, ResidualBlockParams


def _norm(params: LayerNormParams, x: np.ndarray) -> np.ndarray:
    return layer_norm(x, params["gamma"], params["beta"], params["eps"])


def feed_forward(block: ResidualBlockParams, x: np.ndarray) -> np.ndarray:
    """
    ``ffn_out(relu(ffn_hidden(x)))``.
    """
    return tz.pipe(
        x,
        linear_apply(block["ffn_hidden"]),
        relu,
        linear_apply(block["ffn_out"]),
    )


def residual_block(
    block: ResidualBlockParams, x: np.ndarray, attn_out: np.ndarray
) -> np.ndarray:
    """
    ``y = LN(x + attn_out)``, then ``LN(y + FFN(y))``.

    Parameters
    ----------
    block : ResidualBlockParams
        Feed-forward and layer-norm parameters
    x : np.ndarray
        Stage input (..., C)
    attn_out : np.ndarray
        Attention output of the same shape

    Returns
    -------
    np.ndarray
        Block output (..., C)
    """
    y = _norm(block["norm_attn"], x + attn_out)
    return _norm(block["norm_ffn"], y + feed_forward(block, y))
