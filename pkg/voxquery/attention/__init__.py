"""
Attention primitives: deformable attention, dot-product attention and the
residual block wrapping them.
"""

from .block import feed_forward, residual_block
from .deformable import (deformable_attn_2d, deformable_attn_3d,
                         sampling_locations, sampling_weights)
from .dot_product import cross_attn, self_attn
from .init import (head_directions, init_deformable, init_dot_product,
                   init_linear, init_residual_block)

__all__ = [
    "deformable_attn_2d",
    "deformable_attn_3d",
    "sampling_locations",
    "sampling_weights",
    "cross_attn",
    "self_attn",
    "feed_forward",
    "residual_block",
    "head_directions",
    "init_linear",
    "init_deformable",
    "init_dot_product",
    "init_residual_block",
]
