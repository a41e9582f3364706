"""
Instance-query semantic scene completion at desk scale
"""

from loguru import logger

from . import attention, data, geometry, losses, model, numerics, validation

logger.disable("voxquery")

__all__ = ["attention", "data", "geometry", "losses", "model", "numerics", "validation"]
