"""
Exceptions raised by voxquery.

Each error subclasses a built-in exception so callers may catch either.
"""


class ShapeError(ValueError):
    """Array extents are inconsistent with the operation."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class NonDifferentiableError(DomainError):
    """Point lies on an interpolation lattice line or plane."""


class ConfigError(ValueError):
    """Configuration, calibration or stage inputs are inconsistent."""


class GridFormatError(ValueError):
    """Malformed voxel grid file."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class GradientCheckError(ArithmeticError):
    """Function evaluation was not finite during a finite-difference check."""

    def __init__(self, message: str, index: tuple[int, ...]):
        super().__init__(f"{message} at index {index}")
        self.index = index


class InvariantFailure(AssertionError):
    """A named property of the invariant suite does not hold."""

    def __init__(self, name: str, detail: str = ""):
        super().__init__(f"{name}: {detail}" if detail else name)
        self.name = name
        self.detail = detail
