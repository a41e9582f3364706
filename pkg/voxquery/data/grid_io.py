"""
Bit-exact voxel grid files.

Layout, little-endian::

    offset  size  field
    0       4     magic b"SYMV"
    4       2     format version (u16), currently 1
    6       1     payload type (u8): 0 = u8 labels, 1 = f32 logits
    7       1     reserved, 0
    8       12    X, Y, Z (u32 each)
    20      4     num_classes (u32), logits only
    ...           payload in row-major (C) order

A label file is therefore ``20 + X * Y * Z`` bytes long and a logit file
``24 + 4 * X * Y * Z * num_classes``.
"""

import struct
import sys
from pathlib import Path
from typing import Final

import numpy as np
from loguru import logger

from ..errors import DomainError, GridFormatError, ShapeError

MAGIC: Final[bytes] = b"SYMV"
VERSION: Final[int] = 1
LABELS: Final[int] = 0
LOGITS: Final[int] = 1

_PREFIX = struct.Struct("<4sHBB")
_DIMS = struct.Struct("<III")
_CLASSES = struct.Struct("<I")
_U32_MAX = 2**32 - 1


def encode_grid(grid: np.ndarray) -> bytes:
    """
    Serialise a label grid (X, Y, Z) of integers in [0, 255] or a logit grid
    (X, Y, Z, num_classes) of floats, written as float32.

    Raises
    ------
    ShapeError
        If the rank is not 3 (labels) or 4 (logits), or an extent does not fit in u32
    DomainError
        If a label lies outside [0, 255]
    """
    if grid.ndim == 3 and np.issubdtype(grid.dtype, np.integer):
        kind = LABELS
        if grid.size and (grid.min() < 0 or grid.max() > 255):
            raise DomainError("Labels must lie in [0, 255]")
        payload = np.ascontiguousarray(grid, dtype=np.uint8).tobytes()
    elif grid.ndim == 4 and np.issubdtype(grid.dtype, np.floating):
        kind = LOGITS
        payload = np.ascontiguousarray(grid, dtype="<f4").tobytes()
    else:
        raise ShapeError(
            f"Expected integer labels (X, Y, Z) or float logits (X, Y, Z, K), got {grid.dtype} {grid.shape}"
        )
    if any(n < 1 or n > _U32_MAX for n in grid.shape):
        raise ShapeError(f"Grid extents {grid.shape} must lie in [1, 2^32 - 1]")

    header = _PREFIX.pack(MAGIC, VERSION, kind, 0) + _DIMS.pack(*grid.shape[:3])
    if kind == LOGITS:
        header += _CLASSES.pack(grid.shape[3])
    return header + payload


def _unpack(fmt: struct.Struct, data: bytes, offset: int, what: str) -> tuple:
    if len(data) < offset + fmt.size:
        raise GridFormatError(f"Truncated {what}", len(data))
    return fmt.unpack_from(data, offset)


def decode_grid(data: bytes) -> np.ndarray:
    """
    Parse the bytes of a grid file.

    Raises
    ------
    GridFormatError
        On a bad magic, version, payload type or extent, a truncated file or
        trailing bytes; ``offset`` is the byte at which parsing failed
    """
    magic, version, kind, reserved = _unpack(_PREFIX, data, 0, "header")
    if magic != MAGIC:
        raise GridFormatError(f"Bad magic {magic!r}", 0)
    if version != VERSION:
        raise GridFormatError(f"Unsupported version {version}", 4)
    if kind not in (LABELS, LOGITS):
        raise GridFormatError(f"Unknown payload type {kind}", 6)
    if reserved != 0:
        raise GridFormatError(f"Reserved byte is {reserved}", 7)

    shape = list(_unpack(_DIMS, data, _PREFIX.size, "dimensions"))
    offset = _PREFIX.size + _DIMS.size
    if kind == LOGITS:
        shape += _unpack(_CLASSES, data, offset, "class count")
        offset += _CLASSES.size
    for i, n in enumerate(shape):
        if n == 0:
            raise GridFormatError("Zero extent", _PREFIX.size + 4 * i)

    itemsize = 1 if kind == LABELS else 4
    expected = itemsize * int(np.prod(shape, dtype=object))
    if expected > sys.maxsize:
        raise GridFormatError(f"Grid extents {shape} overflow", _PREFIX.size)
    if len(data) < offset + expected:
        raise GridFormatError(f"Truncated payload, expected {expected} bytes", len(data))
    if len(data) > offset + expected:
        raise GridFormatError("Trailing bytes after payload", offset + expected)

    dtype = np.uint8 if kind == LABELS else np.dtype("<f4")
    return np.frombuffer(data, dtype=dtype, count=expected // itemsize, offset=offset).reshape(shape).copy()


def save_grid(grid: np.ndarray, path: str | Path) -> None:
    """
    Write a label or logit grid; see ``encode_grid``.

    The header is 20 bytes for labels (magic, version, payload type, reserved
    byte and three u32 extents) and 24 bytes for logits, which add a u32 class
    count. A label file is ``20 + X * Y * Z`` bytes long.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_grid(grid))
    logger.debug(f"Wrote grid {grid.shape} to {path}")


def load_grid(path: str | Path) -> np.ndarray:
    """
    Read a grid file: uint8 labels (X, Y, Z) or float32 logits (X, Y, Z, K).

    Raises
    ------
    GridFormatError
        If the file is malformed
    FileNotFoundError
        If the file does not exist
    """
    return decode_grid(Path(path).read_bytes())
