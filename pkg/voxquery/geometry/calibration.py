"""
Plain-text camera calibration files.

One key per line followed by whitespace-separated values; ``#`` starts a comment::

    # desk camera
    K 32 0 31.5 0 32 23.5 0 0 1
    R 0 -1 0 0 0 -1 1 0 0
    T 0 0 0
    image_size 64 48
"""

from pathlib import Path

import numpy as np
import toolz as tz
import toolz.curried as curried
from pydantic import validate_call

from ..errors import ConfigError
from ..futils import curry
from ..validation import CameraModel
from .camera import check_camera

CALIBRATION_KEYS = {"K": 9, "R": 9, "T": 3, "image_size": 2}


@validate_call()
def load_calibration(path: str | Path) -> CameraModel:
    """
    Read a camera from a calibration file.

    Parameters
    ----------
    path : str | Path
        Calibration file

    Returns
    -------
    CameraModel
        Validated camera

    Raises
    ------
    ConfigError
        On unknown, repeated or missing keys, wrong value counts, or a camera
        that fails ``check_camera``
    """
    entries: dict[str, list[str]] = {}
    lines = tz.pipe(
        Path(path).read_text().splitlines(),
        curried.map(lambda line: line.split("#", 1)[0].split()),
        curried.filter(bool),
    )
    for key, *values in lines:
        if key not in CALIBRATION_KEYS:
            raise ConfigError(f"Unknown calibration key '{key}' in {path}")
        if key in entries:
            raise ConfigError(f"Calibration key '{key}' repeated in {path}")
        if len(values) != CALIBRATION_KEYS[key]:
            raise ConfigError(
                f"Calibration key '{key}' expects {CALIBRATION_KEYS[key]} values, got {len(values)}"
            )
        entries[key] = values

    if missing := set(CALIBRATION_KEYS) - set(entries):
        raise ConfigError(f"Calibration file {path} is missing {sorted(missing)}")

    try:
        cam: CameraModel = {
            "intrinsics": np.array(entries["K"], dtype=np.float64).reshape(3, 3),
            "rotation": np.array(entries["R"], dtype=np.float64).reshape(3, 3),
            "translation": np.array(entries["T"], dtype=np.float64),
            "image_size": (int(entries["image_size"][0]), int(entries["image_size"][1])),
        }
    except ValueError as e:
        raise ConfigError(f"Malformed number in {path}: {e}") from e
    return check_camera(cam)


@curry
@validate_call()
def save_calibration(cam: CameraModel, path: str | Path) -> None:
    """
    Write ``cam`` in the calibration file format with round-trip float precision.
    """
    def fmt(values) -> str:
        return " ".join(repr(float(v)) for v in np.ravel(values))

    width, height = cam["image_size"]
    Path(path).write_text(
        "\n".join(
            [
                f"K {fmt(cam['intrinsics'])}",
                f"R {fmt(cam['rotation'])}",
                f"T {fmt(cam['translation'])}",
                f"image_size {int(width)} {int(height)}",
            ]
        )
        + "\n"
    )
