"""
Serialise nested dictionaries, parameter sets and synthetic scenes to HDF5.
"""

import re
from pathlib import Path
from typing import Any, Iterator

import h5py
import numpy as np
import toolz as tz
from loguru import logger
from pydantic import validate_call

from ..errors import ConfigError
from ..futils import curry
from ..validation import H5File, H5Group, ModelParams, SyntheticScene

MANIFEST = "manifest"
"""File attribute listing every affine block of a parameter set."""

_INDEX = re.compile(r"\d+")


def _dataset(hf: h5py.File | h5py.Group, key: str, val: Any) -> None:
    if np.size(val) == 0 or np.ndim(val) == 0:
        hf.create_dataset(key, data=val, track_times=False)
    else:
        hf.create_dataset(key, data=val, compression="gzip", track_times=False)


@curry
@validate_call(config={"arbitrary_types_allowed": True})
def dict_to_h5(data: dict[str, Any], hf: H5File | H5Group | str | Path) -> None:
    """
    Serialise a dictionary to an h5 file. Supported types are:
        - ``str, int, float, bool``: saved as scalar datasets
        - ``dict``: saved as a group recursively
        - ``numpy.ndarray``: saved as a gzip-compressed dataset
        - ``tuple, list``: saved as a dataset if every element is a number,
          else as a group with indices as keys
        - ``None``: skipped

    Datasets carry no timestamps, so equal data gives equal files.

    Parameters
    ----------
    data: dict
        Dictionary to save. Each value is saved as a dataset or group.
    hf: h5py.File | h5py.Group | str | Path
        H5 file or group to save to. If a string or Path, then the file
        is opened in append mode
    """
    if isinstance(hf, str | Path):
        with h5py.File(hf, "a") as f:
            dict_to_h5(data, f)
        return

    for key, val in data.items():
        match val:
            case x if isinstance(x, str | bool | int | float | np.number | np.bool_):
                _dataset(hf, key, val)
            case x if isinstance(x, dict):
                dict_to_h5(val, hf.create_group(key))
            case x if isinstance(x, np.ndarray) or (
                isinstance(x, tuple | list)
                and x
                and all(isinstance(i, int | float | np.number) for i in x)
            ):
                _dataset(hf, key, np.asarray(val))
            case x if isinstance(x, list | tuple):
                dict_to_h5({str(i): v for i, v in enumerate(x)}, hf.create_group(key))
            case x if x is None:
                pass
            case _:
                logger.warning(f"Unsupported type {type(val)} for key {key}, skipping")


@validate_call(config={"arbitrary_types_allowed": True})
def dict_from_h5(hf: H5File | H5Group | str | Path) -> dict[str, Any]:
    """
    Load a h5 file as a dictionary.

    Groups whose keys are ``0, 1, ...`` and empty groups come back as lists,
    and scalar datasets as Python ``str``, ``bool``, ``int`` or ``float``.

    Parameters
    ----------
    hf: h5py.File | h5py.Group | str | Path
        H5 file or group to load from. If a string or Path, then the file
        is opened in read mode

    Returns
    -------
    dict
        Dictionary loaded from the h5 file
    """

    def load_value(val: Any) -> Any:
        match val:
            case x if isinstance(x, h5py.Dataset):
                data = val[()]
                if isinstance(data, bytes):
                    return data.decode()
                return data.item() if isinstance(data, np.generic) else data
            case x if isinstance(x, h5py.Group):
                return load_group(val)
            case _:
                return val

    def load_group(group: h5py.File | h5py.Group) -> dict[str, Any] | list[Any]:
        loaded = {key: load_value(val) for key, val in group.items()}
        if all(_INDEX.fullmatch(k) for k in loaded):
            return [loaded[str(i)] for i in range(len(loaded))]
        return loaded

    if isinstance(hf, str | Path):
        with h5py.File(hf, "r") as f:
            return load_group(f)  # type: ignore
    return load_group(hf)  # type: ignore


def linear_map_paths(tree: Any, prefix: str = "") -> Iterator[str]:
    """
    Slash-separated paths of every ``{"weight", "bias"}`` block in evaluation
    order of the parameter tree.
    """
    match tree:
        case {"weight": _, "bias": _} if len(tree) == 2:
            yield prefix
        case dict():
            for key, val in tree.items():
                yield from linear_map_paths(val, f"{prefix}/{key}" if prefix else key)
        case list() | tuple():
            for i, val in enumerate(tree):
                yield from linear_map_paths(val, f"{prefix}/{i}" if prefix else str(i))


@curry
def save_params(params: ModelParams, path: str | Path) -> None:
    """
    Write a parameter set, replacing any existing file.

    Every affine block is stored as its ``weight`` (out x in) and ``bias``
    datasets; the ``manifest`` attribute lists the block paths in order.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with h5py.File(path, "w", track_order=True) as f:
        dict_to_h5(params, f)
        f.attrs[MANIFEST] = list(linear_map_paths(params))
    logger.info(f"Saved parameters to {path}")


def load_params(path: str | Path) -> ModelParams:
    """
    Read a parameter set written by ``save_params``.

    Raises
    ------
    ConfigError
        If a block listed in the manifest is missing or malformed
    """
    with h5py.File(path, "r") as f:
        manifest = [str(p) for p in f.attrs.get(MANIFEST, [])]
        params = dict_from_h5(f)
    for block_path in manifest:
        try:
            block = tz.get_in(
                [int(k) if _INDEX.fullmatch(k) else k for k in block_path.split("/")],
                params,
                no_default=True,
            )
        except (KeyError, IndexError, TypeError) as e:
            raise ConfigError(f"Parameter block {block_path} is missing from {path}") from e
        weight, bias = block["weight"], block["bias"]
        if weight.ndim != 2 or bias.shape != (weight.shape[0],):
            raise ConfigError(
                f"Parameter block {block_path} has weight {weight.shape} and bias {bias.shape}"
            )
    return params  # type: ignore


def save_scene(scene: SyntheticScene, path: str | Path) -> None:
    """
    Write a synthetic scene bundle, replacing any existing file.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with h5py.File(path, "w", track_order=True) as f:
        dict_to_h5(scene, f)


def load_scene(path: str | Path) -> SyntheticScene:
    scene = dict_from_h5(path)
    scene["camera"]["image_size"] = tuple(int(n) for n in scene["camera"]["image_size"])
    return scene  # type: ignore
