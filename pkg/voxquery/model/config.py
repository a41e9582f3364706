"""
Run and model configuration.

Configuration files are TOML. Every section maps onto a pydantic model that
forbids unknown keys; omitted keys take the documented defaults, which describe
the full-scale model. ``configs/desk.toml`` holds the desk-scale run.
"""

import tomllib
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import (BaseModel, ConfigDict, Field, ValidationError,
                      model_validator)

from ..errors import ConfigError
from ..validation import VoxelGridSpec

STAGE_NAMES = (
    "instance_image",
    "scene_instance",
    "scene_self",
    "instance_scene",
    "instance_self",
)
"""Decoder stages in order of execution."""

INSTANCE_STAGES = frozenset({"instance_image", "scene_instance", "instance_scene", "instance_self"})
"""Stages that read or write instance queries."""


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GridConfig(_Section):
    """
    Decoder-resolution voxel grid. Defaults cover SemanticKITTI's 51.2 m x
    51.2 m x 6.4 m volume at half the 256 x 256 x 32 label resolution.
    """

    origin: tuple[float, float, float] = (0.0, -25.6, -2.0)
    voxel_size: tuple[float, float, float] = (0.4, 0.4, 0.4)
    dims: tuple[int, int, int] = (128, 128, 16)

    @model_validator(mode="after")
    def _positive(self) -> "GridConfig":
        if min(self.voxel_size) <= 0 or min(self.dims) < 1:
            raise ValueError("voxel sizes and dims must be positive")
        return self

    def spec(self) -> VoxelGridSpec:
        return {
            "origin": np.array(self.origin, dtype=np.float64),
            "voxel_size": np.array(self.voxel_size, dtype=np.float64),
            "dims": self.dims,
        }


class StageFlags(_Section):
    """
    Enable flags of the five decoder stages.
    """

    instance_image: bool = True
    scene_instance: bool = True
    scene_self: bool = True
    instance_scene: bool = True
    instance_self: bool = True

    def enabled(self) -> tuple[str, ...]:
        return tuple(name for name in STAGE_NAMES if getattr(self, name))


class ModelConfig(_Section):
    """
    Architecture hyperparameters.

    Attributes
    ----------
    num_queries : int
        Instance queries N
    embed_dim : int
        Channel count C of queries, voxels and image features
    decoder_layers : int
        Decoder layers, at least 1
    encoder_layers : int
        Deformable self-attention layers over the image feature pyramid
    heads : int
        Attention heads; must divide ``embed_dim``
    sampling_points : int
        Deformable samples per head and level
    feature_levels : int
        Levels of the image feature pyramid
    num_classes : int
        Semantic classes including ``empty``
    ffn_ratio : int
        Hidden width of the residual feed-forward networks, in multiples of C
    upsample_factor : int
        Label resolution over decoder resolution
    query_mode : {"learnable", "detached", "none"}
        Learnable reference points, a fixed stratified grid, or no instance queries
    lifting : {"proposal", "projection"}
        Voxel proposal layer, or image-feature projection onto every visible voxel
    """

    num_queries: int = Field(100, ge=0)
    embed_dim: int = Field(64, ge=1)
    decoder_layers: int = Field(3, ge=1)
    encoder_layers: int = Field(6, ge=0)
    heads: int = Field(8, ge=1)
    sampling_points: int = Field(4, ge=1)
    feature_levels: int = Field(3, ge=1)
    num_classes: int = Field(20, ge=2)
    ffn_ratio: int = Field(4, ge=1)
    upsample_factor: int = Field(2, ge=1)
    query_mode: Literal["learnable", "detached", "none"] = "learnable"
    lifting: Literal["proposal", "projection"] = "proposal"
    grid: GridConfig = GridConfig()
    stages: StageFlags = StageFlags()

    @model_validator(mode="after")
    def _heads_divide_dim(self) -> "ModelConfig":
        if self.embed_dim % self.heads:
            raise ValueError(f"embed_dim {self.embed_dim} is not divisible by heads {self.heads}")
        return self

    @property
    def uses_instances(self) -> bool:
        return self.query_mode != "none" and self.num_queries > 0


class SceneConfig(_Section):
    """
    Synthetic scene generation at label resolution.
    """

    num_boxes: int = Field(6, ge=0)
    ground: bool = True
    palette: tuple[int, ...] = (1, 4, 5, 6, 13, 14, 15, 16, 18)
    """Class ids drawn for boxes."""
    box_size: tuple[float, float] = (0.6, 3.0)
    """Range of box edge lengths in meters."""
    feature_channels: Optional[int] = None
    """Defaults to ``model.embed_dim``."""


class CameraConfig(_Section):
    position: tuple[float, float, float] = (-1.0, 0.0, 1.6)
    yaw: float = 0.0
    focal: float = 32.0
    image_size: tuple[int, int] = (64, 48)


class OutputConfig(_Section):
    dir: Path = Path("out")
    report: str = "report.txt"
    logits: str = "logits.symv"
    save_params: bool = False
    params: Optional[Path] = None
    """Parameter bundle to load instead of initialising from the seed."""


class RunConfig(_Section):
    seed: int = Field(0, ge=0)
    model: ModelConfig = ModelConfig()
    scene: SceneConfig = SceneConfig()
    camera: CameraConfig = CameraConfig()
    output: OutputConfig = OutputConfig()


def load_run_config(path: str | Path | None = None, **overrides) -> RunConfig:
    """
    Read a TOML run configuration.

    Parameters
    ----------
    path : str | Path | None
        TOML file; ``None`` gives the defaults
    **overrides
        Top-level fields replacing the file's values (e.g. ``seed``)

    Raises
    ------
    ConfigError
        On malformed TOML, unknown keys or invalid values
    """
    try:
        data = tomllib.loads(Path(path).read_text()) if path is not None else {}
        return RunConfig.model_validate({**data, **overrides})
    except (tomllib.TOMLDecodeError, ValidationError) as e:
        raise ConfigError(f"Invalid configuration {path}: {e}") from e
