import os
import sys

import numpy as np
import pytest

dir_path = os.path.dirname(os.path.realpath(__file__))
sys.path.append(os.path.realpath(f"{dir_path}/../.."))

from voxquery.attention import init_deformable, init_residual_block
from voxquery.errors import ConfigError
from voxquery.model import (STAGE_NAMES, ModelConfig, StageFlags,
                            build_instance_queries, encode_features,
                            encoder_layer, init_params, load_run_config,
                            stratified_points, texel_positions)

DESK = os.path.realpath(f"{dir_path}/../../configs/desk.toml")


class TestLoadRunConfig:
    # No file gives the full-scale defaults
    def test_defaults(self):
        config = load_run_config()
        assert config.model.num_queries == 100
        assert config.model.decoder_layers == 3
        assert config.model.encoder_layers == 6
        assert config.model.num_classes == 20
        assert config.model.grid.dims == (128, 128, 16)

    # The shipped desk configuration
    def test_desk(self):
        config = load_run_config(DESK)
        assert config.model.grid.dims == (32, 32, 8)
        assert config.model.embed_dim == 32
        assert config.model.num_queries == 8
        assert config.model.decoder_layers == 3
        assert config.model.upsample_factor == 2

    # Overrides replace top-level values
    def test_override(self):
        assert load_run_config(DESK, seed=7).seed == 7

    # Unknown keys are errors
    def test_unknown_key(self, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text("[model]\nnum_querys = 3\n")
        with pytest.raises(ConfigError):
            load_run_config(path)

    # Malformed TOML is an error
    def test_malformed(self, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text("[model\n")
        with pytest.raises(ConfigError):
            load_run_config(path)

    # Heads must divide the embedding dim and the decoder needs a layer
    @pytest.mark.parametrize("model", ["embed_dim = 10\nheads = 4", "decoder_layers = 0"])
    def test_invalid_values(self, tmp_path, model):
        path = tmp_path / "bad.toml"
        path.write_text(f"[model]\n{model}\n")
        with pytest.raises(ConfigError):
            load_run_config(path)

    # Stage flags list enabled stages in execution order
    def test_stage_flags(self):
        assert StageFlags().enabled() == STAGE_NAMES
        assert StageFlags(scene_self=False).enabled() == tuple(n for n in STAGE_NAMES if n != "scene_self")


class TestParams:
    # Equal seeds give equal parameters
    def test_determinism(self):
        config = ModelConfig(num_queries=2, embed_dim=4, heads=2, encoder_layers=1, grid={"dims": (2, 2, 2)})
        a, b = init_params(config, 3), init_params(config, 3)
        np.testing.assert_array_equal(a["scene_embeddings"], b["scene_embeddings"])
        np.testing.assert_array_equal(
            a["decoder"][2]["scene_self"]["attn"]["offset_net"]["bias"],
            b["decoder"][2]["scene_self"]["attn"]["offset_net"]["bias"],
        )

    # Every layer carries all five stages with the right dimensionality
    def test_structure(self):
        config = ModelConfig(num_queries=2, embed_dim=4, heads=2, encoder_layers=2, grid={"dims": (2, 3, 2)})
        params = init_params(config)
        assert params["scene_embeddings"].shape == (2, 3, 2, 4)
        assert len(params["encoder"]) == 2 and len(params["decoder"]) == 3
        for layer in params["decoder"]:
            assert set(layer) == set(STAGE_NAMES)
            assert layer["scene_self"]["attn"]["ndim"] == 3
            assert layer["instance_image"]["attn"]["levels"] == config.feature_levels
        assert params["head"]["classifier"]["weight"].shape == (20, 4)

    # Learnable reference points lie inside the image
    def test_learnable_refs(self):
        config = ModelConfig(num_queries=5, embed_dim=4, heads=2, grid={"dims": (2, 2, 2)})
        instances = build_instance_queries(config, init_params(config))
        assert instances["learnable"]
        assert np.all((instances["ref_points_2d"] > 0) & (instances["ref_points_2d"] < 1))

    # Zero queries behave like no queries
    def test_zero_queries(self):
        config = ModelConfig(num_queries=0, embed_dim=4, heads=2, grid={"dims": (2, 2, 2)})
        assert build_instance_queries(config, init_params(config)) is None

    # Stratified points fill cell centres row by row
    def test_stratified(self):
        points = stratified_points(6)
        np.testing.assert_allclose(points[:3, 1], 0.25)
        np.testing.assert_allclose(points[:3, 0], [1 / 6, 0.5, 5 / 6])
        assert np.all((points > 0) & (points < 1))


class TestEncoder:
    # Texel positions span the unit square
    def test_texel_positions(self):
        positions = texel_positions(np.zeros((3, 5, 1)))
        np.testing.assert_array_equal(positions[0], [0.0, 0.0])
        np.testing.assert_array_equal(positions[4], [1.0, 0.0])
        np.testing.assert_array_equal(positions[-1], [1.0, 1.0])

    # A layer keeps level shapes; no layers is the identity
    def test_shapes(self):
        rng = np.random.default_rng(0)
        levels = [rng.normal(size=(6, 8, 4)), rng.normal(size=(3, 4, 4))]
        stage = {
            "attn": init_deformable(rng, 4, 2, 2, 2, 2),
            "block": init_residual_block(rng, 4),
        }
        out = encoder_layer(stage, levels)
        assert [o.shape for o in out] == [l.shape for l in levels]
        assert not np.array_equal(out[0], levels[0])
        unchanged = encode_features([], levels)
        assert all(np.array_equal(a, b) for a, b in zip(unchanged, levels))
