import os
import sys

import numpy as np
import pytest

dir_path = os.path.dirname(os.path.realpath(__file__))
sys.path.append(os.path.realpath(f"{dir_path}/../.."))

from voxquery.attention import (cross_attn, deformable_attn_2d,
                                deformable_attn_3d, residual_block, self_attn)
from voxquery.errors import ConfigError
from voxquery.geometry import (lift_pixel, look_at_camera,
                               voxel_center_coords, world_to_grid_normalized)
from voxquery.model import (GridConfig, ModelConfig, StageFlags,
                            build_instance_queries, center_depth,
                            decoder_layer, init_params, init_scene,
                            reference_depths, run_decoder_stack)

CONFIG = ModelConfig(
    num_queries=3,
    embed_dim=8,
    decoder_layers=2,
    encoder_layers=0,
    heads=2,
    sampling_points=2,
    feature_levels=2,
    num_classes=5,
    grid=GridConfig(origin=(0.0, -1.6, 0.0), dims=(8, 8, 4)),
)
GRID = CONFIG.grid.spec()
CAMERA = look_at_camera(np.array([-1.0, 0.0, 0.8]), (16, 12), 8.0)
DEPTH = {"values": np.full((12, 16), 2.5), "valid": np.ones((12, 16), dtype=bool)}
ALL_OFF = StageFlags(
    instance_image=False, scene_instance=False, scene_self=False, instance_scene=False, instance_self=False
)


def setup(seed=0):
    params = init_params(CONFIG, seed)
    rng = np.random.default_rng(seed + 100)
    features = [rng.normal(size=(12, 16, 8)), rng.normal(size=(6, 8, 8))]
    scene = init_scene(GRID, CAMERA, DEPTH, params["scene_embeddings"])
    return params, features, scene, build_instance_queries(CONFIG, params)


def only(name):
    return ALL_OFF.model_copy(update={name: True})


class TestReferenceDepths:
    # Constant valid depth is read back exactly
    def test_constant(self):
        refs = np.random.default_rng(0).uniform(size=(5, 2))
        np.testing.assert_allclose(reference_depths(CAMERA, GRID, DEPTH, refs), 2.5)

    # Invalid neighbours are skipped and the weights renormalised
    def test_skips_invalid(self):
        depth = {"values": np.full((12, 16), 2.0), "valid": np.ones((12, 16), dtype=bool)}
        depth["values"][:, 8:] = 99.0
        depth["valid"][:, 8:] = False
        refs = np.array([[7.5 / 15, 0.5]])
        np.testing.assert_allclose(reference_depths(CAMERA, GRID, depth, refs), [2.0])

    # No valid neighbour falls back to the grid centre depth
    def test_fallback(self):
        depth = {"values": np.zeros((12, 16)), "valid": np.zeros((12, 16), dtype=bool)}
        out = reference_depths(CAMERA, GRID, depth, np.array([[0.2, 0.7]]))
        np.testing.assert_allclose(out, [center_depth(CAMERA, GRID)])
        np.testing.assert_allclose(center_depth(CAMERA, GRID), 2.6)


class TestDecoderLayer:
    # With every stage off the inputs pass through
    def test_all_off(self):
        params, features, scene, instances = setup()
        out_scene, out_instances = decoder_layer(
            scene, instances, features, CAMERA, GRID, DEPTH, params["decoder"][0], ALL_OFF
        )
        assert out_scene is scene and out_instances is instances

    # Voxels outside the field of view are never written
    def test_fov_locality(self):
        params, features, scene, instances = setup()
        out_scene, _ = decoder_layer(
            scene, instances, features, CAMERA, GRID, DEPTH, params["decoder"][0], StageFlags()
        )
        outside = ~scene["fov_mask"]
        np.testing.assert_array_equal(out_scene["embeddings"][outside], scene["embeddings"][outside])
        assert not np.array_equal(out_scene["embeddings"], scene["embeddings"])

    # A single key gives every visible voxel the same attention output
    def test_single_instance_cross_attention(self):
        params, features, scene, instances = setup()
        single = {**instances, "embeddings": instances["embeddings"][:1], "ref_points_2d": instances["ref_points_2d"][:1]}
        stage = params["decoder"][0]["scene_instance"]
        out_scene, _ = decoder_layer(
            scene, single, features, CAMERA, GRID, DEPTH, params["decoder"][0], only("scene_instance")
        )
        visible = scene["embeddings"][scene["fov_mask"]]
        attn = cross_attn(stage["attn"], visible, single["embeddings"], single["embeddings"])
        np.testing.assert_allclose(attn, np.broadcast_to(attn[0], attn.shape), atol=1e-12)
        np.testing.assert_allclose(
            out_scene["embeddings"][scene["fov_mask"]],
            residual_block(stage["block"], visible, attn),
            atol=1e-12,
        )

    # A full layer is the straight-line composition of the five stages
    def test_composition(self):
        params, features, scene, instances = setup(1)
        layer = params["decoder"][0]
        out_scene, out_instances = decoder_layer(
            scene, instances, features, CAMERA, GRID, DEPTH, layer, StageFlags()
        )

        mask = scene["fov_mask"]
        refs = instances["ref_points_2d"]
        q = instances["embeddings"]
        q = residual_block(layer["instance_image"]["block"], q, deformable_attn_2d(layer["instance_image"]["attn"], q, refs, features))

        volume = scene["embeddings"].copy()
        visible = volume[mask]
        visible = residual_block(layer["scene_instance"]["block"], visible, cross_attn(layer["scene_instance"]["attn"], visible, q, q))
        volume[mask] = visible

        voxel_refs = voxel_center_coords(GRID, normalized=True)[mask]
        updated = residual_block(
            layer["scene_self"]["block"], visible, deformable_attn_3d(layer["scene_self"]["attn"], visible, voxel_refs, volume)
        )
        volume = volume.copy()
        volume[mask] = updated

        lifted = np.stack([lift_pixel(CAMERA, r * np.array([15.0, 11.0]), 2.5) for r in refs])
        refs_3d = world_to_grid_normalized(GRID, lifted)
        q = residual_block(layer["instance_scene"]["block"], q, deformable_attn_3d(layer["instance_scene"]["attn"], q, refs_3d, volume))
        q = residual_block(layer["instance_self"]["block"], q, self_attn(layer["instance_self"]["attn"], q))

        np.testing.assert_allclose(out_scene["embeddings"], volume, atol=1e-10)
        np.testing.assert_allclose(out_instances["embeddings"], q, atol=1e-10)

    # Without instances only the scene self-attention runs
    def test_no_instances(self):
        params, features, scene, _ = setup()
        layer = params["decoder"][0]
        full, none_instances = decoder_layer(scene, None, features, CAMERA, GRID, None, layer, StageFlags())
        self_only, _ = decoder_layer(scene, None, features, CAMERA, GRID, None, layer, only("scene_self"))
        assert none_instances is None
        np.testing.assert_array_equal(full["embeddings"], self_only["embeddings"])

    # The lifting stage needs a depth map
    def test_missing_depth(self):
        params, features, scene, instances = setup()
        with pytest.raises(ConfigError):
            decoder_layer(scene, instances, features, CAMERA, GRID, None, params["decoder"][0], StageFlags())

    # Enabled stages need parameters
    def test_missing_params(self):
        params, features, scene, instances = setup()
        layer = {k: v for k, v in params["decoder"][0].items() if k != "scene_self"}
        with pytest.raises(ConfigError):
            decoder_layer(scene, instances, features, CAMERA, GRID, DEPTH, layer, StageFlags())


class TestRunDecoderStack:
    # One layer equals one decoder_layer call
    def test_single_layer(self):
        params, features, scene, instances = setup()
        final, final_instances, intermediates = run_decoder_stack(
            scene, instances, features, CAMERA, GRID, DEPTH, params["decoder"][:1], StageFlags()
        )
        expected, expected_instances = decoder_layer(
            scene, instances, features, CAMERA, GRID, DEPTH, params["decoder"][0], StageFlags()
        )
        np.testing.assert_array_equal(final["embeddings"], expected["embeddings"])
        np.testing.assert_array_equal(final_instances["embeddings"], expected_instances["embeddings"])
        assert len(intermediates) == 1

    # Two layers equal two manual applications; the last intermediate is the final scene
    def test_two_layers(self):
        params, features, scene, instances = setup()
        final, _, intermediates = run_decoder_stack(
            scene, instances, features, CAMERA, GRID, DEPTH, params["decoder"], StageFlags()
        )
        first = decoder_layer(scene, instances, features, CAMERA, GRID, DEPTH, params["decoder"][0], StageFlags())
        second, _ = decoder_layer(*first, features, CAMERA, GRID, DEPTH, params["decoder"][1], StageFlags())
        np.testing.assert_array_equal(intermediates[0]["embeddings"], first[0]["embeddings"])
        np.testing.assert_array_equal(final["embeddings"], second["embeddings"])
        np.testing.assert_array_equal(intermediates[-1]["embeddings"], final["embeddings"])

    # At least one layer is required
    def test_empty(self):
        _, features, scene, instances = setup()
        with pytest.raises(ConfigError):
            run_decoder_stack(scene, instances, features, CAMERA, GRID, DEPTH, [], StageFlags())
