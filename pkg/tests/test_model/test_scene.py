import os
import sys

import numpy as np
import pytest

dir_path = os.path.dirname(os.path.realpath(__file__))
sys.path.append(os.path.realpath(f"{dir_path}/../.."))

from voxquery.attention import (init_deformable, init_residual_block,
                                residual_block)
from voxquery.errors import ConfigError
from voxquery.geometry import (compute_fov_mask, look_at_camera,
                               project_points, propose_voxels,
                               voxel_center_coords)
from voxquery.model import (init_scene, project_features,
                            voxel_proposal_layer)
from voxquery.numerics import bilinear_sample

GRID = {
    "origin": np.array([0.0, -1.6, 0.0]),
    "voxel_size": np.array([0.4, 0.4, 0.4]),
    "dims": (8, 8, 4),
}
CAMERA = look_at_camera(np.array([-1.0, 0.0, 0.8]), (16, 12), 8.0)


def plane_depth(d, valid=True):
    return {"values": np.full((12, 16), d), "valid": np.full((12, 16), valid)}


def identity(dim):
    return {"weight": np.eye(dim), "bias": np.zeros(dim)}


def degenerate_stage(dim, seed=0):
    rng = np.random.default_rng(seed)
    attn = init_deformable(rng, dim, 1, 1, 1, 2)
    attn["offset_net"]["bias"] = np.zeros_like(attn["offset_net"]["bias"])
    attn["value_proj"] = identity(dim)
    attn["output_proj"] = identity(dim)
    return {"attn": attn, "block": init_residual_block(rng, dim)}


class TestInitScene:
    # Masks agree with the geometry module
    def test_masks(self):
        embeddings = np.random.default_rng(0).normal(size=(8, 8, 4, 6))
        scene = init_scene(GRID, CAMERA, plane_depth(2.5), embeddings)
        np.testing.assert_array_equal(scene["fov_mask"], compute_fov_mask(CAMERA, GRID))
        proposal = propose_voxels(CAMERA, GRID, plane_depth(2.5))
        np.testing.assert_array_equal(scene["proposal"]["indices"], proposal["indices"])
        assert scene["proposal"]["indices"].shape[0] > 0

    # Some voxels near the camera fall outside the image
    def test_partial_fov(self):
        scene = init_scene(GRID, CAMERA, plane_depth(2.5), np.zeros((8, 8, 4, 2)))
        assert scene["fov_mask"].any() and not scene["fov_mask"].all()

    # Embeddings are copied
    def test_embeddings_copied(self):
        embeddings = np.ones((8, 8, 4, 2))
        scene = init_scene(GRID, CAMERA, plane_depth(2.5), embeddings)
        scene["embeddings"][0, 0, 0] = 5.0
        assert embeddings[0, 0, 0, 0] == 1.0

    # A camera far behind the grid sees all of it; invalid depth proposes nothing
    def test_empty_proposal_full_fov(self):
        far = look_at_camera(np.array([-40.0, 0.0, 0.8]), (16, 12), 8.0)
        scene = init_scene(GRID, far, plane_depth(1.0, valid=False), np.zeros((8, 8, 4, 2)))
        assert scene["fov_mask"].all()
        assert scene["proposal"]["indices"].shape == (0, 3)

    # Embeddings must match the grid
    def test_mismatched_embeddings(self):
        with pytest.raises(ConfigError):
            init_scene(GRID, CAMERA, plane_depth(2.5), np.zeros((8, 8, 3, 2)))

    # Depth must match the camera image
    def test_mismatched_depth(self):
        depth = {"values": np.ones((5, 5)), "valid": np.ones((5, 5), dtype=bool)}
        with pytest.raises(ConfigError):
            init_scene(GRID, CAMERA, depth, np.zeros((8, 8, 4, 2)))

    # Degenerate calibration is rejected
    def test_degenerate_camera(self):
        cam = {**CAMERA, "intrinsics": np.zeros((3, 3))}
        with pytest.raises(ConfigError):
            init_scene(GRID, cam, plane_depth(2.5), np.zeros((8, 8, 4, 2)))


class TestVoxelProposalLayer:
    # An empty proposal leaves the scene unchanged
    def test_empty_proposal(self):
        rng = np.random.default_rng(1)
        scene = {
            "embeddings": rng.normal(size=(4, 4, 2, 4)),
            "fov_mask": np.ones((4, 4, 2), dtype=bool),
            "proposal": {"indices": np.zeros((0, 3), dtype=np.int64), "canonical_pixels": np.zeros((0, 2))},
        }
        out = voxel_proposal_layer(scene, [rng.normal(size=(5, 6, 4))], degenerate_stage(4))
        np.testing.assert_array_equal(out["embeddings"], scene["embeddings"])

    # One proposed voxel with zero offsets reads the image at its canonical pixel
    def test_single_voxel_degenerate(self):
        rng = np.random.default_rng(2)
        fmap = rng.normal(size=(5, 6, 4))
        scene = {
            "embeddings": rng.normal(size=(4, 4, 2, 4)),
            "fov_mask": np.ones((4, 4, 2), dtype=bool),
            "proposal": {"indices": np.array([[1, 2, 0]]), "canonical_pixels": np.array([[0.3, 0.6]])},
        }
        stage = degenerate_stage(4)
        out = voxel_proposal_layer(scene, [fmap], stage)
        q = scene["embeddings"][1, 2, 0][None, :]
        expected = residual_block(stage["block"], q, bilinear_sample(fmap, np.array([0.3, 0.6]))[None, :])
        np.testing.assert_allclose(out["embeddings"][1, 2, 0], expected[0], atol=1e-12)
        changed = np.any(out["embeddings"] != scene["embeddings"], axis=-1)
        assert changed.sum() == 1 and changed[1, 2, 0]

    # Only proposed voxels change on a real proposal
    def test_locality(self):
        rng = np.random.default_rng(3)
        scene = init_scene(GRID, CAMERA, plane_depth(2.5), rng.normal(size=(8, 8, 4, 4)))
        stage = degenerate_stage(4)
        stage["attn"]["offset_net"]["bias"] = rng.normal(size=stage["attn"]["offset_net"]["bias"].shape)
        out = voxel_proposal_layer(scene, [rng.normal(size=(12, 16, 4))], stage)
        proposed = np.zeros((8, 8, 4), dtype=bool)
        proposed[tuple(scene["proposal"]["indices"].T)] = True
        np.testing.assert_array_equal(out["embeddings"][~proposed], scene["embeddings"][~proposed])
        assert np.all(np.any(out["embeddings"][proposed] != scene["embeddings"][proposed], axis=-1))


class TestProjectFeatures:
    # Visible voxels gain the mean of the sampled levels; others are untouched
    def test_projection(self):
        rng = np.random.default_rng(4)
        scene = init_scene(GRID, CAMERA, plane_depth(2.5), rng.normal(size=(8, 8, 4, 3)))
        levels = [rng.normal(size=(12, 16, 3)), rng.normal(size=(6, 8, 3))]
        out = project_features(scene, levels, CAMERA, GRID)
        mask = scene["fov_mask"]
        np.testing.assert_array_equal(out["embeddings"][~mask], scene["embeddings"][~mask])

        idx = tuple(np.argwhere(mask)[0])
        pixel, _, _ = project_points(CAMERA, voxel_center_coords(GRID)[idx][None, :])
        lifted = np.mean([bilinear_sample(level, pixel[0]) for level in levels], axis=0)
        np.testing.assert_allclose(out["embeddings"][idx], scene["embeddings"][idx] + lifted, atol=1e-12)
