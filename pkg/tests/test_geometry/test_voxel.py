import os
import sys

import numpy as np
import pytest

dir_path = os.path.dirname(os.path.realpath(__file__))
sys.path.append(os.path.realpath(f"{dir_path}/../.."))

from voxquery.errors import ConfigError, ShapeError
from voxquery.geometry import (check_grid, compute_fov_mask, look_at_camera,
                               propose_voxels, refine_grid,
                               voxel_center_coords, world_to_grid_normalized,
                               world_to_voxel_index)
from voxquery.harness.oracles import fov_mask_oracle, proposal_oracle


def make_grid(origin=(0.0, 0.0, 0.0), voxel_size=(1.0, 1.0, 1.0), dims=(4, 4, 4)):
    return {
        "origin": np.array(origin, dtype=np.float64),
        "voxel_size": np.array(voxel_size, dtype=np.float64),
        "dims": dims,
    }


def plane_depth(cam, d):
    width, height = cam["image_size"]
    return {"values": np.full((height, width), d), "valid": np.ones((height, width), dtype=bool)}


class TestVoxelCenters:
    # A unit voxel at the origin has its centre at one half
    def test_single_voxel(self):
        np.testing.assert_array_equal(voxel_center_coords(make_grid(dims=(1, 1, 1)))[0, 0, 0], [0.5, 0.5, 0.5])

    # Normalised corners are 0 and 1
    def test_normalized_corners(self):
        coords = voxel_center_coords(make_grid(dims=(3, 5, 2)), normalized=True)
        np.testing.assert_array_equal(coords[0, 0, 0], [0.0, 0.0, 0.0])
        np.testing.assert_array_equal(coords[2, 4, 1], [1.0, 1.0, 1.0])

    # Centres follow the closed form on a random grid
    def test_matches_index_arithmetic(self):
        rng = np.random.default_rng(0)
        grid = make_grid(origin=rng.normal(size=3), voxel_size=rng.uniform(0.1, 1, 3), dims=(3, 4, 2))
        coords = voxel_center_coords(grid)
        for idx in np.ndindex(3, 4, 2):
            np.testing.assert_allclose(coords[idx], grid["origin"] + (np.array(idx) + 0.5) * grid["voxel_size"])

    # World centres map onto the normalised lattice
    def test_world_to_grid_normalized(self):
        grid = make_grid(origin=(-1.0, 2.0, 0.5), voxel_size=(0.5, 0.25, 1.0), dims=(5, 3, 4))
        np.testing.assert_allclose(
            world_to_grid_normalized(grid, voxel_center_coords(grid)),
            voxel_center_coords(grid, normalized=True),
            atol=1e-12,
        )

    # Points outside the grid clamp onto its boundary
    def test_world_to_grid_normalized_clamps(self):
        out = world_to_grid_normalized(make_grid(), np.array([[-10.0, 2.0, 100.0]]))
        assert out[0, 0] == 0.0 and out[0, 2] == 1.0

    # Binning is half-open
    def test_half_open_binning(self):
        index, inside = world_to_voxel_index(make_grid(), np.array([[1.0, 0.0, 3.999], [4.0, 0.0, 0.0]]))
        np.testing.assert_array_equal(index[0], [1, 0, 3])
        np.testing.assert_array_equal(inside, [True, False])

    # Refined grids keep the extent
    def test_refine_grid(self):
        grid = make_grid(voxel_size=(0.4, 0.4, 0.4), dims=(32, 32, 8))
        fine = refine_grid(grid, 2)
        assert fine["dims"] == (64, 64, 16)
        np.testing.assert_allclose(fine["voxel_size"] * fine["dims"], grid["voxel_size"] * grid["dims"])

    # Non-positive sizes are rejected
    def test_check_grid(self):
        with pytest.raises(ConfigError):
            check_grid(make_grid(voxel_size=(1.0, 0.0, 1.0)))


class TestFovMask:
    # Voxel on the optical axis in front of the camera is visible, behind is not
    def test_axis_and_behind(self):
        cam = look_at_camera(np.array([0.0, 0.0, 0.0]), (5, 5), 2.0)
        grid = make_grid(origin=(-2.0, -0.5, -0.5), dims=(4, 1, 1))
        mask = compute_fov_mask(cam, grid)
        np.testing.assert_array_equal(mask[:, 0, 0], [False, False, True, True])

    # Full grid agrees with the per-voxel projection loop
    def test_matches_oracle(self):
        cam = look_at_camera(np.array([-1.0, 0.0, 1.5]), (16, 12), 8.0, yaw=0.2)
        grid = make_grid(origin=(0.0, -3.2, 0.0), voxel_size=(0.4, 0.4, 0.4), dims=(16, 16, 4))
        np.testing.assert_array_equal(compute_fov_mask(cam, grid), fov_mask_oracle(cam, grid))


class TestProposeVoxels:
    # Depths landing outside the grid give an empty proposal
    def test_all_outside(self):
        cam = look_at_camera(np.array([0.0, 0.0, 0.0]), (5, 5), 2.0)
        proposal = propose_voxels(cam, make_grid(origin=(0.0, -2.0, -2.0)), plane_depth(cam, 50.0))
        assert proposal["indices"].shape == (0, 3)
        assert proposal["canonical_pixels"].shape == (0, 2)

    # A single valid pixel proposes exactly its voxel
    def test_single_pixel(self):
        cam = look_at_camera(np.array([0.0, 0.0, 0.0]), (5, 5), 2.0)
        depth = plane_depth(cam, 2.5)
        depth["valid"][:] = False
        depth["valid"][2, 2] = True
        proposal = propose_voxels(cam, make_grid(origin=(0.0, -2.0, -2.0)), depth)
        np.testing.assert_array_equal(proposal["indices"], [[2, 2, 2]])
        np.testing.assert_allclose(proposal["canonical_pixels"], [[0.4, 0.4]])

    # Dense plane agrees with the per-pixel lift-and-bin loop
    def test_plane_matches_oracle(self):
        cam = look_at_camera(np.array([-1.0, 0.0, 1.5]), (24, 18), 12.0)
        grid = make_grid(origin=(0.0, -3.2, 0.0), voxel_size=(0.4, 0.4, 0.4), dims=(16, 16, 8))
        depth = plane_depth(cam, 3.3)
        proposal = propose_voxels(cam, grid, depth)
        assert {tuple(i) for i in proposal["indices"].tolist()} == proposal_oracle(cam, grid, depth)

    # Pixel enumeration order does not change the proposed set
    def test_order_independent(self):
        rng = np.random.default_rng(3)
        cam = look_at_camera(np.array([-1.0, 0.0, 1.5]), (24, 18), 12.0)
        grid = make_grid(origin=(0.0, -3.2, 0.0), voxel_size=(0.4, 0.4, 0.4), dims=(16, 16, 8))
        depth = {"values": rng.uniform(1.0, 8.0, (18, 24)), "valid": rng.uniform(size=(18, 24)) > 0.3}
        proposed = {tuple(i) for i in propose_voxels(cam, grid, depth)["indices"].tolist()}
        assert proposed == proposal_oracle(cam, grid, depth, order=rng.permutation(18 * 24))

    # Canonical pixels always lie inside the image
    def test_canonical_pixels_inside(self):
        rng = np.random.default_rng(4)
        cam = look_at_camera(np.array([-1.0, 0.0, 1.5]), (24, 18), 12.0)
        grid = make_grid(origin=(-2.0, -3.2, 0.0), voxel_size=(0.4, 0.4, 0.4), dims=(20, 16, 8))
        depth = {"values": rng.uniform(0.2, 8.0, (18, 24)), "valid": np.ones((18, 24), dtype=bool)}
        pixels = propose_voxels(cam, grid, depth)["canonical_pixels"]
        assert np.all((pixels >= 0.0) & (pixels <= 1.0))

    # Moving camera and grid together keeps the proposed indices
    def test_rigid_translation_invariance(self):
        rng = np.random.default_rng(5)
        grid = make_grid(origin=(0.0, -3.2, 0.0), voxel_size=(0.4, 0.4, 0.4), dims=(16, 16, 8))
        depth = {"values": rng.uniform(1.0, 8.0, (18, 24)), "valid": np.ones((18, 24), dtype=bool)}
        shift = np.array([0.8, -1.2, 0.4])
        before = propose_voxels(look_at_camera(np.array([-1.0, 0.0, 1.5]), (24, 18), 12.0), grid, depth)
        moved_grid = {**grid, "origin": grid["origin"] + shift}
        after = propose_voxels(look_at_camera(np.array([-1.0, 0.0, 1.5]) + shift, (24, 18), 12.0), moved_grid, depth)
        np.testing.assert_array_equal(before["indices"], after["indices"])

    # A quarter turn of camera and grid about the vertical axis permutes the proposed indices
    def test_rigid_rotation_invariance(self):
        rng = np.random.default_rng(6)
        grid = make_grid(origin=(0.0, -3.2, 0.0), voxel_size=(0.4, 0.5, 0.4), dims=(16, 12, 8))
        depth = {"values": rng.uniform(1.0, 8.0, (18, 24)), "valid": np.ones((18, 24), dtype=bool)}
        position, yaw = np.array([-1.0, 0.2, 1.5]), 0.3
        quarter = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        (ox, oy, oz), (sx, sy, sz), (nx, ny, nz) = grid["origin"], grid["voxel_size"], grid["dims"]
        turned_grid = {
            "origin": np.array([-(oy + ny * sy), ox, oz]),
            "voxel_size": np.array([sy, sx, sz]),
            "dims": (ny, nx, nz),
        }
        before = propose_voxels(look_at_camera(position, (24, 18), 12.0, yaw), grid, depth)
        after = propose_voxels(look_at_camera(quarter @ position, (24, 18), 12.0, yaw + np.pi / 2), turned_grid, depth)
        assert len(before["indices"]) > 0
        i, j, k = before["indices"].T
        mapped = np.stack([ny - 1 - j, i, k], axis=1)
        order = np.lexsort(mapped.T[::-1])
        np.testing.assert_array_equal(after["indices"], mapped[order])
        np.testing.assert_allclose(after["canonical_pixels"], before["canonical_pixels"][order], atol=1e-9)

    # Depth maps of the wrong size are rejected
    def test_shape_mismatch(self):
        cam = look_at_camera(np.array([0.0, 0.0, 0.0]), (5, 5), 2.0)
        with pytest.raises(ShapeError):
            propose_voxels(cam, make_grid(), {"values": np.ones((4, 5)), "valid": np.ones((4, 5), dtype=bool)})
