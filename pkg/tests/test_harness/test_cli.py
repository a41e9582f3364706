import os
import sys

import numpy as np
import pytest
from pydantic import validate_call

dir_path = os.path.dirname(os.path.realpath(__file__))
sys.path.append(os.path.realpath(f"{dir_path}/../.."))

from voxquery.data import (load_grid, load_params, load_scene, parse_report,
                           save_grid)
from voxquery.errors import DomainError, InvariantFailure
from voxquery.geometry import load_calibration
from voxquery.harness import main
from voxquery.harness.cli import dispatch

SMALL = """
seed = 2

[model]
num_queries = 4
embed_dim = 8
decoder_layers = 2
encoder_layers = 1
heads = 2
sampling_points = 2
feature_levels = 3

[model.grid]
origin = [0.0, -1.6, 0.0]
dims = [8, 8, 4]

[scene]
num_boxes = 3
box_size = [0.4, 1.0]

[camera]
position = [-1.0, 0.0, 0.8]
focal = 16.0
image_size = [32, 24]

[output]
save_params = true
"""


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "small.toml"
    path.write_text(SMALL)
    return path


def labels(seed=0):
    return np.random.default_rng(seed).integers(0, 20, (6, 6, 3)).astype(np.uint8)


class TestRun:
    # A run writes logits, parameters and a report with finite losses
    def test_outputs(self, config, tmp_path):
        out = tmp_path / "out"
        assert main(["run", "--config", str(config), "--out", str(out), "--quiet"]) == 0
        assert load_grid(out / "logits.symv").shape == (16, 16, 8, 20)
        assert load_params(out / "params.h5")["decoder"]
        report = parse_report(out / "report.txt")
        assert report["info.command"] == "run"
        assert report["info.logits"] == "16x16x8x20"
        assert np.isfinite(report["loss.total"])

    # Two runs of the same configuration give byte-identical files
    def test_deterministic(self, config, tmp_path):
        for name in ("a", "b"):
            main(["run", "--config", str(config), "--out", str(tmp_path / name), "--quiet"])
        for file in ("logits.symv", "report.txt"):
            assert (tmp_path / "a" / file).read_bytes() == (tmp_path / "b" / file).read_bytes()

    # Saved parameters reproduce the run that wrote them
    def test_params(self, config, tmp_path):
        main(["run", "--config", str(config), "--out", str(tmp_path / "a"), "--quiet"])
        args = ["run", "--config", str(config), "--out", str(tmp_path / "b"), "--quiet"]
        main([*args, "--params", str(tmp_path / "a" / "params.h5")])
        assert (tmp_path / "a" / "logits.symv").read_bytes() == (tmp_path / "b" / "logits.symv").read_bytes()

    # The seed flag overrides the configuration
    def test_seed(self, config, tmp_path):
        main(["run", "--config", str(config), "--out", str(tmp_path), "--seed", "7", "--quiet"])
        assert parse_report(tmp_path / "report.txt")["info.seed"] == 7.0


class TestCheck:
    # The injected wrong gradient fails the gradient property with exit code 1
    @pytest.mark.parametrize("flag", ["--inject-wrong-gradient", "--negative-control"])
    def test_negative_control(self, config, tmp_path, flag):
        args = ["check", "--config", str(config), "--out", str(tmp_path), "--quiet"]
        assert main([*args, flag, "--only", "gradients", "grid_round_trip"]) == 1
        report = parse_report(tmp_path / "report.txt")
        assert report["invariant.gradients"] is False
        assert report["invariant.grid_round_trip"] is True

    # Properties that hold exit 0
    def test_pass(self, config, tmp_path):
        args = ["check", "--config", str(config), "--out", str(tmp_path), "--quiet"]
        assert main([*args, "--only", "gradients", "loss_anchor", "metrics"]) == 0
        assert all(v is True for k, v in parse_report(tmp_path / "report.txt").items() if k.startswith("invariant."))

    # Unknown properties are usage errors
    def test_unknown_property(self, config):
        with pytest.raises(SystemExit) as e:
            main(["check", "--config", str(config), "--only", "nonsense"])
        assert e.value.code == 2


class TestEval:
    # A prediction equal to the ground truth scores 1
    def test_perfect(self, tmp_path):
        save_grid(labels(), tmp_path / "gt.symv")
        assert main(["eval", "--pred", str(tmp_path / "gt.symv"), "--gt", str(tmp_path / "gt.symv"), "--out", str(tmp_path), "--quiet"]) == 0
        report = parse_report(tmp_path / "report.txt")
        assert report["metric.iou"] == 1.0
        assert report["metric.miou"] == 1.0

    # Logit grids are reduced by argmax before scoring
    def test_logits(self, tmp_path):
        gt = labels()
        save_grid(gt, tmp_path / "gt.symv")
        save_grid(np.eye(20, dtype=np.float32)[gt], tmp_path / "pred.symv")
        assert main(["eval", "--pred", str(tmp_path / "pred.symv"), "--gt", str(tmp_path / "gt.symv"), "--out", str(tmp_path), "--quiet"]) == 0
        assert parse_report(tmp_path / "report.txt")["metric.miou"] == 1.0

    # Missing files exit 2
    def test_missing(self, tmp_path):
        assert main(["eval", "--pred", str(tmp_path / "a.symv"), "--gt", str(tmp_path / "b.symv"), "--quiet"]) == 2

    # Mismatched grids exit 2
    def test_mismatch(self, tmp_path):
        save_grid(labels(), tmp_path / "gt.symv")
        save_grid(np.zeros((2, 2, 2), dtype=np.uint8), tmp_path / "pred.symv")
        assert main(["eval", "--pred", str(tmp_path / "pred.symv"), "--gt", str(tmp_path / "gt.symv"), "--quiet"]) == 2

    # Corrupted files exit 2
    def test_corrupted(self, tmp_path):
        (tmp_path / "gt.symv").write_bytes(b"nonsense")
        assert main(["eval", "--pred", str(tmp_path / "gt.symv"), "--gt", str(tmp_path / "gt.symv"), "--quiet"]) == 2

    # Both grids are required
    def test_usage(self, tmp_path):
        with pytest.raises(SystemExit) as e:
            main(["eval", "--pred", str(tmp_path / "a.symv")])
        assert e.value.code == 2


class TestExport:
    # The argmax of a logit grid becomes a label grid
    def test_labels(self, tmp_path):
        gt = labels(1)
        save_grid(np.eye(20, dtype=np.float32)[gt], tmp_path / "logits.symv")
        args = ["export", "--logits", str(tmp_path / "logits.symv"), "--out", str(tmp_path), "--quiet"]
        assert main(args) == 0
        np.testing.assert_array_equal(load_grid(tmp_path / "prediction.symv"), gt)

    # Occupancy export keeps only occupied and empty
    def test_occupancy(self, tmp_path):
        gt = labels(2)
        save_grid(np.eye(20, dtype=np.float32)[gt], tmp_path / "logits.symv")
        args = ["export", "--logits", str(tmp_path / "logits.symv"), "--dest", str(tmp_path / "occ.symv"), "--occupancy", "--quiet"]
        assert main(args) == 0
        np.testing.assert_array_equal(load_grid(tmp_path / "occ.symv"), (gt != 0).astype(np.uint8))

    # Label grids cannot be exported
    def test_labels_input(self, tmp_path):
        save_grid(labels(), tmp_path / "labels.symv")
        assert main(["export", "--logits", str(tmp_path / "labels.symv"), "--quiet"]) == 2


class TestGen:
    # The bundle, label grid and calibration describe the same scene
    def test_bundle(self, config, tmp_path):
        assert main(["gen", "--config", str(config), "--out", str(tmp_path), "--quiet"]) == 0
        scene = load_scene(tmp_path / "scene.h5")
        np.testing.assert_array_equal(load_grid(tmp_path / "labels.symv"), scene["labels"])
        camera = load_calibration(tmp_path / "camera.calib")
        np.testing.assert_array_equal(camera["intrinsics"], scene["camera"]["intrinsics"])
        assert camera["image_size"] == (32, 24)


class TestUsage:
    # Unknown flags exit 2
    def test_unknown_flag(self):
        with pytest.raises(SystemExit) as e:
            main(["run", "--bogus"])
        assert e.value.code == 2

    # A missing configuration file exits 2
    def test_missing_config(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "none.toml"), "--quiet"]) == 2

    # Invalid configuration values exit 2
    def test_invalid_config(self, tmp_path):
        (tmp_path / "bad.toml").write_text("[model]\nheads = 0\n")
        assert main(["gen", "--config", str(tmp_path / "bad.toml"), "--quiet"]) == 2


class TestDispatch:
    # Arguments outside a function's domain exit 2
    def test_domain_error(self):
        def handler(args):
            raise DomainError("Depths must be positive")

        assert dispatch(handler, None) == 2

    # Arguments rejected by validation exit 2
    def test_validation_error(self):
        @validate_call()
        def scale(factor: int) -> int:
            return factor

        assert dispatch(lambda args: scale("two"), None) == 2

    # Invariant failures exit 1 and clean runs exit 0
    def test_exit_codes(self):
        def failing(args):
            raise InvariantFailure("gradients", "mismatch")

        assert dispatch(failing, None) == 1
        assert dispatch(lambda args: None, None) == 0
