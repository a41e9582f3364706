"""
Command line entry point.

Subcommands
-----------
run
    Forward pass on the synthetic scene, writing logits and a report
check
    Invariant suite; exits 1 naming the first failed property
eval
    Metrics of a predicted grid against a ground-truth grid
export
    Argmax of a logit grid as a label or occupancy grid
gen
    Synthetic scene bundle, label grid and camera calibration

Usage errors, missing input files and invalid arguments exit 2.
"""

import argparse
import sys
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from loguru import logger
from pydantic import ValidationError

from ..data import (emit_report, generate_scene, load_grid, save_grid,
                    save_params, save_scene)
from ..errors import (ConfigError, DomainError, GridFormatError,
                      InvariantFailure, ShapeError)
from ..geometry import save_calibration
from ..losses import compute_metrics, confusion_matrix, predict_labels
from ..model import RunConfig, load_run_config
from .checks import PROPERTIES, require_all, run_suite
from .session import class_names, prepare_inputs, run_model

PARAMS_FILE = "params.h5"
EXPORT_FILE = "prediction.symv"
SCENE_FILE = "scene.h5"
LABELS_FILE = "labels.symv"
CALIBRATION_FILE = "camera.calib"


def load_config(args: argparse.Namespace) -> RunConfig:
    """
    Run configuration of ``--config`` with the command line overrides applied.
    """
    overrides = {"seed": args.seed} if args.seed is not None else {}
    rc = load_run_config(args.config, **overrides)
    output = {}
    if args.out is not None:
        output["dir"] = args.out
    if getattr(args, "params", None) is not None:
        output["params"] = args.params
    if output:
        rc = rc.model_copy(update={"output": rc.output.model_copy(update=output)})
    return rc


def cmd_run(args: argparse.Namespace) -> None:
    rc = load_config(args)
    scene, params = prepare_inputs(rc, progress=not args.quiet)
    result = run_model(rc, scene, params)
    logits = result["trace"]["logits"]

    out = rc.output.dir
    save_grid(logits.astype(np.float32), out / rc.output.logits)
    if rc.output.save_params:
        save_params(params, out / PARAMS_FILE)
    path = emit_report(
        result["losses"],
        result["metrics"],
        None,
        out / rc.output.report,
        info={"command": "run", "seed": rc.seed, "logits": "x".join(map(str, logits.shape))},
    )
    logger.info(f"Report written to {path}")


def cmd_check(args: argparse.Namespace) -> None:
    rc = load_config(args)
    results = run_suite(
        rc,
        wrong_gradient=args.inject_wrong_gradient,
        names=args.only,
        progress=not args.quiet,
        n_workers=args.workers,
    )
    for r in results:
        status = "pass" if r["passed"] else "FAIL"
        logger.info(f"{status} {r['name']} ({r['seconds']:.2f} s): {r['detail']}")
    emit_report(
        None,
        None,
        {r["name"]: r["passed"] for r in results},
        rc.output.dir / rc.output.report,
        info={"command": "check", "seed": rc.seed},
    )
    require_all(results)


def cmd_eval(args: argparse.Namespace) -> None:
    rc = load_config(args)
    pred, gt = load_grid(args.pred), load_grid(args.gt)
    if pred.ndim == 4:
        pred = predict_labels(pred)
    num_classes = rc.model.num_classes
    metrics = compute_metrics(confusion_matrix(pred, gt, num_classes), class_names(num_classes))
    path = emit_report(
        None,
        metrics,
        None,
        rc.output.dir / rc.output.report,
        info={"command": "eval", "pred": str(args.pred), "gt": str(args.gt)},
    )
    logger.info(f"IoU {metrics['iou']}, mIoU {metrics['miou']}; report written to {path}")


def cmd_export(args: argparse.Namespace) -> None:
    rc = load_config(args)
    source = args.logits if args.logits is not None else rc.output.dir / rc.output.logits
    logits = load_grid(source)
    if logits.ndim != 4:
        raise ShapeError(f"{source} holds labels, not logits")
    labels = predict_labels(logits)
    if args.occupancy:
        labels = (labels != 0).astype(np.uint8)
    dest = args.dest if args.dest is not None else rc.output.dir / EXPORT_FILE
    save_grid(labels, dest)
    logger.info(f"Exported {labels.shape} grid to {dest}")


def cmd_gen(args: argparse.Namespace) -> None:
    rc = load_config(args)
    scene = generate_scene(rc, progress=not args.quiet)
    out = rc.output.dir
    save_scene(scene, out / SCENE_FILE)
    save_grid(scene["labels"], out / LABELS_FILE)
    save_calibration(scene["camera"], out / CALIBRATION_FILE)
    logger.info(f"Scene bundle written to {out}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="TOML run configuration")
    common.add_argument("--seed", type=int, default=None, help="Override the configured seed")
    common.add_argument("--out", type=Path, default=None, help="Override the output directory")
    common.add_argument("--quiet", action="store_true", help="Warnings only, no progress bars")

    parser = argparse.ArgumentParser(
        prog="voxquery",
        description="Instance-query semantic scene completion on synthetic desk-scale scenes.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", parents=[common], help="Forward pass, losses and metrics")
    run.add_argument("--params", type=Path, default=None, help="Saved parameter set (h5)")
    run.set_defaults(handler=cmd_run)

    check = commands.add_parser("check", parents=[common], help="Run the invariant suite")
    check.add_argument(
        "--inject-wrong-gradient",
        "--negative-control",
        dest="inject_wrong_gradient",
        action="store_true",
        help="Double every analytic gradient; the gradients property must fail",
    )
    check.add_argument("--only", nargs="+", choices=list(PROPERTIES), default=None, help="Properties to run")
    check.add_argument("--workers", type=int, default=None, help="Threads for the suite")
    check.add_argument("--params", type=Path, default=None, help="Saved parameter set (h5)")
    check.set_defaults(handler=cmd_check)

    evaluate = commands.add_parser("eval", parents=[common], help="Metrics of a prediction")
    evaluate.add_argument("--pred", type=Path, required=True, help="Predicted label or logit grid")
    evaluate.add_argument("--gt", type=Path, required=True, help="Ground-truth label grid")
    evaluate.set_defaults(handler=cmd_eval)

    export = commands.add_parser("export", parents=[common], help="Argmax of a logit grid")
    export.add_argument("--logits", type=Path, default=None, help="Logit grid, defaults to the run output")
    export.add_argument("--dest", type=Path, default=None, help="Destination grid file")
    export.add_argument("--occupancy", action="store_true", help="Write occupied/empty instead of classes")
    export.set_defaults(handler=cmd_export)

    gen = commands.add_parser("gen", parents=[common], help="Write a synthetic scene bundle")
    gen.set_defaults(handler=cmd_gen)
    return parser


@logger.catch(reraise=True)
def dispatch(handler: Callable[[argparse.Namespace], None], args: argparse.Namespace) -> int:
    try:
        handler(args)
    except (
        FileNotFoundError,
        ConfigError,
        DomainError,
        GridFormatError,
        ShapeError,
        ValidationError,
    ) as e:
        logger.error(str(e))
        return 2
    except InvariantFailure as e:
        logger.error(f"Property {e.name} failed: {e.detail}")
        return 1
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logger.enable("voxquery")
    logger.remove()
    logger.add(sys.stderr, level="WARNING" if args.quiet else "INFO")
    return dispatch(args.handler, args)
