"""
One pipeline run: synthetic inputs, parameters, forward pass, losses and metrics.
"""

from typing import TypedDict

import numpy as np
from loguru import logger

from ..data import generate_scene, load_params
from ..losses import (SEMANTIC_KITTI_CLASSES, class_weights_from_frequencies,
                      compute_metrics, confusion_matrix, label_frequencies,
                      predict_labels, total_loss)
from ..model import (RunConfig, build_instance_queries, init_params,
                     trace_pipeline)
from ..validation import (LossReport, MetricReport, ModelParams,
                          PipelineTrace, SyntheticScene)


class RunResult(TypedDict):
    scene: SyntheticScene
    params: ModelParams
    trace: PipelineTrace
    weights: np.ndarray
    losses: LossReport
    metrics: MetricReport


def prepare_inputs(
    rc: RunConfig, progress: bool = False
) -> tuple[SyntheticScene, ModelParams]:
    """
    Synthetic scene of the configuration and the model parameters, loaded
    from ``output.params`` when set and otherwise initialised from the seed.
    """
    scene = generate_scene(rc, progress=progress)
    if rc.output.params is not None:
        logger.info(f"Loading parameters from {rc.output.params}")
        params = load_params(rc.output.params)
    else:
        params = init_params(rc.model, rc.seed)
    return scene, params


def run_model(
    rc: RunConfig,
    scene: SyntheticScene,
    params: ModelParams,
    with_grad: bool = False,
) -> RunResult:
    """
    Forward pass on a synthetic scene followed by the training loss and the
    evaluation metrics against the scene labels.

    Class weights follow the label frequencies of the scene.
    """
    config = rc.model
    trace = trace_pipeline(
        config,
        scene["camera"],
        scene["depth"],
        scene["features"],
        params,
        build_instance_queries(config, params),
    )
    weights = class_weights_from_frequencies(label_frequencies(scene["labels"], config.num_classes))
    losses = total_loss(trace["logits"], trace["aux_logits"], scene["labels"], weights, with_grad=with_grad)
    metrics = compute_metrics(
        confusion_matrix(predict_labels(trace["logits"]), scene["labels"], config.num_classes),
        class_names(config.num_classes),
    )
    logger.info(
        f"Run finished: total loss {losses['total']:.6f}, IoU {metrics['iou']}, mIoU {metrics['miou']}"
    )
    return {
        "scene": scene,
        "params": params,
        "trace": trace,
        "weights": weights,
        "losses": losses,
        "metrics": metrics,
    }


def class_names(num_classes: int) -> tuple[str, ...]:
    """
    SemanticKITTI names for 20 classes, generic names otherwise.
    """
    if num_classes == len(SEMANTIC_KITTI_CLASSES):
        return SEMANTIC_KITTI_CLASSES
    return ("empty", *(f"class_{i}" for i in range(1, num_classes)))
