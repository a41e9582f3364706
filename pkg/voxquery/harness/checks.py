"""
Invariant suite behind ``voxquery check``.

Each property takes a ``CheckContext`` and returns a one-line summary when it
holds, or raises ``InvariantFailure`` naming itself. Properties share only
read-only inputs, so the suite runs them concurrently.
"""

import time
from typing import Callable, Final, Optional, TypedDict

import numpy as np
from loguru import logger
from tqdm import tqdm

from ..attention import (cross_attn, deformable_attn_2d, deformable_attn_3d,
                         init_deformable, self_attn)
from ..data import decode_grid, encode_grid, generate_scene
from ..errors import ConfigError, InvariantFailure
from ..futils import pmap
from ..geometry import (compute_fov_mask, denormalize_pixels, lift_pixels,
                        look_at_camera, project_points, propose_voxels)
from ..losses import (compute_metrics, confusion_matrix, scene_class_affinity,
                      total_loss, voxel_softmax, weighted_cross_entropy)
from ..model import (STAGE_NAMES, GridConfig, ModelConfig, RunConfig,
                     StageFlags, build_instance_queries, decoder_layer,
                     init_params, trace_pipeline)
from ..numerics import (bilinear_sample, bilinear_sample_grad,
                        finite_diff_check, trilinear_sample,
                        trilinear_sample_grad)
from ..validation import (IGNORE_LABEL, CameraModel, ModelParams,
                          SyntheticScene)
from .oracles import (affinity_oracle, confusion_oracle, cross_attn_oracle,
                      deformable_attn_oracle, first_hit_depth_oracle,
                      fov_mask_oracle, proposal_oracle,
                      random_deformable_instance, random_dot_product_instance)
from .session import class_names, prepare_inputs

GRADIENT_TOLERANCE: Final[float] = 1e-5
GRADIENT_POINTS: Final[int] = 50
ORACLE_INSTANCES: Final[int] = 100
PERMUTATIONS: Final[int] = 20
ROUND_TRIP_POINTS: Final[int] = 10_000
DEPTH_SAMPLES: Final[int] = 256


class CheckContext(TypedDict):
    config: RunConfig
    scene: SyntheticScene
    params: ModelParams
    wrong_gradient: bool
    """Double every analytic gradient before checking it."""


class CheckResult(TypedDict):
    name: str
    passed: bool
    detail: str
    seconds: float


def _require(name: str, condition: bool, detail: str) -> None:
    if not condition:
        raise InvariantFailure(name, detail)


def _camera(rc: RunConfig) -> CameraModel:
    return look_at_camera(
        np.array(rc.camera.position, dtype=np.float64),
        rc.camera.image_size,
        rc.camera.focal,
        rc.camera.yaw,
    )


def _small_config(rc: RunConfig) -> RunConfig:
    """
    Reduced run covering the same volume as ``rc`` with a coarser grid, a
    smaller image and narrow embeddings, for properties that need many
    forward passes.
    """
    grid = rc.model.grid
    dims = tuple(max(1, n // 4) for n in grid.dims)
    voxel = tuple(v * n / m for v, n, m in zip(grid.voxel_size, grid.dims, dims))
    model = rc.model.model_copy(
        update={
            "num_queries": 4,
            "embed_dim": 8,
            "heads": 2,
            "sampling_points": 2,
            "decoder_layers": 2,
            "encoder_layers": min(rc.model.encoder_layers, 1),
            "feature_levels": 2,
            "grid": GridConfig(origin=grid.origin, voxel_size=voxel, dims=dims),  # type: ignore
        }
    )
    width, height = rc.camera.image_size
    camera = rc.camera.model_copy(
        update={
            "image_size": (max(width // 4, 2), max(height // 4, 2)),
            "focal": rc.camera.focal / 4,
        }
    )
    scene = rc.scene.model_copy(update={"feature_channels": None})
    return rc.model_copy(update={"model": model, "camera": camera, "scene": scene})


# ============ Geometry ============


def geometry_round_trip(ctx: CheckContext) -> str:
    name = "geometry_round_trip"
    rc = ctx["config"]
    rng = np.random.default_rng(rc.seed)
    cam = _camera(rc)
    width, height = cam["image_size"]
    pixels = rng.uniform([0.0, 0.0], [width - 1, height - 1], (ROUND_TRIP_POINTS, 2))
    points = lift_pixels(cam, pixels, rng.uniform(0.5, 30.0, ROUND_TRIP_POINTS))
    projected, depths, in_front = project_points(cam, points)
    _require(name, bool(in_front.all()), "frustum points projected behind the camera")
    error = float(np.max(np.abs(lift_pixels(cam, denormalize_pixels(cam, projected), depths) - points)))
    _require(name, error < 1e-9, f"lift after project is off by {error:.3g} m")
    return f"max error {error:.3g} m over {ROUND_TRIP_POINTS} points"


def fov_proposal_oracles(ctx: CheckContext) -> str:
    name = "fov_proposal_oracles"
    grid = ctx["config"].model.grid.spec()
    cam = ctx["scene"]["camera"]
    mask = compute_fov_mask(cam, grid)
    _require(name, bool(np.array_equal(mask, fov_mask_oracle(cam, grid))), "FOV mask differs from the oracle")
    # random depths keep lifted points off voxel faces
    rng = np.random.default_rng(ctx["config"].seed)
    valid = ctx["scene"]["depth"]["valid"]
    depth = {"values": rng.uniform(1.0, 12.0, valid.shape), "valid": valid}
    proposal = propose_voxels(cam, grid, depth)
    proposed = {tuple(int(i) for i in idx) for idx in proposal["indices"]}
    order = rng.permutation(valid.size)
    _require(name, proposed == proposal_oracle(cam, grid, depth, order), "proposal differs from the oracle")
    return f"{int(mask.sum())} visible and {len(proposed)} proposed voxels"


def depth_render(ctx: CheckContext) -> str:
    name = "depth_render"
    scene = ctx["scene"]
    grid = ctx["config"].model.grid
    label_grid = {
        "origin": np.array(grid.origin, dtype=np.float64),
        "voxel_size": np.array(grid.voxel_size, dtype=np.float64) / ctx["config"].model.upsample_factor,
        "dims": scene["labels"].shape,
    }
    height, width = scene["depth"]["values"].shape
    rng = np.random.default_rng(ctx["config"].seed)
    flat = rng.choice(height * width, size=min(DEPTH_SAMPLES, height * width), replace=False)
    pixels = [divmod(int(i), width) for i in flat]
    expected = first_hit_depth_oracle(scene["labels"], label_grid, scene["camera"], pixels)
    rows, cols = np.array(pixels).T
    valid = scene["depth"]["valid"][rows, cols]
    values = scene["depth"]["values"][rows, cols]
    error = float(np.max(np.abs(values[valid] - expected[valid]), initial=0.0))
    _require(name, error < 1e-6, f"rendered depth is off by {error:.3g} m")
    missed = expected[~valid]
    _require(name, bool(np.all(np.isnan(missed) | (missed == 0))), "invalid pixel whose ray hits an occupied voxel")
    return f"max error {error:.3g} m over {len(pixels)} pixels"


# ============ Attention ============


def attention_oracles(ctx: CheckContext) -> str:
    name = "attention_oracles"
    rng = np.random.default_rng(ctx["config"].seed + 1)
    errors = {"deformable_2d": 0.0, "deformable_3d": 0.0, "cross": 0.0, "self": 0.0}
    for _ in range(ORACLE_INSTANCES):
        params, q, refs, levels = random_deformable_instance(rng, 2)
        out = deformable_attn_2d(params, q, refs, levels)
        errors["deformable_2d"] = max(errors["deformable_2d"], float(np.max(np.abs(out - deformable_attn_oracle(params, q, refs, levels)))))

        params, q, refs, levels = random_deformable_instance(rng, 3)
        out = deformable_attn_3d(params, q, refs, levels[0])
        errors["deformable_3d"] = max(errors["deformable_3d"], float(np.max(np.abs(out - deformable_attn_oracle(params, q, refs, levels)))))

        params, q, k, v = random_dot_product_instance(rng)
        errors["cross"] = max(errors["cross"], float(np.max(np.abs(cross_attn(params, q, k, v) - cross_attn_oracle(params, q, k, v)))))
        errors["self"] = max(errors["self"], float(np.max(np.abs(self_attn(params, q) - cross_attn_oracle(params, q, q, q)))))
    for kind, error in errors.items():
        _require(name, error < 1e-10, f"{kind} attention differs from the oracle by {error:.3g}")
    return f"max difference {max(errors.values()):.3g} over {ORACLE_INSTANCES} instances each"


def _degenerate_params(rng: np.random.Generator, dim: int, ndim: int) -> dict:
    params = init_deformable(rng, dim, 1, 1, 1, ndim)
    params["offset_net"]["bias"] = np.zeros_like(params["offset_net"]["bias"])
    params["value_proj"] = {"weight": np.eye(dim), "bias": np.zeros(dim)}
    params["output_proj"] = {"weight": np.eye(dim), "bias": np.zeros(dim)}
    return params


def degenerate_reduction(ctx: CheckContext) -> str:
    name = "degenerate_reduction"
    rng = np.random.default_rng(ctx["config"].seed + 2)
    error = 0.0
    for _ in range(10):
        fmap, vol = rng.normal(size=(5, 7, 4)), rng.normal(size=(4, 5, 3, 4))
        refs_2d, refs_3d = rng.uniform(size=(6, 2)), rng.uniform(size=(6, 3))
        queries = rng.normal(size=(6, 4))
        out_2d = deformable_attn_2d(_degenerate_params(rng, 4, 2), queries, refs_2d, [fmap])
        out_3d = deformable_attn_3d(_degenerate_params(rng, 4, 3), queries, refs_3d, vol)
        error = max(
            error,
            float(np.max(np.abs(out_2d - np.stack([bilinear_sample(fmap, r) for r in refs_2d])))),
            float(np.max(np.abs(out_3d - np.stack([trilinear_sample(vol, r) for r in refs_3d])))),
        )
    _require(name, error < 1e-12, f"zero-offset attention differs from interpolation by {error:.3g}")
    return f"max difference {error:.3g}"


# ============ Gradients and losses ============


def _off_lattice(rng: np.random.Generator, extents: tuple[int, ...]) -> np.ndarray:
    """
    Uniform normalised point at least 1e-3 texels away from every lattice plane.
    """
    while True:
        p = rng.uniform(0.01, 0.99, len(extents))
        scaled = p * (np.array(extents) - 1)
        if np.min(np.abs(scaled - np.round(scaled))) > 1e-3:
            return p


def _random_probs(rng: np.random.Generator, shape: tuple[int, ...], classes: int) -> np.ndarray:
    p = rng.uniform(0.05, 1.0, shape + (classes,))
    return p / p.sum(axis=-1, keepdims=True)


def _random_labels(rng: np.random.Generator, shape: tuple[int, ...], classes: int) -> np.ndarray:
    labels = rng.integers(0, classes, shape).astype(np.uint8)
    labels.reshape(-1)[-1] = IGNORE_LABEL
    return labels


def gradients(ctx: CheckContext) -> str:
    name = "gradients"
    rng = np.random.default_rng(ctx["config"].seed + 3)
    scale = 2.0 if ctx["wrong_gradient"] else 1.0
    errors = dict.fromkeys(["bilinear", "trilinear", "cross_entropy", "affinity_semantic", "affinity_geometric"], 0.0)

    fmap, vol = rng.normal(size=(5, 6, 3)), rng.normal(size=(4, 5, 3, 3))
    for _ in range(GRADIENT_POINTS):
        w = rng.normal(size=3)
        p = _off_lattice(rng, (6, 5))
        grad = scale * (w @ bilinear_sample_grad(fmap, p))
        errors["bilinear"] = max(errors["bilinear"], finite_diff_check(lambda x: w @ bilinear_sample(fmap, x), p, grad))

        p = _off_lattice(rng, (4, 5, 3))
        grad = scale * (w @ trilinear_sample_grad(vol, p))
        errors["trilinear"] = max(errors["trilinear"], finite_diff_check(lambda x: w @ trilinear_sample(vol, x), p, grad))

        logits, labels = rng.normal(size=(2, 2, 2, 4)), _random_labels(rng, (2, 2, 2), 4)
        weights = rng.uniform(0.5, 2.0, 4)
        loss_fn = lambda x: weighted_cross_entropy(x, labels, weights)[0]
        grad = scale * weighted_cross_entropy(logits, labels, weights)[1]
        errors["cross_entropy"] = max(errors["cross_entropy"], finite_diff_check(loss_fn, logits, grad))

        probs, labels = _random_probs(rng, (6,), 3), _random_labels(rng, (6,), 3)
        for mode in ("semantic", "geometric"):
            loss_fn = lambda x: scene_class_affinity(x, labels, mode)[0]
            grad = scale * scene_class_affinity(probs, labels, mode)[1]
            key = f"affinity_{mode}"
            errors[key] = max(errors[key], finite_diff_check(loss_fn, probs, grad))

    for kind, error in errors.items():
        _require(name, error < GRADIENT_TOLERANCE, f"{kind} relative error {error:.3g} exceeds {GRADIENT_TOLERANCE}")

    # the checker itself must reject a doubled gradient of 0.5 |x|^2
    x = rng.uniform(1.0, 3.0, 8)
    control = finite_diff_check(lambda a: 0.5 * np.sum(a**2), x, 2 * x)
    _require(name, abs(control - 1.0) < 1e-3, f"doubled gradient not detected (error {control:.3g})")
    return f"max relative error {max(errors.values()):.3g} at {GRADIENT_POINTS} points each, control {control:.3g}"


def loss_anchor(ctx: CheckContext) -> str:
    name = "loss_anchor"
    probs, labels = np.array([[0.8, 0.2], [0.4, 0.6]]), np.array([0, 1], dtype=np.uint8)
    anchor = scene_class_affinity(probs, labels)[0]
    _require(name, abs(anchor - 1.0805) < 1e-4, f"two-voxel affinity loss is {anchor!r}")
    _require(name, abs(anchor - affinity_oracle(probs, labels)) < 1e-12, "two-voxel affinity loss differs from the oracle")

    rng = np.random.default_rng(ctx["config"].seed + 4)
    classes = ctx["config"].model.num_classes
    labels = rng.integers(0, classes, (4, 4, 2)).astype(np.uint8)
    weights = np.ones(classes)
    perfect = total_loss(20.0 * np.eye(classes)[labels], [], labels, weights)
    for key in ("scal_geo", "scal_sem", "ce"):
        _require(name, 0 <= perfect[key] < 1e-5, f"{key} is {perfect[key]!r} on perfect logits")

    logits = rng.normal(size=(4, 4, 2, classes))
    report = total_loss(logits, [rng.normal(size=(2, 2, 1, classes)), logits], labels, weights)
    identity = report["scal_geo"] + report["scal_sem"] + report["ce"] + 0.5 * sum(report["aux"])
    _require(name, report["total"] == identity, "total loss is not the sum of its components")
    softmax_check = scene_class_affinity(voxel_softmax(logits), labels, "geometric")[0]
    _require(name, report["scal_geo"] == softmax_check, "geometric component differs from a direct evaluation")
    return f"anchor {anchor:.6f}"


def metrics(ctx: CheckContext) -> str:
    name = "metrics"
    classes = ctx["config"].model.num_classes
    rng = np.random.default_rng(ctx["config"].seed + 5)
    labels = rng.integers(0, classes, (8, 8, 4)).astype(np.uint8)
    perfect = compute_metrics(confusion_matrix(labels, labels, classes), class_names(classes))
    _require(name, perfect["iou"] == 1.0 and perfect["miou"] == 1.0, f"pred == gt gives {perfect['iou']}, {perfect['miou']}")

    gt = np.array([1, 1, 1, 1, 0], dtype=np.uint8)
    pred = np.array([1, 1, 0, 0, 1], dtype=np.uint8)
    occupancy = compute_metrics(confusion_matrix(pred, gt))["iou"]
    _require(name, occupancy == 0.4, f"two-of-five occupancy example gives {occupancy!r}")

    for _ in range(5):
        gt = rng.integers(0, classes, (6, 6, 3)).astype(np.uint8)
        gt[rng.uniform(size=gt.shape) < 0.1] = IGNORE_LABEL
        pred = rng.integers(0, classes, gt.shape).astype(np.uint8)
        cm = confusion_matrix(pred, gt, classes)
        counts = np.bincount(gt[gt != IGNORE_LABEL], minlength=classes)
        _require(name, bool(np.array_equal(cm.sum(axis=1), counts)), "confusion rows do not sum to class counts")
        _require(name, bool(np.array_equal(cm, confusion_oracle(pred, gt, classes))), "confusion matrix differs from the oracle")
    return "exact"


# ============ Pipeline ============


def fov_locality(ctx: CheckContext) -> str:
    name = "fov_locality"
    rc, scene = ctx["config"], ctx["scene"]
    trace = trace_pipeline(rc.model, scene["camera"], scene["depth"], scene["features"], ctx["params"])
    outside = ~trace["initial"]["fov_mask"]
    states = [trace["lifted"], *trace["scenes"]]
    for layer, (before, after) in enumerate(zip(states, states[1:])):
        _require(
            name,
            bool(np.array_equal(after["embeddings"][outside], before["embeddings"][outside])),
            f"decoder layer {layer} changed voxels outside the view",
        )
    if rc.model.lifting == "proposal":
        untouched = np.ones(outside.shape, dtype=bool)
        untouched[tuple(trace["initial"]["proposal"]["indices"].T)] = False
    else:
        untouched = outside
    _require(
        name,
        bool(np.array_equal(trace["lifted"]["embeddings"][untouched], trace["initial"]["embeddings"][untouched])),
        "lifting changed voxels it does not own",
    )
    expected = tuple(n * rc.model.upsample_factor for n in rc.model.grid.dims) + (rc.model.num_classes,)
    _require(name, trace["logits"].shape == expected, f"logits have shape {trace['logits'].shape}, expected {expected}")
    return f"{int(outside.sum())} voxels outside the view, logits {expected}"


def _small_case(ctx: CheckContext) -> tuple[ModelConfig, SyntheticScene]:
    small = _small_config(ctx["config"])
    return small.model, generate_scene(small)


def _run_small(config: ModelConfig, scene: SyntheticScene, params: ModelParams, instances=None):
    return trace_pipeline(config, scene["camera"], scene["depth"], scene["features"], params, instances)


def query_permutation(ctx: CheckContext) -> str:
    name = "query_permutation"
    config, scene = _small_case(ctx)
    config = config.model_copy(update={"query_mode": "learnable"})
    params = init_params(config, ctx["config"].seed)
    instances = build_instance_queries(config, params)
    base = _run_small(config, scene, params, instances)
    rng = np.random.default_rng(ctx["config"].seed + 6)
    worst = 0.0
    for _ in range(PERMUTATIONS):
        perm = rng.permutation(config.num_queries)
        permuted = {
            **instances,
            "embeddings": instances["embeddings"][perm],
            "ref_points_2d": instances["ref_points_2d"][perm],
        }
        trace = _run_small(config, scene, params, permuted)
        logits_error = float(np.max(np.abs(trace["logits"] - base["logits"])))
        query_error = float(np.max(np.abs(trace["instances"]["embeddings"] - base["instances"]["embeddings"][perm])))
        _require(name, logits_error < 1e-9, f"logits moved by {logits_error:.3g} under a query permutation")
        _require(name, query_error < 1e-9, f"instance outputs are not permuted alike ({query_error:.3g})")
        worst = max(worst, logits_error, query_error)
    return f"max difference {worst:.3g} over {PERMUTATIONS} permutations"


def stage_ablation(ctx: CheckContext) -> str:
    name = "stage_ablation"
    config, scene = _small_case(ctx)
    config = config.model_copy(update={"query_mode": "learnable"})
    params = init_params(config, ctx["config"].seed)
    trace = _run_small(config, scene, params)
    grid = config.grid.spec()
    scene_in, instances_in = trace["lifted"], trace["instances_in"]

    def layer(stages: StageFlags):
        return decoder_layer(
            scene_in, instances_in, trace["features"], scene["camera"], grid, scene["depth"], params["decoder"][0], stages
        )

    off = StageFlags(**dict.fromkeys(STAGE_NAMES, False))
    out_scene, out_instances = layer(off)
    _require(
        name,
        bool(np.array_equal(out_scene["embeddings"], scene_in["embeddings"]))
        and bool(np.array_equal(out_instances["embeddings"], instances_in["embeddings"])),
        "a layer without stages is not the identity",
    )
    for stage in STAGE_NAMES:
        only = off.model_copy(update={stage: True})
        out_scene, out_instances = layer(only)
        if stage.startswith("instance_"):
            _require(name, bool(np.array_equal(out_scene["embeddings"], scene_in["embeddings"])), f"{stage} alone changed the scene")
        else:
            _require(name, bool(np.array_equal(out_instances["embeddings"], instances_in["embeddings"])), f"{stage} alone changed the queries")

        without = StageFlags(**{s: s != stage for s in STAGE_NAMES})
        logits = _run_small(config.model_copy(update={"stages": without}), scene, params)["logits"]
        _require(name, bool(np.all(np.isfinite(logits))), f"pipeline without {stage} is not finite")

    for variant in ({"query_mode": "detached"}, {"query_mode": "none"}, {"lifting": "projection"}):
        logits = _run_small(config.model_copy(update=variant), scene, params)["logits"]
        _require(name, logits.shape == trace["logits"].shape and bool(np.all(np.isfinite(logits))), f"variant {variant} failed")
    return f"{len(STAGE_NAMES)} stages and 3 variants"


# ============ Files ============


def grid_round_trip(ctx: CheckContext) -> str:
    name = "grid_round_trip"
    rng = np.random.default_rng(ctx["config"].seed + 7)
    for _ in range(10):
        shape = tuple(int(n) for n in rng.integers(1, 65, 3))
        labels = rng.integers(0, 256, shape).astype(np.uint8)
        data = encode_grid(labels)
        _require(name, len(data) == 20 + labels.size, f"label file of {shape} has {len(data)} bytes")
        _require(name, bool(np.array_equal(decode_grid(data), labels)), f"labels of shape {shape} did not round-trip")

        logits = rng.normal(size=tuple(int(n) for n in rng.integers(1, 9, 4))).astype(np.float32)
        _require(name, bool(np.array_equal(decode_grid(encode_grid(logits)), logits)), f"logits of shape {logits.shape} did not round-trip")
    return "10 label and 10 logit grids"


PROPERTIES: Final[dict[str, Callable[[CheckContext], str]]] = {
    "geometry_round_trip": geometry_round_trip,
    "fov_proposal_oracles": fov_proposal_oracles,
    "depth_render": depth_render,
    "attention_oracles": attention_oracles,
    "degenerate_reduction": degenerate_reduction,
    "gradients": gradients,
    "loss_anchor": loss_anchor,
    "metrics": metrics,
    "fov_locality": fov_locality,
    "query_permutation": query_permutation,
    "stage_ablation": stage_ablation,
    "grid_round_trip": grid_round_trip,
}
"""Suite properties in report order."""


def evaluate(name: str, ctx: CheckContext) -> CheckResult:
    """
    Run one property, turning ``InvariantFailure`` into a failed result.
    """
    start = time.perf_counter()
    try:
        detail, passed = PROPERTIES[name](ctx), True
    except InvariantFailure as e:
        detail, passed = e.detail, False
    seconds = time.perf_counter() - start
    (logger.debug if passed else logger.error)(f"{name}: {'pass' if passed else 'FAIL'} ({detail}) in {seconds:.2f}s")
    return {"name": name, "passed": passed, "detail": detail, "seconds": seconds}


def run_suite(
    rc: RunConfig,
    wrong_gradient: bool = False,
    names: Optional[list[str]] = None,
    progress: bool = False,
    n_workers: Optional[int] = None,
) -> list[CheckResult]:
    """
    Run the invariant suite on the synthetic scene of ``rc``.

    Parameters
    ----------
    rc : RunConfig
        Run configuration; the scene, parameters and seeds come from it
    wrong_gradient : bool
        Negative control: double every analytic gradient so that the
        ``gradients`` property must fail
    names : list[str] | None
        Subset of ``PROPERTIES`` to run, all by default
    progress : bool
        Show a progress bar
    n_workers : int | None
        Threads, defaults to the number of CPUs

    Returns
    -------
    list[CheckResult]
        One result per property, in suite order

    Raises
    ------
    ConfigError
        If a requested property does not exist
    """
    selected = list(names) if names is not None else list(PROPERTIES)
    if unknown := [n for n in selected if n not in PROPERTIES]:
        raise ConfigError(f"Unknown properties {unknown}, choose from {list(PROPERTIES)}")

    scene, params = prepare_inputs(rc, progress=progress)
    ctx: CheckContext = {"config": rc, "scene": scene, "params": params, "wrong_gradient": wrong_gradient}
    with tqdm(total=len(selected), desc="Invariants", disable=not progress) as bar:

        def run_one(name: str) -> CheckResult:
            result = evaluate(name, ctx)
            bar.update()
            return result

        results = pmap(run_one, selected, n_workers=n_workers)
    logger.info(f"{sum(r['passed'] for r in results)} of {len(results)} properties hold")
    return results


def require_all(results: list[CheckResult]) -> None:
    """
    Raise ``InvariantFailure`` for the first failed property.
    """
    failed = next((r for r in results if not r["passed"]), None)
    if failed is not None:
        raise InvariantFailure(failed["name"], failed["detail"])
