"""
Brute-force reference implementations.

Each oracle evaluates its definition with explicit loops over pixels, voxels,
queries, heads or samples, using only the single-point primitives. They are
slow on purpose and shared by the test suite and ``voxquery check``.
"""

import itertools

import numpy as np

from ..attention import init_deformable, init_dot_product
from ..geometry import lift_pixel, world_to_image
from ..numerics import bilinear_sample, trilinear_sample
from ..validation import (IGNORE_LABEL, CameraModel, DepthMap,
                          VoxelGridSpec)

# ============ Geometry ============


def fov_mask_oracle(cam: CameraModel, grid: VoxelGridSpec) -> np.ndarray:
    mask = np.zeros(tuple(grid["dims"]), dtype=bool)
    for idx in np.ndindex(*grid["dims"]):
        center = grid["origin"] + (np.array(idx) + 0.5) * grid["voxel_size"]
        projected = world_to_image(cam, center)
        if projected is not None:
            pixel, _ = projected
            mask[idx] = bool(np.all((pixel >= 0.0) & (pixel <= 1.0)))
    return mask


def proposal_oracle(
    cam: CameraModel,
    grid: VoxelGridSpec,
    depth: DepthMap,
    order: np.ndarray | None = None,
) -> set[tuple[int, int, int]]:
    """
    Lift and bin one pixel at a time, optionally in a shuffled ``order`` of flat
    pixel indices.
    """
    height, width = depth["values"].shape
    order = np.arange(height * width) if order is None else order
    proposed = set()
    for flat in order:
        row, col = divmod(int(flat), width)
        z = depth["values"][row, col]
        if not (depth["valid"][row, col] and np.isfinite(z) and z > 0):
            continue
        x_w = lift_pixel(cam, np.array([float(col), float(row)]), float(z))
        idx = tuple(int(i) for i in np.floor((x_w - grid["origin"]) / grid["voxel_size"]))
        if all(0 <= i < n for i, n in zip(idx, grid["dims"])):
            proposed.add(idx)
    return proposed  # type: ignore


def ray_box_depth_oracle(
    cam: CameraModel, box_min: np.ndarray, box_max: np.ndarray
) -> np.ndarray:
    """
    Camera depth of the first intersection of every pixel ray with an
    axis-aligned box (slab method), NaN on a miss.
    """
    width, height = cam["image_size"]
    center = -cam["rotation"].T @ cam["translation"]
    K_inv = np.linalg.inv(cam["intrinsics"])
    depth = np.full((height, width), np.nan)
    for row, col in itertools.product(range(height), range(width)):
        # direction with unit camera depth, so the ray parameter is the depth
        direction = cam["rotation"].T @ (K_inv @ np.array([col, row, 1.0]))
        if np.any((direction == 0) & ((center < box_min) | (center > box_max))):
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            t0 = (box_min - center) / direction
            t1 = (box_max - center) / direction
        near = np.nanmax(np.minimum(t0, t1))
        far = np.nanmin(np.maximum(t0, t1))
        if near <= far and far > 0:
            depth[row, col] = max(near, 0.0)
    return depth


def first_hit_depth_oracle(
    labels: np.ndarray, grid: VoxelGridSpec, cam: CameraModel, pixels: list[tuple[int, int]]
) -> np.ndarray:
    """
    Camera depth at which the ray of each (row, col) pixel first enters any
    occupied voxel, by intersecting it with every occupied voxel box; NaN on a miss.
    """
    occupied = np.argwhere(labels != 0)
    box_min = grid["origin"] + occupied * grid["voxel_size"]
    box_max = box_min + grid["voxel_size"]
    center = -cam["rotation"].T @ cam["translation"]
    K_inv = np.linalg.inv(cam["intrinsics"])
    depth = np.full(len(pixels), np.nan)
    for i, (row, col) in enumerate(pixels):
        direction = cam["rotation"].T @ (K_inv @ np.array([col, row, 1.0]))
        with np.errstate(divide="ignore", invalid="ignore"):
            t0 = (box_min - center) / direction
            t1 = (box_max - center) / direction
        outside = (direction == 0) & ((center < box_min) | (center > box_max))
        near = np.nanmax(np.minimum(t0, t1), axis=1)
        far = np.nanmin(np.maximum(t0, t1), axis=1)
        hit = (near <= far) & (far > 0) & ~outside.any(axis=1)
        if hit.any():
            depth[i] = max(near[hit].min(), 0.0)
    return depth


# ============ Attention ============


def _apply(m: dict, x: np.ndarray) -> np.ndarray:
    return np.array(
        [sum(m["weight"][j, i] * x[i] for i in range(x.shape[0])) + m["bias"][j] for j in range(m["bias"].shape[0])]
    )


def _softmax_loop(logits: list[float]) -> list[float]:
    top = max(logits)
    exps = [np.exp(v - top) for v in logits]
    total = sum(exps)
    return [e / total for e in exps]


def deformable_attn_oracle(
    params: dict, queries: np.ndarray, ref_points: np.ndarray, levels: list[np.ndarray]
) -> np.ndarray:
    """
    Deformable attention, one query, head, level and sample at a time.
    """
    ndim, heads = params["ndim"], params["heads"]
    n_levels, n_points = params["levels"], params["sampling_points"]
    dim = queries.shape[1]
    head_dim = dim // heads
    sample = bilinear_sample if ndim == 2 else trilinear_sample
    projected = [
        np.apply_along_axis(lambda f: _apply(params["value_proj"], f), -1, level)
        for level in levels
    ]

    out = np.zeros_like(queries, dtype=np.float64)
    for n, query in enumerate(queries):
        offsets = _apply(params["offset_net"], query)
        logits = _apply(params["weight_net"], query)
        concat = np.zeros(dim)
        for h in range(heads):
            block = [float(logits[(h * n_levels + l) * n_points + k]) for l in range(n_levels) for k in range(n_points)]
            weights = _softmax_loop(block)
            for l, level in enumerate(projected):
                extents = level.shape[:ndim][::-1] if ndim == 2 else level.shape[:ndim]
                head_values = level[..., h * head_dim : (h + 1) * head_dim]
                for k in range(n_points):
                    start = (((h * n_levels + l) * n_points) + k) * ndim
                    location = np.array(
                        [
                            ref_points[n, a] + offsets[start + a] / max(extents[a] - 1, 1)
                            for a in range(ndim)
                        ]
                    )
                    concat[h * head_dim : (h + 1) * head_dim] += weights[l * n_points + k] * sample(
                        head_values, location
                    )
        out[n] = _apply(params["output_proj"], concat)
    return out


def cross_attn_oracle(params: dict, q: np.ndarray, k: np.ndarray, v: np.ndarray) -> np.ndarray:
    """
    Scaled dot-product attention, one query, head and key at a time.
    """
    heads = params["heads"]
    dim = q.shape[1]
    head_dim = dim // heads
    queries = [_apply(params["q_proj"], row) for row in q]
    keys = [_apply(params["k_proj"], row) for row in k]
    values = [_apply(params["v_proj"], row) for row in v]

    out = np.zeros((q.shape[0], dim))
    for m, query in enumerate(queries):
        concat = np.zeros(dim)
        for h in range(heads):
            part = slice(h * head_dim, (h + 1) * head_dim)
            scores = [float(np.dot(query[part], key[part])) / np.sqrt(head_dim) for key in keys]
            for weight, value in zip(_softmax_loop(scores), values):
                concat[part] += weight * value[part]
        out[m] = _apply(params["output_proj"], concat)
    return out


# ============ Prediction head ============


def conv3d_oracle(x: np.ndarray, conv: dict) -> np.ndarray:
    """
    Dilated 3x3x3 convolution with zero padding, one voxel and tap at a time.
    """
    kernel, d = conv["kernel"], int(conv["dilation"])
    out = np.zeros(x.shape[:3] + (kernel.shape[4],))
    for idx in np.ndindex(*x.shape[:3]):
        acc = conv["bias"].astype(np.float64).copy()
        for tap in itertools.product(range(3), repeat=3):
            src = tuple(i + d * (t - 1) for i, t in zip(idx, tap))
            if all(0 <= s < n for s, n in zip(src, x.shape[:3])):
                acc += x[src] @ kernel[tap]
        out[idx] = acc
    return out


def upsample_oracle(vol: np.ndarray, factor: int) -> np.ndarray:
    """
    Upsampling by evaluating ``trilinear_sample`` at every output voxel.
    """
    shape = tuple(factor * n for n in vol.shape[:3])
    out = np.zeros(shape + vol.shape[3:])
    for idx in np.ndindex(*shape):
        p = np.array([i / max(n - 1, 1) for i, n in zip(idx, shape)], dtype=np.float64)
        out[idx] = trilinear_sample(vol, p)
    return out


# ============ Losses and metrics ============


def affinity_oracle(p: np.ndarray, labels: np.ndarray, mode: str = "semantic") -> float:
    """
    Scene-class affinity loss evaluated term by term over flattened voxels.
    """
    probs = p.reshape(-1, p.shape[-1])
    y = labels.reshape(-1)
    keep = [i for i in range(y.shape[0]) if y[i] != IGNORE_LABEL]
    if mode == "geometric":
        rows = [[probs[i, 0], 1.0 - probs[i, 0]] for i in keep]
        truth = [int(y[i] != 0) for i in keep]
    else:
        rows = [list(probs[i]) for i in keep]
        truth = [int(y[i]) for i in keep]
    rows = [[min(max(v, 1e-8), 1.0 - 1e-8) for v in row] for row in rows]

    terms = []
    for c in range(len(rows[0])):
        positives = [row[c] for row, t in zip(rows, truth) if t == c]
        negatives = [row[c] for row, t in zip(rows, truth) if t != c]
        if not positives:
            continue
        precision = sum(positives) / (sum(positives) + sum(negatives))
        recall = sum(positives) / len(positives)
        term = -(np.log(precision) + np.log(recall))
        if negatives:
            term -= np.log(sum(1.0 - v for v in negatives) / len(negatives))
        terms.append(term)
    return float(sum(terms) / len(terms))


def cross_entropy_oracle(logits: np.ndarray, labels: np.ndarray, weights: np.ndarray) -> float:
    x = logits.reshape(-1, logits.shape[-1])
    y = labels.reshape(-1)
    losses = []
    for row, label in zip(x, y):
        if label == IGNORE_LABEL:
            continue
        p = _softmax_loop([float(v) for v in row])
        losses.append(-weights[label] * np.log(p[label]))
    return float(sum(losses) / len(losses))


def confusion_oracle(pred: np.ndarray, gt: np.ndarray, num_classes: int) -> np.ndarray:
    cm = np.zeros((num_classes, num_classes), dtype=np.int64)
    for p, g in zip(pred.reshape(-1), gt.reshape(-1)):
        if g != IGNORE_LABEL:
            cm[int(g), int(p)] += 1
    return cm


# ============ Random instances ============


def random_deformable_instance(
    rng: np.random.Generator, ndim: int, max_extent: int = 8
) -> tuple[dict, np.ndarray, np.ndarray, list[np.ndarray]]:
    """
    Random deformable attention parameters with non-trivial offsets and weights,
    plus queries, reference points and feature levels of extent <= ``max_extent``.
    """
    heads = int(rng.integers(1, 3))
    dim = heads * int(rng.integers(1, 4))
    n_levels = int(rng.integers(1, 3)) if ndim == 2 else 1
    n_points = int(rng.integers(1, 4))
    params = init_deformable(rng, dim, heads, n_levels, n_points, ndim)
    params["offset_net"]["weight"] = rng.normal(scale=0.5, size=params["offset_net"]["weight"].shape)
    params["offset_net"]["bias"] = rng.normal(scale=1.5, size=params["offset_net"]["bias"].shape)
    params["weight_net"]["weight"] = rng.normal(size=params["weight_net"]["weight"].shape)
    params["weight_net"]["bias"] = rng.normal(size=params["weight_net"]["bias"].shape)
    params["value_proj"]["bias"] = rng.normal(size=dim)
    params["output_proj"]["bias"] = rng.normal(size=dim)

    n_queries = int(rng.integers(1, 6))
    levels = [
        rng.normal(size=tuple(int(e) for e in rng.integers(1, max_extent + 1, ndim)) + (dim,))
        for _ in range(n_levels)
    ]
    return params, rng.normal(size=(n_queries, dim)), rng.uniform(-0.1, 1.1, (n_queries, ndim)), levels


def random_dot_product_instance(
    rng: np.random.Generator, max_extent: int = 8
) -> tuple[dict, np.ndarray, np.ndarray, np.ndarray]:
    heads = int(rng.integers(1, 3))
    dim = heads * int(rng.integers(1, 4))
    params = init_dot_product(rng, dim, heads)
    for name in ("q_proj", "k_proj", "v_proj", "output_proj"):
        params[name]["bias"] = rng.normal(size=dim)
    n_keys = int(rng.integers(1, max_extent + 1))
    return (
        params,
        rng.normal(size=(int(rng.integers(1, max_extent + 1)), dim)),
        rng.normal(size=(n_keys, dim)),
        rng.normal(size=(n_keys, dim)),
    )
