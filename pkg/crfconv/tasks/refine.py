from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from crfconv.core.crf_discrete import discrete_crf_infer, label_compatibility, mean_iou, validate_probabilities
from crfconv.core.errors import ShapeMismatchError, UnsupportedConfigurationError
from crfconv.schemas.config import RunConfig
from crfconv.tasks.common import build_graph, guide_features, load_input, output_path
from crfconv.utils.storage import read_kernel_mixture, read_matrix, write_table

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RefineSummary:
    num_points: int
    num_labels: int
    changed: int
    mean_iou: float | None = None


def refine_labels(cfg: RunConfig) -> RefineSummary:
    loaded = load_input(cfg)
    cloud = loaded.cloud
    if cfg.input.probabilities is not None:
        p = read_matrix(cfg.input.probabilities)
    elif loaded.planted is not None:
        p = loaded.planted.probabilities
    else:
        raise UnsupportedConfigurationError("refine-labels needs input.probabilities for a file input")
    p = validate_probabilities(p)
    if p.shape[0] != cloud.num_points:
        raise ShapeMismatchError(f"probabilities have {p.shape[0]} rows for {cloud.num_points} points")
    num_labels = p.shape[1]
    if cfg.discrete.labels is not None and cfg.discrete.labels != num_labels:
        raise ShapeMismatchError(f"discrete.labels is {cfg.discrete.labels}, probabilities have {num_labels} columns")

    graph = build_graph(cfg.graph, cloud)
    features = guide_features(cloud, cfg.discrete.guide)
    compat = label_compatibility(cfg.discrete.compat, num_labels, cfg.discrete.compat_file)
    weights = np.zeros(graph.num_edges) if cfg.discrete.zero_kernel else None
    mix = read_kernel_mixture(cfg.discrete.kernel_file) if cfg.discrete.kernel_file is not None else None
    refined = discrete_crf_infer(p, features, graph, mix, compat, cfg.discrete.steps, weights)

    labels = refined.hard_labels()
    write_table(output_path(cfg, cfg.output.probabilities), [f"p{k}" for k in range(num_labels)], refined.q.tolist())
    write_table(output_path(cfg, cfg.output.labels), ["label"], [(int(label),) for label in labels])
    changed = int(np.count_nonzero(labels != np.argmax(p, axis=1)))

    score = None
    if loaded.planted is not None and cfg.input.probabilities is None:
        _, score = mean_iou(labels, loaded.planted.truth, num_labels)
        _, before = mean_iou(np.argmax(p, axis=1), loaded.planted.truth, num_labels)
        logger.info("mIoU on planted labels: %.4f before, %.4f after refinement", before, score)
    logger.info("refinement changed %d of %d labels", changed, cloud.num_points)
    return RefineSummary(cloud.num_points, num_labels, changed, score)
