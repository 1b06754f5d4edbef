from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
from scipy.special import softmax

from crfconv.constants.defaults import PROBABILITY_FLOOR, PROBABILITY_ROW_TOLERANCE
from crfconv.core.errors import ProbabilityRowError, ShapeMismatchError
from crfconv.core.parallel import for_each_chunk
from crfconv.models.cloud import FloatArray, IndexArray, NeighborGraph
from crfconv.models.enums.labels import CompatPreset
from crfconv.models.labels import KernelMixture, LabelCompatibility, LabelField
from crfconv.utils.storage import read_matrix

logger = logging.getLogger(__name__)


def validate_probabilities(p: FloatArray, tol: float = PROBABILITY_ROW_TOLERANCE) -> FloatArray:
    """Check that each row is a probability vector; the first offending row is reported 0-based."""
    p = np.atleast_2d(np.asarray(p, dtype=np.float64))
    finite = np.all(np.isfinite(p), axis=1)
    negative = np.any(p < 0, axis=1)
    off_sum = np.abs(p.sum(axis=1) - 1.0) > tol
    bad = ~finite | negative | off_sum
    if np.any(bad):
        row = int(np.argmax(bad))
        if not finite[row]:
            reason = "contains NaN or Inf"
        elif negative[row]:
            reason = "has a negative entry"
        else:
            reason = f"sums to {p[row].sum():.9g}, not 1"
        raise ProbabilityRowError(row, reason)
    return p


def label_compatibility(
    preset: CompatPreset | str, num_labels: int, path: str | Path | None = None
) -> LabelCompatibility:
    preset = CompatPreset(preset)
    if preset == CompatPreset.IDENTITY:
        return LabelCompatibility.identity(num_labels)
    if preset == CompatPreset.POTTS_COMPLEMENT:
        return LabelCompatibility.potts_complement(num_labels)
    if path is None:
        raise ValueError("a learned-from-file label compatibility needs a matrix file")
    matrix = read_matrix(path)
    if matrix.shape != (num_labels, num_labels):
        raise ShapeMismatchError(f"label compatibility file is {matrix.shape}, expected ({num_labels}, {num_labels})")
    return LabelCompatibility(matrix, CompatPreset.FILE)


def kernel_weights(features: FloatArray, graph: NeighborGraph, mix: KernelMixture) -> FloatArray:
    """w_ij = sum_m omega_m exp(-|P_m^T f_i - P_m^T f_j|^2), one value per stored edge."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] != graph.num_nodes:
        raise ShapeMismatchError(f"features must be ({graph.num_nodes}, d), got shape {features.shape}")
    if mix.in_dim is not None and mix.in_dim != features.shape[1]:
        raise ShapeMismatchError(f"kernel projections read {mix.in_dim} channels, features have {features.shape[1]}")
    if mix.has_negative_weights:
        logger.warning("kernel mixture has negative weights; edge weights may be negative")
    sources, targets = graph.sources(), graph.indices
    weights = np.zeros(graph.num_edges)
    for projection, omega in zip(mix.projections, mix.weights):
        projected = features @ projection.T
        diff = projected[sources] - projected[targets]
        weights += omega * np.exp(-np.einsum("ed,ed->e", diff, diff))
    return weights


def _log_unary(p: FloatArray) -> FloatArray:
    return np.log(np.maximum(p, PROBABILITY_FLOOR))


def discrete_crf_step(
    field: LabelField, graph: NeighborGraph, weights: FloatArray, compat: LabelCompatibility
) -> LabelField:
    """q_i <- softmax(log p_i - C m_i) with m_i = sum_j w_ij q_j read from the previous iterate."""
    n, num_labels = field.q.shape
    if graph.num_nodes != n:
        raise ShapeMismatchError(f"graph has {graph.num_nodes} nodes, label field has {n}")
    if compat.num_labels != num_labels:
        raise ShapeMismatchError(f"compatibility covers {compat.num_labels} labels, field has {num_labels}")
    weights = np.asarray(weights, dtype=np.float64).reshape(-1)
    if weights.size != graph.num_edges:
        raise ShapeMismatchError("edge weights must align with the graph's edges")
    W = graph.to_sparse(weights)
    log_p = _log_unary(field.p)
    q = np.empty_like(field.q)

    def rows(start: int, stop: int) -> None:
        messages = W[start:stop] @ field.q
        logits = log_p[start:stop] - np.einsum("kl,nl->nk", compat.matrix, messages)
        q[start:stop] = softmax(logits, axis=1)

    for_each_chunk(n, rows)
    return LabelField(field.p, q)


def discrete_crf_infer(
    unary: LabelField | FloatArray,
    features: FloatArray,
    graph: NeighborGraph,
    mix: KernelMixture | None,
    compat: LabelCompatibility,
    steps: int,
    weights: FloatArray | None = None,
) -> LabelField:
    """T jacobi steps from q = p. Explicit `weights` bypass the kernel mixture."""
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    if isinstance(unary, LabelField):
        field = unary
    else:
        p = validate_probabilities(unary)
        field = LabelField.from_unary(p / p.sum(axis=1, keepdims=True))
    field = LabelField(field.p, field.p.copy())
    if weights is None:
        mix = mix if mix is not None else KernelMixture.default(np.asarray(features).shape[1])
        weights = kernel_weights(features, graph, mix)
    for _ in range(steps):
        field = discrete_crf_step(field, graph, weights, compat)
    logger.debug("refined %d points over %d labels in %d step(s)", field.q.shape[0], field.num_labels, steps)
    return field


def mean_iou(pred: IndexArray, truth: IndexArray, num_labels: int) -> tuple[FloatArray, float]:
    """Per-label intersection over union (NaN for labels absent from both) and their mean."""
    pred = np.asarray(pred, dtype=np.int64).reshape(-1)
    truth = np.asarray(truth, dtype=np.int64).reshape(-1)
    if pred.shape != truth.shape:
        raise ShapeMismatchError(f"{pred.size} predictions for {truth.size} ground-truth labels")
    confusion = np.bincount(truth * num_labels + pred, minlength=num_labels * num_labels).reshape(
        num_labels, num_labels
    )
    intersection = np.diag(confusion).astype(np.float64)
    union = confusion.sum(axis=0) + confusion.sum(axis=1) - intersection
    iou = np.full(num_labels, np.nan)
    present = union > 0
    iou[present] = intersection[present] / union[present]
    return iou, float(np.mean(iou[present])) if np.any(present) else float("nan")
