from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from crfconv.constants.defaults import INTERPOLATION_K
from crfconv.core.cloud import knn_graph, knn_interpolate
from crfconv.core.energy import evaluate_energy
from crfconv.core.errors import ShapeMismatchError
from crfconv.core.parallel import for_each_chunk
from crfconv.core.transform import activate, apply_transform, linear_transform
from crfconv.models.cloud import FloatArray, NeighborGraph, PointCloud
from crfconv.models.crf import ContinuousCrfState, CrfConfig, PointwiseTransform, SimilarityField
from crfconv.models.energy import CompatibilityMatrix, QuadraticEnergyModel
from crfconv.models.enums.crf import Schedule

logger = logging.getLogger(__name__)


# ---------------- similarity ----------------
def squared_feature_distances(projected: FloatArray, graph: NeighborGraph) -> FloatArray:
    diff = projected[graph.sources()] - projected[graph.indices]
    return np.einsum("ed,ed->e", diff, diff)


def segment_softmax(logits: FloatArray, graph: NeighborGraph) -> tuple[FloatArray, FloatArray]:
    """Softmax of per-edge logits within each node's neighbor list, plus each row's log normalizer."""
    n = graph.num_nodes
    sources = graph.sources()
    row_max = np.full(n, -np.inf)
    np.maximum.at(row_max, sources, logits)
    shifted = np.exp(logits - row_max[sources])
    sums = np.bincount(sources, weights=shifted, minlength=n)
    has_neighbors = graph.degrees() > 0
    log_partition = np.zeros(n)
    log_partition[has_neighbors] = row_max[has_neighbors] + np.log(sums[has_neighbors])
    return shifted / np.where(has_neighbors, sums, 1.0)[sources], log_partition


def pairwise_similarity(
    features: FloatArray, graph: NeighborGraph, projection: PointwiseTransform
) -> SimilarityField:
    """s_hat_ij = softmax over j in N(i) of -|T(f_i) - T(f_j)|^2."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] != graph.num_nodes:
        raise ShapeMismatchError(
            f"guide features must be ({graph.num_nodes}, d'), got shape {features.shape}"
        )
    projected = apply_transform(projection, features)
    s_hat, log_partition = segment_softmax(-squared_feature_distances(projected, graph), graph)
    return SimilarityField(graph, s_hat, log_partition)


def mahalanobis_similarity(features: FloatArray, graph: NeighborGraph, P: FloatArray) -> SimilarityField:
    """Softmax similarity under the distance (f_i - f_j)^T P P^T (f_i - f_j), P of shape (d, d')."""
    return pairwise_similarity(features, graph, linear_transform(P))


def trace_model(sim: SimilarityField, Z: FloatArray, compat: CompatibilityMatrix) -> QuadraticEnergyModel:
    """Energy whose exact coordinate descent is the normalized update."""
    if not sim.is_reversible():
        logger.warning(
            "similarity field is not reversible; the energy trace is not guaranteed to decrease "
            "(symmetrize the graph to restore it)"
        )
    return sim.energy_model(Z, compat)


# ---------------- message passing ----------------
def update_operator(compat: CompatibilityMatrix) -> FloatArray:
    """(I + C)^-1, symmetric positive definite."""
    A = scipy.linalg.inv(np.eye(compat.dim) + compat.realized)
    return 0.5 * (A + A.T)


def _jacobi(Z: FloatArray, X: FloatArray, sim: SimilarityField, C: FloatArray, A: FloatArray) -> FloatArray:
    S = sim.to_sparse()
    out = np.empty_like(X)

    def rows(start: int, stop: int) -> None:
        # elementwise einsum keeps each row's arithmetic independent of the chunking
        messages = np.einsum("nd,de->ne", S[start:stop] @ X, C)
        out[start:stop] = np.einsum("nd,de->ne", Z[start:stop] + messages, A)

    for_each_chunk(X.shape[0], rows)
    return out


def _gauss_seidel(Z: FloatArray, X: FloatArray, sim: SimilarityField, C: FloatArray, A: FloatArray) -> FloatArray:
    X = X.copy()
    indptr, indices, s_hat = sim.graph.indptr, sim.graph.indices, sim.s_hat
    for i in range(X.shape[0]):
        lo, hi = indptr[i], indptr[i + 1]
        aggregated = s_hat[lo:hi] @ X[indices[lo:hi]]
        X[i] = (Z[i] + C @ aggregated) @ A
    return X


def crf_step(
    state: ContinuousCrfState,
    sim: SimilarityField,
    cfg: CrfConfig,
    model: QuadraticEnergyModel | None = None,
) -> ContinuousCrfState:
    """One mean-field step x_i <- (I + C)^-1 (z_i + C sum_j s_hat_ij x_j); isolated nodes get (I + C)^-1 z_i.

    `model` is the energy the trace is evaluated against; it defaults to the field's consistent
    energy model.
    """
    Z, X = state.Z, state.X
    if sim.num_nodes != Z.shape[0]:
        raise ShapeMismatchError(f"similarity field has {sim.num_nodes} nodes, state has {Z.shape[0]}")
    if cfg.compat.dim != Z.shape[1]:
        raise ShapeMismatchError(f"compatibility is {cfg.compat.dim}-dimensional, features are {Z.shape[1]}")
    C = cfg.compat.realized
    A = update_operator(cfg.compat)
    if cfg.schedule == Schedule.JACOBI:
        X_next = _jacobi(Z, X, sim, C, A)
    else:
        X_next = _gauss_seidel(Z, X, sim, C, A)
    if model is None:
        model = trace_model(sim, Z, cfg.compat)
    energy = evaluate_energy(model, X_next)
    return ContinuousCrfState(Z, X_next, state.Sigma, state.t + 1, state.energy_trace + (energy,))


def run_crf(
    Z: FloatArray,
    sim: SimilarityField,
    cfg: CrfConfig,
    model: QuadraticEnergyModel | None = None,
) -> ContinuousCrfState:
    """Up to cfg.steps message-passing steps from X = Z.

    A step whose max-norm change is below cfg.convergence_tol is discarded and the loop stops, so
    an infinite tolerance performs no step at all.
    """
    state = ContinuousCrfState.initial(Z)
    if model is None:
        model = trace_model(sim, state.Z, cfg.compat)
    for _ in range(cfg.steps):
        nxt = crf_step(state, sim, cfg, model)
        change = float(np.max(np.abs(nxt.X - state.X))) if state.X.size else 0.0
        if change < cfg.convergence_tol:
            logger.debug("converged after %d step(s): change %.3e < tol %.3e", state.t, change, cfg.convergence_tol)
            break
        state = nxt
    logger.debug("ran %d of %d step(s) with %s schedule", state.t, cfg.steps, cfg.schedule.value)
    return state


def readout(X: FloatArray, cfg: CrfConfig) -> FloatArray:
    return activate(X, cfg.readout, cfg.readout_slope)


@dataclass(frozen=True, eq=False)
class CrfLayerResult:
    output: FloatArray
    state: ContinuousCrfState
    similarity: SimilarityField


def crf_layer(
    Z_in: FloatArray,
    graph: NeighborGraph,
    unary: PointwiseTransform,
    projection: PointwiseTransform,
    guide_features: FloatArray,
    cfg: CrfConfig,
) -> CrfLayerResult:
    Z_in = np.asarray(Z_in, dtype=np.float64)
    if Z_in.ndim != 2 or Z_in.shape[0] != graph.num_nodes:
        raise ShapeMismatchError(f"input must be ({graph.num_nodes}, d_in), got shape {Z_in.shape}")
    Z = apply_transform(unary, Z_in)
    sim = pairwise_similarity(guide_features, graph, projection)
    state = run_crf(Z, sim, cfg)
    return CrfLayerResult(readout(state.X, cfg), state, sim)


def crf_convolve(
    Z_in: FloatArray,
    graph: NeighborGraph,
    unary: PointwiseTransform,
    projection: PointwiseTransform,
    guide_features: FloatArray,
    cfg: CrfConfig,
) -> FloatArray:
    return crf_layer(Z_in, graph, unary, projection, guide_features, cfg).output


# ---------------- covariance ----------------
def mean_field_covariance(sim: SimilarityField, compat: CompatibilityMatrix) -> FloatArray:
    """Sigma_i = 1/2 (I + sum_j s_hat_ij C)^-1; isolated nodes get 1/2 I."""
    n, d = sim.num_nodes, compat.dim
    weight_sums = np.bincount(sim.graph.sources(), weights=sim.s_hat, minlength=n)
    precision = np.eye(d)[None, :, :] + weight_sums[:, None, None] * compat.realized[None, :, :]
    sigma = 0.5 * np.linalg.inv(precision)
    return 0.5 * (sigma + np.swapaxes(sigma, 1, 2))


# ---------------- decoder ----------------
def decode_level(
    coarse: PointCloud,
    fine: PointCloud,
    k: int,
    unary: PointwiseTransform,
    projection: PointwiseTransform,
    cfg: CrfConfig,
    graph: NeighborGraph | None = None,
    interpolation_k: int = INTERPOLATION_K,
) -> FloatArray:
    """Upsample coarse features onto the fine points, restore them with the CRF layer guided by the
    fine features, and append the guide.

    The fine graph defaults to the k-nearest-neighbor graph of the fine positions.
    """
    if coarse.num_points < 1 or fine.num_points < 1:
        raise ValueError("decode_level needs non-empty coarse and fine clouds")
    upsampled = knn_interpolate(coarse, fine.positions, interpolation_k)
    if graph is None:
        graph = knn_graph(fine, k)
    restored = crf_convolve(upsampled, graph, unary, projection, fine.features, cfg)
    return np.hstack([restored, fine.features])
