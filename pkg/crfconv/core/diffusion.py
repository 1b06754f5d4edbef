from __future__ import annotations

import logging

import numpy as np

from crfconv.constants.defaults import DIFFUSION_COEFFICIENT, STEADY_STATE_TOLERANCE
from crfconv.core.crf_continuous import crf_step, trace_model
from crfconv.core.energy import dirichlet_energy, random_walk_laplacian_apply
from crfconv.core.errors import ShapeMismatchError, SolverConvergenceError
from crfconv.core.parallel import for_each_chunk
from crfconv.models.cloud import FloatArray, NeighborGraph
from crfconv.models.crf import ContinuousCrfState, CrfConfig, SimilarityField
from crfconv.models.diffusion import DiffusionComparison, DiffusionReportRow
from crfconv.models.energy import CompatibilityMatrix
from crfconv.models.enums.crf import Activation, Schedule

logger = logging.getLogger(__name__)


def diffusion_step(h: FloatArray, graph: NeighborGraph, c: float = DIFFUSION_COEFFICIENT) -> FloatArray:
    """h_i <- h_i - c sum_j w_ij (h_i - h_j); nodes without neighbors keep their value."""
    h = np.asarray(h, dtype=np.float64)
    if h.shape[0] != graph.num_nodes:
        raise ShapeMismatchError(f"h has {h.shape[0]} rows for a graph of {graph.num_nodes} nodes")
    if not (np.isfinite(c) and c >= 0):
        raise ValueError(f"diffusion coefficient must be finite and >= 0, got {c}")
    weights = graph.edge_weights if graph.edge_weights is not None else np.ones(graph.num_edges)
    W = graph.to_sparse(weights)
    strength = np.bincount(graph.sources(), weights=weights, minlength=graph.num_nodes)
    flat = h.reshape(graph.num_nodes, -1)
    out = np.empty_like(flat)

    def rows(start: int, stop: int) -> None:
        local = flat[start:stop]
        out[start:stop] = local - c * (strength[start:stop, None] * local - W[start:stop] @ flat)

    for_each_chunk(graph.num_nodes, rows)
    return out.reshape(h.shape)


def diffuse_to_steady(
    h: FloatArray,
    graph: NeighborGraph,
    c: float = DIFFUSION_COEFFICIENT,
    tol: float = STEADY_STATE_TOLERANCE,
    max_steps: int | None = None,
) -> tuple[FloatArray, int]:
    """Diffuse until a step changes h by less than tol (that step is not taken)."""
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    h = np.asarray(h, dtype=np.float64)
    max_steps = 10 * graph.num_nodes if max_steps is None else max_steps
    for steps in range(max_steps + 1):
        nxt = diffusion_step(h, graph, c)
        change = float(np.max(np.abs(nxt - h))) if h.size else 0.0
        if change < tol:
            logger.debug("diffusion reached steady state after %d step(s)", steps)
            return h, steps
        if steps == max_steps:
            break
        h = nxt
    residual = float(np.max(np.abs(random_walk_laplacian_apply(graph, h)))) if h.size else 0.0
    raise SolverConvergenceError(f"diffusion did not reach steady state within {max_steps} step(s)", residual)


def compare_crf_vs_diffusion(
    Z: FloatArray, graph: NeighborGraph, sim: SimilarityField, steps: int, c: float = DIFFUSION_COEFFICIENT
) -> DiffusionComparison:
    """Run the CRF update with C = I and diffusion side by side from Z.

    Diffusion uses the similarity field's normalized weights on `graph`, which must be the graph the field
    was built on; rows start at step 0. The first steps of both processes coincide only for c = 1/2.
    """
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim == 1:
        Z = Z.reshape(-1, 1)
    if sim.num_nodes != graph.num_nodes or Z.shape[0] != graph.num_nodes:
        raise ShapeMismatchError("Z, graph and similarity field must agree on the node count")
    if not (np.array_equal(graph.indptr, sim.graph.indptr) and np.array_equal(graph.indices, sim.graph.indices)):
        raise ShapeMismatchError("similarity field was built on a different neighbor graph")
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    weighted = sim.as_weighted_graph()
    cfg = CrfConfig(
        CompatibilityMatrix.identity(Z.shape[1]), steps=steps, schedule=Schedule.JACOBI, readout=Activation.IDENTITY
    )
    model = trace_model(sim, Z, cfg.compat)
    state = ContinuousCrfState.initial(Z)
    h = Z.copy()

    def row(step: int, X: FloatArray, D: FloatArray) -> DiffusionReportRow:
        return DiffusionReportRow(
            step,
            float(np.linalg.norm(X - Z)),
            dirichlet_energy(weighted, X),
            float(np.linalg.norm(D - Z)),
            dirichlet_energy(weighted, D),
        )

    rows = [row(0, state.X, h)]
    step1_gap = 0.0
    for t in range(1, steps + 1):
        state = crf_step(state, sim, cfg, model)
        h = diffusion_step(h, weighted, c)
        if t == 1:
            step1_gap = float(np.max(np.abs(state.X - h))) if h.size else 0.0
        rows.append(row(t, state.X, h))
    logger.debug("step-1 gap between CRF and diffusion: %.3e", step1_gap)
    return DiffusionComparison(tuple(rows), step1_gap)
