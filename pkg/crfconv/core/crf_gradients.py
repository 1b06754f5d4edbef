"""Reverse-mode gradients of the unrolled jacobi CRF layer.

With H_0 = Z = unary(Z_in), V_t = S H_{t-1}, U_t = Z + V_t C and H_t = U_t A, A = (I + C)^-1,
the backward sweep walks t = T..1 accumulating cotangents of Z, C, A and the edge similarities,
then pushes them through the softmax, C = c^T c + eps I and both pointwise transforms.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List

import numpy as np

from crfconv.core.crf_continuous import segment_softmax, squared_feature_distances, update_operator
from crfconv.core.errors import ShapeMismatchError, UnsupportedConfigurationError
from crfconv.core.transform import LayerGradient, activate, activation_derivative, backward, forward
from crfconv.models.cloud import FloatArray, NeighborGraph
from crfconv.models.crf import CrfConfig, PointwiseTransform
from crfconv.models.enums.crf import Schedule

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class CrfGradients:
    z_in: FloatArray
    unary: tuple[LayerGradient, ...]
    projection: tuple[LayerGradient, ...]
    c: FloatArray
    guide: FloatArray
    output: FloatArray
    steps: int


def crf_gradients(
    Z_in: FloatArray,
    graph: NeighborGraph,
    unary: PointwiseTransform,
    projection: PointwiseTransform,
    guide_features: FloatArray,
    cfg: CrfConfig,
    upstream: FloatArray,
) -> CrfGradients:
    if cfg.schedule != Schedule.JACOBI:
        raise UnsupportedConfigurationError("gradients are only available for the jacobi schedule")
    Z_in = np.asarray(Z_in, dtype=np.float64)
    if Z_in.ndim != 2 or Z_in.shape[0] != graph.num_nodes:
        raise ShapeMismatchError(f"input must be ({graph.num_nodes}, d_in), got shape {Z_in.shape}")

    guide_features = np.asarray(guide_features, dtype=np.float64)
    if guide_features.ndim != 2 or guide_features.shape[0] != graph.num_nodes:
        raise ShapeMismatchError(f"guide features must be ({graph.num_nodes}, d'), got shape {guide_features.shape}")

    # forward, keeping every iterate
    unary_tape = forward(unary, Z_in)
    Z = unary_tape.output
    guide_tape = forward(projection, guide_features)
    g = guide_tape.output
    s_hat, _ = segment_softmax(-squared_feature_distances(g, graph), graph)
    S = graph.to_sparse(s_hat)
    C = cfg.compat.realized
    A = update_operator(cfg.compat)
    H: List[FloatArray] = [Z]
    V: List[FloatArray] = []
    U: List[FloatArray] = []
    for _ in range(cfg.steps):
        v = S @ H[-1]
        u = Z + v @ C
        h = u @ A
        if (float(np.max(np.abs(h - H[-1]))) if h.size else 0.0) < cfg.convergence_tol:
            break
        V.append(v)
        U.append(u)
        H.append(h)
    steps = len(V)
    output = activate(H[-1], cfg.readout, cfg.readout_slope)

    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != output.shape:
        raise ShapeMismatchError(f"upstream cotangent has shape {upstream.shape}, output is {output.shape}")

    # backward through the unrolled iteration
    grad_h = upstream * activation_derivative(H[-1], cfg.readout, cfg.readout_slope)
    grad_z = np.zeros_like(Z)
    grad_A = np.zeros_like(A)
    grad_C = np.zeros_like(C)
    grad_s = np.zeros(graph.num_edges)
    sources, targets = graph.sources(), graph.indices
    ST = S.T.tocsr()
    for t in range(steps, 0, -1):
        grad_u = grad_h @ A.T
        grad_A += U[t - 1].T @ grad_h
        grad_z += grad_u
        grad_v = grad_u @ C.T
        grad_C += V[t - 1].T @ grad_u
        grad_s += np.einsum("ed,ed->e", grad_v[sources], H[t - 1][targets])
        grad_h = ST @ grad_v
    grad_z += grad_h

    # A = (I + C)^-1
    grad_C += -A.T @ grad_A @ A.T
    if cfg.compat.exact_identity:
        grad_c = np.zeros_like(cfg.compat.c)
    else:
        grad_c = cfg.compat.c @ (grad_C + grad_C.T)

    # segment softmax of -d2, then d2 = |g_i - g_j|^2
    row_dot = np.bincount(sources, weights=s_hat * grad_s, minlength=graph.num_nodes)
    grad_logits = s_hat * (grad_s - row_dot[sources])
    diff = g[sources] - g[targets]
    edge_grad = (-2.0 * grad_logits)[:, None] * diff
    grad_g = np.zeros_like(g)
    np.add.at(grad_g, sources, edge_grad)
    np.add.at(grad_g, targets, -edge_grad)

    grad_guide, projection_grads = backward(projection, guide_tape, grad_g)
    grad_in, unary_grads = backward(unary, unary_tape, grad_z)
    logger.debug("backpropagated %d unrolled step(s)", steps)
    return CrfGradients(grad_in, unary_grads, projection_grads, grad_c, grad_guide, output, steps)
