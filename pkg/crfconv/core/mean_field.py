"""Coordinate descent and mean-field updates on a quadratic energy model.

Both updates minimize the same per-node quadratic. `coordinate_descent_update` reads it off the
energy gradient (symmetric Laplacian), `mean_field_mean_update` assembles it edge by edge from the
mean-field free energy, so the two serve as cross-checks of each other.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg

from crfconv.core.energy import symmetric_laplacian, symmetric_weights
from crfconv.core.errors import ShapeMismatchError
from crfconv.models.cloud import FloatArray
from crfconv.models.energy import QuadraticEnergyModel
from crfconv.models.enums.crf import Schedule


def _as_features(model: QuadraticEnergyModel, X: FloatArray) -> FloatArray:
    X = np.asarray(X, dtype=np.float64)
    if X.shape != model.observed.shape:
        raise ShapeMismatchError(f"expected shape {model.observed.shape}, got {X.shape}")
    return X


def coordinate_descent_update(
    model: QuadraticEnergyModel, X: FloatArray, schedule: Schedule = Schedule.JACOBI
) -> FloatArray:
    """x_i <- (pi_i I + sum_j w~_ij C)^-1 (pi_i z_i + C sum_j w~_ij x_j), w~_ij = s_ij + s_ji.

    Each node's update is the exact minimizer of the energy with every other node held fixed.
    """
    X = _as_features(model, X).copy()
    C = model.compat.realized
    d = model.dim
    adjacency = symmetric_weights(model)
    strength = np.asarray(adjacency.sum(axis=1)).ravel()
    pi = model.fidelity_weights
    Z = model.observed
    if Schedule(schedule) == Schedule.JACOBI:
        neighbor_sum = adjacency @ X
        systems = pi[:, None, None] * np.eye(d) + strength[:, None, None] * C
        rhs = pi[:, None] * Z + neighbor_sum @ C
        return np.linalg.solve(systems, rhs[:, :, None])[:, :, 0]
    for i in range(model.num_nodes):
        row = adjacency.getrow(i)
        neighbor_sum = row.data @ X[row.indices] if row.nnz else np.zeros(d)
        system = pi[i] * np.eye(d) + strength[i] * C
        X[i] = np.linalg.solve(system, pi[i] * Z[i] + C @ neighbor_sum)
    return X


def _node_quadratic(model: QuadraticEnergyModel, mu: FloatArray, i: int) -> tuple[FloatArray, FloatArray]:
    """Precision and linear term of the free energy in mu_i (halved), other means fixed."""
    W = model.compat.realized
    d = model.dim
    graph = model.graph
    precision = model.fidelity_weights[i] * np.eye(d)
    linear = model.fidelity_weights[i] * model.observed[i]
    # i as the source of an edge
    lo, hi = graph.indptr[i], graph.indptr[i + 1]
    for j, s in zip(graph.indices[lo:hi], model.similarities[lo:hi]):
        precision = precision + s * W
        linear = linear + s * (W @ mu[j])
    # i as the target of an edge
    incoming = np.flatnonzero(graph.indices == i)
    for e in incoming:
        src = int(np.searchsorted(graph.indptr, e, side="right") - 1)
        s = model.similarities[e]
        precision = precision + s * W
        linear = linear + s * (W @ mu[src])
    return precision, linear


def mean_field_mean_update(
    model: QuadraticEnergyModel, mu: FloatArray, schedule: Schedule = Schedule.JACOBI
) -> FloatArray:
    """Stationary point of the free energy in each mu_i, solved by Cholesky."""
    mu = _as_features(model, mu)
    source = mu.copy()
    out = mu.copy()
    in_place = Schedule(schedule) == Schedule.GAUSS_SEIDEL
    for i in range(model.num_nodes):
        precision, linear = _node_quadratic(model, out if in_place else source, i)
        out[i] = scipy.linalg.cho_solve(scipy.linalg.cho_factor(precision), linear)
    return out


def model_covariance(model: QuadraticEnergyModel) -> FloatArray:
    """Per-node covariance minimizing the free energy: 1/2 (pi_i I + sum_j w~_ij C)^-1."""
    d = model.dim
    strength = symmetric_laplacian(model).diagonal()
    precision = model.fidelity_weights[:, None, None] * np.eye(d) + strength[:, None, None] * model.compat.realized
    sigma = 0.5 * np.linalg.inv(precision)
    return 0.5 * (sigma + np.swapaxes(sigma, 1, 2))


def mean_field_free_energy(model: QuadraticEnergyModel, mu: FloatArray, sigma: FloatArray) -> float:
    """KL objective of a factorized Gaussian posterior, up to additive constants.

    sum_i [pi_i (tr S_i + |mu_i - z_i|^2) - 1/2 log|S_i|]
      + sum over directed edges s_ij [tr(C S_i) + tr(C S_j) + (mu_i - mu_j)^T C (mu_i - mu_j)]
    """
    mu = _as_features(model, mu)
    sigma = np.asarray(sigma, dtype=np.float64)
    n, d = mu.shape
    if sigma.shape != (n, d, d):
        raise ShapeMismatchError(f"sigma must be ({n}, {d}, {d}), got {sigma.shape}")
    pi = model.fidelity_weights
    C = model.compat.realized
    _, logdet = np.linalg.slogdet(sigma)
    residual = mu - model.observed
    traces = np.trace(sigma, axis1=1, axis2=2)
    unary = float(np.sum(pi * (traces + np.einsum("nd,nd->n", residual, residual)) - 0.5 * logdet))
    if model.graph.num_edges == 0:
        return unary
    src, dst = model.graph.sources(), model.graph.indices
    coupled = np.einsum("de,ned->n", C, sigma)
    diff = mu[src] - mu[dst]
    pairwise = coupled[src] + coupled[dst] + np.einsum("ed,df,ef->e", diff, C, diff)
    return unary + float(np.dot(model.similarities, pairwise))
