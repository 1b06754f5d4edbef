from __future__ import annotations

import logging

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import bicgstab, cg

from crfconv.constants.defaults import DENSE_SOLVE_LIMIT, RESIDUAL_TOLERANCE, ROW_SUM_TOLERANCE
from crfconv.core.errors import ShapeMismatchError, SolverConvergenceError
from crfconv.models.cloud import FloatArray, NeighborGraph
from crfconv.models.energy import QuadraticEnergyModel
from crfconv.models.enums.crf import Assembly

logger = logging.getLogger(__name__)


def _check_shape(model: QuadraticEnergyModel, X: FloatArray) -> FloatArray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.shape != model.observed.shape:
        raise ShapeMismatchError(f"X has shape {X.shape}, model expects {model.observed.shape}")
    return X


def evaluate_energy(model: QuadraticEnergyModel, X: FloatArray) -> float:
    """sum_i pi_i |x_i - z_i|^2 + sum over directed edges s_ij (x_i - x_j)^T C (x_i - x_j)."""
    X = _check_shape(model, X)
    residual = X - model.observed
    fidelity = float(np.dot(model.fidelity_weights, np.einsum("nd,nd->n", residual, residual)))
    if model.graph.num_edges == 0:
        return fidelity
    diff = X[model.graph.sources()] - X[model.graph.indices]
    quad = np.einsum("ed,df,ef->e", diff, model.compat.realized, diff)
    return fidelity + float(np.dot(model.similarities, quad))


def symmetric_weights(model: QuadraticEnergyModel) -> sp.csr_matrix:
    """Undirected scalar weights s_ij + s_ji, no diagonal."""
    S = model.similarity_matrix()
    return (S + S.T).tocsr()


def symmetric_laplacian(model: QuadraticEnergyModel) -> sp.csr_matrix:
    """Laplacian of the undirected weights (scalar part, C factored out)."""
    W = symmetric_weights(model)
    return (sp.diags(np.asarray(W.sum(axis=1)).ravel()) - W).tocsr()


def energy_gradient(model: QuadraticEnergyModel, X: FloatArray) -> FloatArray:
    X = _check_shape(model, X)
    L = symmetric_laplacian(model)
    pi = model.fidelity_weights[:, None]
    return 2.0 * pi * (X - model.observed) + 2.0 * (L @ X) @ model.compat.realized


def assemble_system(
    model: QuadraticEnergyModel, assembly: Assembly = Assembly.ENERGY
) -> tuple[sp.csr_matrix, FloatArray]:
    """Block system (node-major unknowns) whose solution minimizes the energy or fixes the coordinate update."""
    n, d = model.observed.shape
    C = model.compat.realized
    eye_d = sp.identity(d, format="csr")
    if Assembly(assembly) == Assembly.ENERGY:
        pi = model.fidelity_weights
        A = sp.kron(sp.diags(pi), eye_d) + sp.kron(symmetric_laplacian(model), C)
        b = (pi[:, None] * model.observed).reshape(-1)
    else:
        S = model.similarity_matrix()
        L = sp.diags(np.asarray(S.sum(axis=1)).ravel()) - S
        A = sp.identity(n * d) + sp.kron(L, C)
        b = model.observed.reshape(-1).copy()
    return sp.csr_matrix(A), b


def _residual(A: sp.csr_matrix, x: FloatArray, b: FloatArray) -> float:
    return float(np.max(np.abs(A @ x - b))) if b.size else 0.0


def solve_exact(model: QuadraticEnergyModel, assembly: Assembly = Assembly.ENERGY) -> FloatArray:
    """Closed-form minimizer of the energy (or fixed point of the message-passing update).

    Systems with at most DENSE_SOLVE_LIMIT unknowns are factorized densely; larger ones use a
    Jacobi-preconditioned Krylov solve. Either way the residual must satisfy
    |A x - b|_inf <= 1e-8 (1 + |b|_inf).
    """
    assembly = Assembly(assembly)
    n, d = model.observed.shape
    if n == 0:
        return np.zeros((0, d))
    A, b = assemble_system(model, assembly)
    unknowns = n * d
    if unknowns <= DENSE_SOLVE_LIMIT:
        dense = A.toarray()
        if assembly == Assembly.ENERGY:
            x = scipy.linalg.solve(dense, b, assume_a="pos")
        else:
            x = scipy.linalg.solve(dense, b, assume_a="gen")
        method = "dense"
    else:
        diagonal = A.diagonal()
        M = sp.diags(1.0 / diagonal)
        solver = cg if assembly == Assembly.ENERGY else bicgstab
        x, info = solver(A, b, rtol=1e-13, atol=0.0, maxiter=10 * unknowns, M=M)
        if info < 0:
            raise SolverConvergenceError(f"{solver.__name__} broke down", _residual(A, x, b))
        method = solver.__name__
    residual = _residual(A, x, b)
    bound = RESIDUAL_TOLERANCE * (1.0 + (float(np.max(np.abs(b))) if b.size else 0.0))
    logger.debug("solve_exact[%s] via %s: %d unknowns, residual %.3e", assembly.value, method, unknowns, residual)
    if not residual <= bound:
        raise SolverConvergenceError(f"{method} solve exceeded the residual bound {bound:.3e}", residual)
    return x.reshape(n, d)


def _check_normalized(graph: NeighborGraph, weights: FloatArray) -> None:
    rows = np.bincount(graph.sources(), weights=weights, minlength=graph.num_nodes)
    bad = (graph.degrees() > 0) & (np.abs(rows - 1.0) > ROW_SUM_TOLERANCE)
    if np.any(bad):
        raise ValueError(f"weights of node {int(np.argmax(bad))} do not sum to 1")


def random_walk_laplacian_apply(graph: NeighborGraph, h: FloatArray) -> FloatArray:
    """(I - D^-1 W) h for row-normalized weights; rows without neighbors act as identity."""
    weights = graph.edge_weights if graph.edge_weights is not None else np.ones(graph.num_edges)
    _check_normalized(graph, weights)
    return h - graph.to_sparse(weights) @ h


def dirichlet_energy(graph: NeighborGraph, h: FloatArray) -> float:
    """h^T (I - D^-1 W) h, summed over channels when h is N x d."""
    h = np.asarray(h, dtype=np.float64)
    if h.shape[0] != graph.num_nodes:
        raise ShapeMismatchError(f"h has {h.shape[0]} rows for a graph of {graph.num_nodes} nodes")
    value = float(np.sum(h * random_walk_laplacian_apply(graph, h)))
    if value < 0:
        logger.warning("negative Dirichlet energy %.3e: the random-walk Laplacian is not symmetric here", value)
    return value
