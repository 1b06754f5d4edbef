from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from crfconv.constants.defaults import DEFAULT_STEPS, READOUT_SLOPE, ROW_SUM_TOLERANCE, TRANSFORM_SLOPE
from crfconv.models.cloud import FloatArray, NeighborGraph
from crfconv.models.energy import CompatibilityMatrix, QuadraticEnergyModel
from crfconv.models.enums.crf import Activation, Schedule


@dataclass(frozen=True, eq=False)
class DenseLayer:
    """y = act(x W^T + b) with W of shape (out, in)."""

    weight: FloatArray
    bias: FloatArray
    activation: Activation = Activation.IDENTITY
    slope: float = TRANSFORM_SLOPE

    def __post_init__(self) -> None:
        weight = np.atleast_2d(np.asarray(self.weight, dtype=np.float64))
        bias = np.asarray(self.bias, dtype=np.float64).reshape(-1)
        if bias.size != weight.shape[0]:
            raise ValueError(f"bias has {bias.size} entries for {weight.shape[0]} outputs")
        if not (np.all(np.isfinite(weight)) and np.all(np.isfinite(bias)) and np.isfinite(self.slope)):
            raise ValueError("layer parameters must be finite")
        object.__setattr__(self, "weight", weight)
        object.__setattr__(self, "bias", bias)
        object.__setattr__(self, "activation", Activation(self.activation))

    @property
    def in_dim(self) -> int:
        return int(self.weight.shape[1])

    @property
    def out_dim(self) -> int:
        return int(self.weight.shape[0])


@dataclass(frozen=True, eq=False)
class PointwiseTransform:
    """Affine chain applied to every point independently; no layers means identity."""

    layers: tuple[DenseLayer, ...] = ()

    def __post_init__(self) -> None:
        layers = tuple(self.layers)
        for prev, nxt in zip(layers, layers[1:]):
            if prev.out_dim != nxt.in_dim:
                raise ValueError(f"layer dimensions do not chain: {prev.out_dim} -> {nxt.in_dim}")
        object.__setattr__(self, "layers", layers)

    @property
    def is_identity(self) -> bool:
        return not self.layers

    @property
    def in_dim(self) -> int | None:
        return self.layers[0].in_dim if self.layers else None

    def out_dim(self, in_dim: int) -> int:
        return self.layers[-1].out_dim if self.layers else in_dim

    def with_layers(self, layers: Sequence[DenseLayer]) -> PointwiseTransform:
        return PointwiseTransform(tuple(layers))


@dataclass(frozen=True, eq=False)
class SimilarityField:
    """Row-normalized edge similarities s_hat_ij over a graph.

    `log_partition` keeps the log of each row's unnormalized sum so the field can be turned back
    into a symmetric energy model.
    """

    graph: NeighborGraph
    s_hat: FloatArray
    log_partition: FloatArray | None = None

    def __post_init__(self) -> None:
        s_hat = np.asarray(self.s_hat, dtype=np.float64).reshape(-1)
        if s_hat.size != self.graph.num_edges:
            raise ValueError("s_hat must align with the graph's edges")
        if not np.all(np.isfinite(s_hat)) or np.any(s_hat < 0):
            raise ValueError("s_hat must be finite and nonnegative")
        rows = np.bincount(self.graph.sources(), weights=s_hat, minlength=self.graph.num_nodes)
        has_neighbors = self.graph.degrees() > 0
        if np.any(np.abs(rows[has_neighbors] - 1.0) > ROW_SUM_TOLERANCE):
            raise ValueError("s_hat rows must sum to 1 on nodes with neighbors")
        if self.log_partition is None:
            log_partition = np.zeros(self.graph.num_nodes)
        else:
            log_partition = np.asarray(self.log_partition, dtype=np.float64).reshape(-1)
            if log_partition.size != self.graph.num_nodes:
                raise ValueError("log_partition needs one entry per node")
        object.__setattr__(self, "s_hat", s_hat)
        object.__setattr__(self, "log_partition", log_partition)

    @classmethod
    def from_weights(cls, graph: NeighborGraph, raw: FloatArray) -> SimilarityField:
        """Normalize raw similarities row-wise: s_hat_ij = s_ij / sum_j s_ij."""
        raw = np.asarray(raw, dtype=np.float64).reshape(-1)
        if raw.size != graph.num_edges or np.any(raw < 0) or not np.all(np.isfinite(raw)):
            raise ValueError("raw similarities must be finite, nonnegative and one per edge")
        sources = graph.sources()
        rows = np.bincount(sources, weights=raw, minlength=graph.num_nodes)
        if np.any(rows[graph.degrees() > 0] <= 0):
            raise ValueError("a node with neighbors has zero total similarity")
        log_partition = np.zeros(graph.num_nodes)
        nonzero = rows > 0
        log_partition[nonzero] = np.log(rows[nonzero])
        return cls(graph, raw / np.where(rows > 0, rows, 1.0)[sources], log_partition)

    @property
    def num_nodes(self) -> int:
        return self.graph.num_nodes

    def to_sparse(self):
        return self.graph.to_sparse(self.s_hat)

    def as_weighted_graph(self) -> NeighborGraph:
        return self.graph.with_weights(self.s_hat)

    def stationary_weights(self) -> FloatArray:
        """Per-node weights pi with pi_i s_hat_ij = pi_j s_hat_ji for reversible fields."""
        assert self.log_partition is not None
        has_neighbors = self.graph.degrees() > 0
        pi = np.ones(self.num_nodes)
        if np.any(has_neighbors):
            logs = self.log_partition[has_neighbors]
            pi[has_neighbors] = np.maximum(np.exp(logs - logs.max()), np.finfo(np.float64).tiny)
        return pi

    def is_reversible(self, rtol: float = 1e-9) -> bool:
        if not self.graph.is_symmetric():
            return False
        flow = self.graph.to_sparse(self.stationary_weights()[self.graph.sources()] * self.s_hat)
        scale = float(np.max(flow.data)) if flow.nnz else 1.0
        gap = abs(flow - flow.T)
        return gap.nnz == 0 or float(gap.max()) <= rtol * scale

    def normalized_model(self, Z: FloatArray, compat: CompatibilityMatrix) -> QuadraticEnergyModel:
        """Energy model with s_ij = s_hat_ij on every directed edge."""
        return QuadraticEnergyModel(self.graph, self.s_hat, compat, Z)

    def energy_model(self, Z: FloatArray, compat: CompatibilityMatrix) -> QuadraticEnergyModel:
        """Symmetric model whose exact coordinate descent is the normalized message-passing update.

        Fidelity weights are pi_i and each directed edge carries pi_i s_hat_ij / 2, so an
        undirected pair contributes pi_i s_hat_ij in total. Exact only for reversible fields.
        """
        pi = self.stationary_weights()
        return QuadraticEnergyModel(
            self.graph, 0.5 * pi[self.graph.sources()] * self.s_hat, compat, Z, fidelity=pi
        )


@dataclass(frozen=True, eq=False)
class ContinuousCrfState:
    Z: FloatArray
    X: FloatArray
    Sigma: FloatArray | None = None
    t: int = 0
    energy_trace: tuple[float, ...] = field(default=())

    def __post_init__(self) -> None:
        Z = np.asarray(self.Z, dtype=np.float64)
        X = np.asarray(self.X, dtype=np.float64)
        if Z.shape != X.shape or Z.ndim != 2:
            raise ValueError(f"Z and X must share an (N, d) shape, got {Z.shape} and {X.shape}")
        if not (np.all(np.isfinite(Z)) and np.all(np.isfinite(X))):
            raise ValueError("CRF state contains NaN or Inf")
        if self.Sigma is not None:
            sigma = np.asarray(self.Sigma, dtype=np.float64)
            if sigma.shape != (Z.shape[0], Z.shape[1], Z.shape[1]):
                raise ValueError("Sigma must hold one d x d matrix per node")
            if not np.allclose(sigma, np.swapaxes(sigma, 1, 2), atol=1e-12):
                raise ValueError("Sigma must be symmetric")
            if sigma.size and np.min(np.linalg.eigvalsh(sigma)) <= 0:
                raise ValueError("Sigma must be positive definite")
            object.__setattr__(self, "Sigma", sigma)
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "energy_trace", tuple(float(e) for e in self.energy_trace))

    @classmethod
    def initial(cls, Z: FloatArray) -> ContinuousCrfState:
        Z = np.asarray(Z, dtype=np.float64)
        return cls(Z, Z.copy())


@dataclass(frozen=True, eq=False)
class CrfConfig:
    compat: CompatibilityMatrix
    steps: int = DEFAULT_STEPS
    schedule: Schedule = Schedule.JACOBI
    convergence_tol: float = 0.0
    readout: Activation = Activation.LEAKY_RELU
    readout_slope: float = READOUT_SLOPE

    def __post_init__(self) -> None:
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        # +inf is accepted: it stops before the first step
        if np.isnan(self.convergence_tol) or self.convergence_tol < 0:
            raise ValueError(f"convergence_tol must be >= 0, got {self.convergence_tol}")
        object.__setattr__(self, "schedule", Schedule(self.schedule))
        object.__setattr__(self, "readout", Activation(self.readout))
