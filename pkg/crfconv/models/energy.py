from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from crfconv.constants.defaults import DEFAULT_EPSILON
from crfconv.models.cloud import FloatArray, NeighborGraph


@dataclass(frozen=True, eq=False)
class CompatibilityMatrix:
    """Channel coupling C = c^T c + eps I, or exactly I when `exact_identity` is set."""

    c: FloatArray
    epsilon: float = DEFAULT_EPSILON
    exact_identity: bool = False

    def __post_init__(self) -> None:
        c = np.atleast_2d(np.asarray(self.c, dtype=np.float64))
        if c.shape[0] != c.shape[1]:
            raise ValueError(f"c must be square, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("c contains NaN or Inf")
        if not (np.isfinite(self.epsilon) and self.epsilon > 0):
            raise ValueError(f"epsilon must be a positive finite value, got {self.epsilon}")
        object.__setattr__(self, "c", c)

    @classmethod
    def default(cls, dim: int, epsilon: float = DEFAULT_EPSILON) -> CompatibilityMatrix:
        # c starts at I, as in the layer's initialization
        return cls(np.eye(dim), epsilon)

    @classmethod
    def identity(cls, dim: int) -> CompatibilityMatrix:
        return cls(np.eye(dim), DEFAULT_EPSILON, exact_identity=True)

    @property
    def dim(self) -> int:
        return int(self.c.shape[0])

    @cached_property
    def realized(self) -> FloatArray:
        if self.exact_identity:
            return np.eye(self.dim)
        C = self.c.T @ self.c + self.epsilon * np.eye(self.dim)
        return 0.5 * (C + C.T)

    def with_c(self, c: FloatArray) -> CompatibilityMatrix:
        return CompatibilityMatrix(c, self.epsilon, self.exact_identity)


@dataclass(frozen=True, eq=False)
class QuadraticEnergyModel:
    """Fidelity plus smoothness energy over a directed graph.

    `similarities` are the per-edge s_ij aligned with `graph.indices`; the pairwise weight is
    w_ij = s_ij C. `fidelity` holds optional per-node weights on the fidelity term.
    """

    graph: NeighborGraph
    similarities: FloatArray
    compat: CompatibilityMatrix
    observed: FloatArray
    fidelity: FloatArray | None = None

    def __post_init__(self) -> None:
        s = np.asarray(self.similarities, dtype=np.float64).reshape(-1)
        if s.size != self.graph.num_edges:
            raise ValueError("similarities must align with the graph's edges")
        if not np.all(np.isfinite(s)) or np.any(s < 0):
            raise ValueError("similarities must be finite and nonnegative")
        Z = np.asarray(self.observed, dtype=np.float64)
        if Z.ndim == 1:
            Z = Z.reshape(-1, 1)
        if Z.shape != (self.graph.num_nodes, self.compat.dim):
            raise ValueError(
                f"observed features must be ({self.graph.num_nodes}, {self.compat.dim}), got {Z.shape}"
            )
        if not np.all(np.isfinite(Z)):
            raise ValueError("observed features contain NaN or Inf")
        if self.fidelity is None:
            pi = np.ones(self.graph.num_nodes)
        else:
            pi = np.asarray(self.fidelity, dtype=np.float64).reshape(-1)
            if pi.size != self.graph.num_nodes or not np.all(np.isfinite(pi)) or np.any(pi <= 0):
                raise ValueError("fidelity weights must be positive, finite and one per node")
        object.__setattr__(self, "similarities", s)
        object.__setattr__(self, "observed", Z)
        object.__setattr__(self, "fidelity", pi)

    @property
    def num_nodes(self) -> int:
        return self.graph.num_nodes

    @property
    def dim(self) -> int:
        return self.compat.dim

    @property
    def fidelity_weights(self) -> FloatArray:
        assert self.fidelity is not None
        return self.fidelity

    def similarity_matrix(self):
        return self.graph.to_sparse(self.similarities)
