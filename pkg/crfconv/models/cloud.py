from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from numpy.typing import NDArray

FloatArray = NDArray[np.float64]
IndexArray = NDArray[np.int64]


@dataclass(frozen=True, eq=False)
class PointCloud:
    """N points in 3D, each carrying a d-dimensional feature vector."""

    positions: FloatArray
    features: FloatArray

    def __post_init__(self) -> None:
        positions = np.asarray(self.positions, dtype=np.float64)
        if positions.size == 0:
            positions = positions.reshape(0, 3)
        if positions.ndim != 2 or positions.shape[1] != 3:
            raise ValueError(f"positions must have shape (N, 3), got {positions.shape}")
        features = np.asarray(self.features, dtype=np.float64)
        if features.ndim != 2:
            features = features.reshape(len(positions), -1)
        if features.shape[0] != positions.shape[0]:
            raise ValueError(
                f"positions and features disagree on N: {positions.shape[0]} != {features.shape[0]}"
            )
        if not (np.all(np.isfinite(positions)) and np.all(np.isfinite(features))):
            raise ValueError("point cloud contains NaN or Inf")
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "features", features)

    @classmethod
    def from_positions(cls, positions: FloatArray) -> PointCloud:
        positions = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
        return cls(positions, np.zeros((len(positions), 0)))

    @property
    def num_points(self) -> int:
        return int(self.positions.shape[0])

    @property
    def feature_dim(self) -> int:
        return int(self.features.shape[1])

    def subset(self, indices: IndexArray) -> PointCloud:
        return PointCloud(self.positions[indices], self.features[indices])


@dataclass(frozen=True, eq=False)
class NeighborGraph:
    """Directed adjacency stored row-compressed.

    Node i's ordered neighbor list is `indices[indptr[i]:indptr[i + 1]]`; `edge_weights`,
    when present, is aligned with `indices`.
    """

    indptr: IndexArray
    indices: IndexArray
    edge_weights: FloatArray | None = None

    def __post_init__(self) -> None:
        indptr = np.asarray(self.indptr, dtype=np.int64)
        indices = np.asarray(self.indices, dtype=np.int64).reshape(-1)
        if indptr.ndim != 1 or indptr.size == 0 or indptr[0] != 0 or np.any(np.diff(indptr) < 0):
            raise ValueError("indptr must start at 0 and be non-decreasing")
        if indptr[-1] != indices.size:
            raise ValueError("indptr does not cover the index array")
        num_nodes = indptr.size - 1
        if indices.size:
            if indices.min() < 0 or indices.max() >= num_nodes:
                raise ValueError("neighbor index out of range")
            rows = np.repeat(np.arange(num_nodes), np.diff(indptr))
            if np.any(rows == indices):
                raise ValueError("self-loops are not allowed")
            keys = rows * num_nodes + indices
            if np.unique(keys).size != keys.size:
                raise ValueError("duplicate neighbor within a node's list")
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "indices", indices)
        if self.edge_weights is not None:
            weights = np.asarray(self.edge_weights, dtype=np.float64).reshape(-1)
            if weights.shape != indices.shape:
                raise ValueError("edge_weights must align with neighbors")
            if not np.all(np.isfinite(weights)) or np.any(weights < 0):
                raise ValueError("edge_weights must be finite and nonnegative")
            object.__setattr__(self, "edge_weights", weights)

    @classmethod
    def from_lists(
        cls,
        neighbors: Sequence[Sequence[int]],
        edge_weights: Sequence[Sequence[float]] | None = None,
    ) -> NeighborGraph:
        counts = [len(row) for row in neighbors]
        indptr = np.concatenate([[0], np.cumsum(counts, dtype=np.int64)]).astype(np.int64)
        flat = [j for row in neighbors for j in row]
        weights = None
        if edge_weights is not None:
            weights = np.asarray([w for row in edge_weights for w in row], dtype=np.float64)
        return cls(indptr, np.asarray(flat, dtype=np.int64), weights)

    @classmethod
    def empty(cls, num_nodes: int) -> NeighborGraph:
        return cls(np.zeros(num_nodes + 1, dtype=np.int64), np.zeros(0, dtype=np.int64))

    @property
    def num_nodes(self) -> int:
        return int(self.indptr.size - 1)

    @property
    def num_edges(self) -> int:
        return int(self.indices.size)

    def neighbors(self, node: int) -> IndexArray:
        return self.indices[self.indptr[node]:self.indptr[node + 1]]

    def degrees(self) -> IndexArray:
        return np.diff(self.indptr)

    def sources(self) -> IndexArray:
        """Source node of every stored edge, aligned with `indices`."""
        return np.repeat(np.arange(self.num_nodes, dtype=np.int64), self.degrees())

    def with_weights(self, edge_weights: FloatArray | None) -> NeighborGraph:
        return NeighborGraph(self.indptr, self.indices, edge_weights)

    def to_sparse(self, values: FloatArray | None = None) -> sp.csr_matrix:
        """N x N CSR matrix with `values` (default: edge weights, else ones) on the edges."""
        if values is None:
            values = self.edge_weights if self.edge_weights is not None else np.ones(self.num_edges)
        n = self.num_nodes
        return sp.csr_matrix(
            (np.asarray(values, dtype=np.float64), self.indices.copy(), self.indptr.copy()), shape=(n, n)
        )

    def is_symmetric(self) -> bool:
        pattern = self.to_sparse(np.ones(self.num_edges))
        return (pattern != pattern.T).nnz == 0

    def permute(self, order: IndexArray) -> NeighborGraph:
        """Relabel nodes so that new node a is old node order[a]; list order is preserved."""
        order = np.asarray(order, dtype=np.int64)
        inverse = np.empty_like(order)
        inverse[order] = np.arange(order.size)
        rows = [inverse[self.neighbors(int(old))] for old in order]
        weights = None
        if self.edge_weights is not None:
            weights = [self.edge_weights[self.indptr[old]:self.indptr[old + 1]] for old in order]
        return NeighborGraph.from_lists([r.tolist() for r in rows], weights)


@dataclass(frozen=True, eq=False)
class SampleIndex:
    selected: IndexArray
    ratio: float

    def __post_init__(self) -> None:
        selected = np.asarray(self.selected, dtype=np.int64).reshape(-1)
        if not 0.0 < self.ratio <= 1.0:
            raise ValueError(f"ratio must lie in (0, 1], got {self.ratio}")
        if np.unique(selected).size != selected.size:
            raise ValueError("selected indices must be unique")
        object.__setattr__(self, "selected", selected)

    def __len__(self) -> int:
        return int(self.selected.size)
