from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import List, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from crfconv.constants.defaults import COINCIDENT_DISTANCE, INTERPOLATION_K
from crfconv.core.errors import ShapeMismatchError
from crfconv.core.parallel import for_each_chunk
from crfconv.models.cloud import FloatArray, IndexArray, NeighborGraph, PointCloud, SampleIndex
from crfconv.models.enums.cloud import CloudFormat
from crfconv.utils.storage import build_storage

logger = logging.getLogger(__name__)

# rows of the distance matrix held in memory at once
_DISTANCE_BLOCK = 1024


def read_cloud(path: str | Path, format: CloudFormat | str) -> PointCloud:
    cloud = build_storage(format).load(path)
    logger.debug("read %d points with %d feature channels from %s", cloud.num_points, cloud.feature_dim, path)
    return cloud


def write_cloud(cloud: PointCloud, path: str | Path, format: CloudFormat | str) -> None:
    build_storage(format).save(cloud, path)


def _sorted_rows(positions: FloatArray, start: int, stop: int) -> tuple[FloatArray, IndexArray]:
    """Squared distances from nodes start..stop to every node, self set to inf, plus the stable sort order."""
    d2 = cdist(positions[start:stop], positions, metric="sqeuclidean")
    rows = np.arange(stop - start)
    d2[rows, rows + start] = np.inf
    # stable sort: equal distances keep ascending node index
    order = np.argsort(d2, axis=1, kind="stable")
    return d2, order


def _ranked_graph(cloud: PointCloud, ranks: IndexArray) -> NeighborGraph:
    """Graph keeping, for every node, the neighbors at the given 0-based distance ranks."""
    n = cloud.num_points
    picked = np.empty((n, ranks.size), dtype=np.int64)

    def fill(start: int, stop: int) -> None:
        for lo in range(start, stop, _DISTANCE_BLOCK):
            hi = min(stop, lo + _DISTANCE_BLOCK)
            _, order = _sorted_rows(cloud.positions, lo, hi)
            picked[lo:hi] = order[:, ranks]

    for_each_chunk(n, fill)
    indptr = np.arange(n + 1, dtype=np.int64) * ranks.size
    return NeighborGraph(indptr, picked.reshape(-1))


def knn_graph(cloud: PointCloud, k: int) -> NeighborGraph:
    if cloud.num_points < 1 or k < 1:
        raise ValueError(f"knn_graph needs N >= 1 and k >= 1, got N={cloud.num_points}, k={k}")
    kk = min(k, cloud.num_points - 1)
    return _ranked_graph(cloud, np.arange(kk, dtype=np.int64))


def dilated_knn_graph(cloud: PointCloud, k: int, dil: int) -> NeighborGraph:
    """Keeps distance ranks dil, 2*dil, ..., k*dil, truncated to the N - 1 available candidates."""
    if cloud.num_points < 1 or k < 1 or dil < 1:
        raise ValueError(
            f"dilated_knn_graph needs N >= 1, k >= 1, dil >= 1, got N={cloud.num_points}, k={k}, dil={dil}"
        )
    candidates = min(k * dil, cloud.num_points - 1)
    return _ranked_graph(cloud, np.arange(dil - 1, candidates, dil, dtype=np.int64))


def radius_graph(cloud: PointCloud, r: float) -> NeighborGraph:
    """Neighbors within squared distance r, nearest first."""
    if not r > 0:
        raise ValueError(f"radius must be positive, got {r}")
    n = cloud.num_points
    lists: List[IndexArray] = [np.zeros(0, dtype=np.int64)] * n

    def fill(start: int, stop: int) -> None:
        for lo in range(start, stop, _DISTANCE_BLOCK):
            hi = min(stop, lo + _DISTANCE_BLOCK)
            d2, order = _sorted_rows(cloud.positions, lo, hi)
            for row in range(hi - lo):
                ranked = order[row]
                lists[lo + row] = ranked[d2[row, ranked] <= r]

    for_each_chunk(n, fill)
    counts = np.array([a.size for a in lists], dtype=np.int64)
    indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    indices = np.concatenate(lists) if n else np.zeros(0, dtype=np.int64)
    return NeighborGraph(indptr, indices.astype(np.int64))


def sample_size(num_points: int, ratio: float) -> int:
    # shaving a few ulps keeps 0.1 * 30 = 3.0000000000000004 at 3
    return max(1, math.ceil(ratio * num_points * (1.0 - 4.0 * np.finfo(np.float64).eps)))


def farthest_point_sample(cloud: PointCloud, ratio: float, seed_index: int = 0) -> SampleIndex:
    n = cloud.num_points
    if n < 1:
        raise ValueError("farthest_point_sample needs a non-empty cloud")
    if not 0 <= seed_index < n:
        raise ValueError(f"seed_index {seed_index} out of range for N={n}")
    if not 0.0 < ratio <= 1.0:
        raise ValueError(f"ratio must lie in (0, 1], got {ratio}")
    m = sample_size(n, ratio)
    positions = cloud.positions
    selected = np.empty(m, dtype=np.int64)
    selected[0] = seed_index
    nearest = cdist(positions[[seed_index]], positions, metric="sqeuclidean")[0]
    nearest[seed_index] = -np.inf
    for t in range(1, m):
        # argmax returns the lowest index among ties
        pick = int(np.argmax(nearest))
        selected[t] = pick
        np.minimum(nearest, cdist(positions[[pick]], positions, metric="sqeuclidean")[0], out=nearest)
        nearest[selected[: t + 1]] = -np.inf
    logger.debug("farthest point sampling kept %d of %d points", m, n)
    return SampleIndex(selected, ratio)


def interpolation_weights(
    coarse_positions: FloatArray, fine_positions: FloatArray, k: int = INTERPOLATION_K
) -> tuple[IndexArray, FloatArray]:
    """Per fine point: indices of the nearest coarse points and their normalized weights.

    Weights are proportional to inverse squared distance; a fine point within 1e-12 of a coarse
    point puts all weight on that point.
    """
    coarse_positions = np.asarray(coarse_positions, dtype=np.float64).reshape(-1, 3)
    fine_positions = np.asarray(fine_positions, dtype=np.float64).reshape(-1, 3)
    if coarse_positions.shape[0] < 1 or k < 1:
        raise ValueError("interpolation needs at least one coarse point and k >= 1")
    kk = min(k, coarse_positions.shape[0])
    d2 = cdist(fine_positions, coarse_positions, metric="sqeuclidean")
    order = np.argsort(d2, axis=1, kind="stable")[:, :kk]
    nearest = np.take_along_axis(d2, order, axis=1)
    coincident = nearest[:, 0] < COINCIDENT_DISTANCE**2
    safe = np.where(coincident[:, None], 1.0, nearest)
    weights = 1.0 / safe
    weights /= weights.sum(axis=1, keepdims=True)
    weights[coincident] = 0.0
    weights[coincident, 0] = 1.0
    return order.astype(np.int64), weights


def knn_interpolate(coarse: PointCloud, fine_positions: FloatArray, k: int = INTERPOLATION_K) -> FloatArray:
    order, weights = interpolation_weights(coarse.positions, fine_positions, k)
    features = np.einsum("fk,fkd->fd", weights, coarse.features[order])
    # exact copies where a fine point sits on a coarse one
    exact = weights[:, 0] == 1.0
    features[exact] = coarse.features[order[exact, 0]]
    return features


def symmetrize(graph: NeighborGraph) -> NeighborGraph:
    """Undirected closure of the edge set; lists sorted by node index, weights dropped."""
    pattern = graph.to_sparse(np.ones(graph.num_edges))
    closed = (pattern + pattern.T).tocsr()
    closed.sort_indices()
    return NeighborGraph(closed.indptr.astype(np.int64), closed.indices.astype(np.int64))


def build_hierarchy(
    cloud: PointCloud, ratios: Sequence[float], seed_index: int = 0
) -> List[tuple[PointCloud, SampleIndex]]:
    """Levels of repeated farthest point sampling; each level's indices refer to the level before it."""
    levels: List[tuple[PointCloud, SampleIndex]] = []
    current = cloud
    seed = seed_index
    for ratio in ratios:
        sample = farthest_point_sample(current, ratio, seed)
        current = current.subset(sample.selected)
        levels.append((current, sample))
        seed = 0
    return levels


def graph_edges(graph: NeighborGraph, cloud: PointCloud) -> List[tuple[int, int, float]]:
    if graph.num_nodes != cloud.num_points:
        raise ShapeMismatchError(f"graph has {graph.num_nodes} nodes but the cloud has {cloud.num_points} points")
    sources = graph.sources()
    distances = np.linalg.norm(cloud.positions[sources] - cloud.positions[graph.indices], axis=1)
    return [(int(i), int(j), float(dist)) for i, j, dist in zip(sources, graph.indices, distances)]
