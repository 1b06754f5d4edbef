"""Seeded synthetic instances for the CLI's synthetic input and for property checks."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import softmax

from crfconv.core.cloud import knn_graph, symmetrize
from crfconv.core.crf_continuous import pairwise_similarity
from crfconv.core.transform import identity_transform
from crfconv.models.cloud import FloatArray, IndexArray, NeighborGraph, PointCloud
from crfconv.models.crf import SimilarityField
from crfconv.models.energy import CompatibilityMatrix

# distance of the cluster centers from the origin, in units of the per-point spread
_CENTER_RADIUS = 3.0
_UNARY_CONFIDENCE = 2.0


@dataclass(frozen=True, eq=False)
class PlantedClusters:
    cloud: PointCloud
    truth: IndexArray
    probabilities: FloatArray


@dataclass(frozen=True, eq=False)
class RandomCrfInstance:
    cloud: PointCloud
    graph: NeighborGraph
    similarity: SimilarityField
    compat: CompatibilityMatrix
    Z: FloatArray


def planted_clusters(
    points: int, clusters: int, noise: float, labels: int | None = None, seed: int = 0
) -> PlantedClusters:
    """Gaussian blobs on a circle in the xy-plane.

    Features are the one-hot cluster indicator plus Gaussian noise of scale `noise`. Unary
    probabilities favor the true label, except for a `noise` fraction of points whose unary favors
    a wrong label.
    """
    if points < 1 or clusters < 1:
        raise ValueError("planted clusters need at least one point and one cluster")
    if not 0.0 <= noise < 1.0:
        raise ValueError(f"noise must lie in [0, 1), got {noise}")
    labels = clusters if labels is None else labels
    rng = np.random.default_rng(seed)
    cluster = np.arange(points) % clusters
    angles = 2.0 * np.pi * np.arange(clusters) / clusters
    centers = _CENTER_RADIUS * np.stack([np.cos(angles), np.sin(angles), np.zeros(clusters)], axis=1)
    positions = centers[cluster] + 0.5 * rng.standard_normal((points, 3))
    features = np.eye(clusters)[cluster] + noise * rng.standard_normal((points, clusters))
    truth = cluster % labels
    favored = truth.copy()
    if labels > 1:
        flipped = rng.random(points) < noise
        shift = rng.integers(1, labels, size=points)
        favored[flipped] = (truth[flipped] + shift[flipped]) % labels
    logits = _UNARY_CONFIDENCE * np.eye(labels)[favored] + 0.1 * rng.standard_normal((points, labels))
    return PlantedClusters(PointCloud(positions, features), truth.astype(np.int64), softmax(logits, axis=1))


def random_crf_instance(
    rng: np.random.Generator, num_nodes: int, dim: int, k: int = 4, guide_dim: int = 2
) -> RandomCrfInstance:
    """Symmetric kNN graph (every node has a neighbor once num_nodes >= 2), softmax similarities from a
    random guide, random c and observations."""
    cloud = PointCloud(rng.standard_normal((num_nodes, 3)), rng.standard_normal((num_nodes, guide_dim)))
    graph = symmetrize(knn_graph(cloud, min(k, max(num_nodes - 1, 1))))
    sim = pairwise_similarity(cloud.features, graph, identity_transform())
    compat = CompatibilityMatrix(rng.standard_normal((dim, dim)))
    Z = rng.standard_normal((num_nodes, dim))
    return RandomCrfInstance(cloud, graph, sim, compat, Z)
