from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from crfconv.core.cloud import dilated_knn_graph, knn_graph, radius_graph, read_cloud, symmetrize
from crfconv.core.errors import ShapeMismatchError, UnsupportedConfigurationError
from crfconv.core.transform import identity_transform
from crfconv.models import CompatibilityMatrix, CrfConfig, NeighborGraph, PointCloud, PointwiseTransform
from crfconv.models.cloud import FloatArray
from crfconv.models.enums.cloud import GraphKind
from crfconv.models.enums.crf import GuideSource
from crfconv.schemas.config import CrfSection, GraphConfig, RunConfig
from crfconv.utils.fixtures import PlantedClusters, planted_clusters
from crfconv.utils.storage import read_matrix, read_transform

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LoadedInput:
    cloud: PointCloud
    planted: PlantedClusters | None = None


def load_input(cfg: RunConfig) -> LoadedInput:
    if cfg.input.path is not None:
        return LoadedInput(read_cloud(cfg.input.path, cfg.input.format))
    synthetic = cfg.input.synthetic
    if synthetic is None:
        raise UnsupportedConfigurationError("no input: set input.path or an input.synthetic block")
    planted = planted_clusters(synthetic.points, synthetic.clusters, synthetic.noise, synthetic.labels, cfg.seed)
    logger.debug("generated %d synthetic points in %d clusters", synthetic.points, synthetic.clusters)
    return LoadedInput(planted.cloud, planted)


def output_path(cfg: RunConfig, name: str) -> Path:
    """Relative names resolve under output.dir; parent directories are created."""
    path = Path(name)
    if not path.is_absolute() and cfg.output.dir is not None:
        path = Path(cfg.output.dir) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def build_graph(graph_cfg: GraphConfig, cloud: PointCloud) -> NeighborGraph:
    if graph_cfg.kind == GraphKind.KNN:
        return knn_graph(cloud, graph_cfg.k)
    if graph_cfg.kind == GraphKind.DILATED_KNN:
        return dilated_knn_graph(cloud, graph_cfg.k, graph_cfg.dilation)
    assert graph_cfg.radius is not None
    return radius_graph(cloud, graph_cfg.radius)


def crf_graph(cfg: RunConfig, cloud: PointCloud) -> NeighborGraph:
    graph = build_graph(cfg.graph, cloud)
    return symmetrize(graph) if cfg.crf.symmetric_graph else graph


def guide_features(cloud: PointCloud, source: GuideSource) -> FloatArray:
    if source == GuideSource.FEATURES:
        return cloud.features
    if source == GuideSource.POSITIONS:
        return cloud.positions
    return np.hstack([cloud.positions, cloud.features])


def load_transform(path: str | None) -> PointwiseTransform:
    return read_transform(path) if path is not None else identity_transform()


def load_compat(section: CrfSection, dim: int) -> CompatibilityMatrix:
    if section.identity_compat:
        return CompatibilityMatrix.identity(dim)
    if section.compat_file is not None:
        c = read_matrix(section.compat_file)
        if c.shape != (dim, dim):
            raise ShapeMismatchError(f"compat file holds a {c.shape} matrix, features need ({dim}, {dim})")
        return CompatibilityMatrix(c, section.epsilon)
    return CompatibilityMatrix.default(dim, section.epsilon)


def crf_config(section: CrfSection, compat: CompatibilityMatrix, steps: int | None = None) -> CrfConfig:
    return CrfConfig(
        compat,
        steps=section.steps if steps is None else steps,
        schedule=section.schedule,
        convergence_tol=section.tol,
        readout=section.activation,
        readout_slope=section.slope,
    )


def require_features(cloud: PointCloud) -> FloatArray:
    if cloud.feature_dim == 0:
        raise UnsupportedConfigurationError("the input cloud carries no feature channels to process")
    return cloud.features
