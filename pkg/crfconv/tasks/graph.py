from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from crfconv.core.cloud import farthest_point_sample, graph_edges
from crfconv.schemas.config import RunConfig
from crfconv.tasks.common import build_graph, load_input, output_path
from crfconv.utils.storage import write_table

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GraphSummary:
    num_nodes: int
    num_edges: int
    sampled: bool


def build_graph_file(cfg: RunConfig) -> GraphSummary:
    cloud = load_input(cfg).cloud
    sampled = cfg.graph.sample_ratio < 1.0
    if sampled:
        seed_index = int(np.random.default_rng(cfg.seed).integers(cloud.num_points))
        sample = farthest_point_sample(cloud, cfg.graph.sample_ratio, seed_index)
        write_table(output_path(cfg, cfg.output.samples), ["index"], [(int(i),) for i in sample.selected])
        cloud = cloud.subset(sample.selected)
    graph = build_graph(cfg.graph, cloud)
    write_table(output_path(cfg, cfg.output.graph), ["src", "dst", "distance"], graph_edges(graph, cloud))
    logger.info("wrote %d edges over %d nodes", graph.num_edges, graph.num_nodes)
    return GraphSummary(graph.num_nodes, graph.num_edges, sampled)
