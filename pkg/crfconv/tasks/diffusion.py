from __future__ import annotations

import logging

from crfconv.core.crf_continuous import pairwise_similarity
from crfconv.core.diffusion import compare_crf_vs_diffusion
from crfconv.core.transform import apply_transform
from crfconv.models import DiffusionComparison, DiffusionConfig
from crfconv.schemas.config import RunConfig
from crfconv.tasks.common import crf_graph, guide_features, load_input, load_transform, output_path, require_features
from crfconv.utils.storage import write_table

logger = logging.getLogger(__name__)

REPORT_HEADER = ["step", "crf_fidelity", "crf_dirichlet", "diff_fidelity", "diff_dirichlet"]


def compare_diffusion(cfg: RunConfig) -> DiffusionComparison:
    cloud = load_input(cfg).cloud
    Z = apply_transform(load_transform(cfg.crf.unary_file), require_features(cloud))
    graph = crf_graph(cfg, cloud)
    sim = pairwise_similarity(guide_features(cloud, cfg.crf.guide), graph, load_transform(cfg.crf.projection_file))
    diffusion = DiffusionConfig(cfg.diffusion.c, cfg.diffusion.steps)
    comparison = compare_crf_vs_diffusion(Z, graph, sim, diffusion.steps_for(cloud.num_points), diffusion.c)
    rows = [
        (r.step, r.crf_fidelity, r.crf_dirichlet, r.diff_fidelity, r.diff_dirichlet) for r in comparison.rows
    ]
    write_table(output_path(cfg, cfg.output.report), REPORT_HEADER, rows)
    logger.info("step-1 max difference between CRF and diffusion: %.3e", comparison.step1_max_difference)
    return comparison
