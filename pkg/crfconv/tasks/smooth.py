from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from crfconv.core.cloud import write_cloud
from crfconv.core.crf_continuous import pairwise_similarity, readout, run_crf, trace_model
from crfconv.core.energy import evaluate_energy, solve_exact
from crfconv.core.transform import apply_transform
from crfconv.models import PointCloud
from crfconv.models.enums.crf import Assembly
from crfconv.schemas.config import RunConfig
from crfconv.tasks.common import (
    crf_config,
    crf_graph,
    guide_features,
    load_compat,
    load_input,
    load_transform,
    output_path,
    require_features,
)
from crfconv.utils.storage import write_table

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SmoothSummary:
    steps: int
    final_energy: float
    exact_deviation: float | None = None


def smooth_cloud(cfg: RunConfig) -> SmoothSummary:
    cloud = load_input(cfg).cloud
    features = require_features(cloud)
    graph = crf_graph(cfg, cloud)
    Z = apply_transform(load_transform(cfg.crf.unary_file), features)
    compat = load_compat(cfg.crf, Z.shape[1])
    crf_cfg = crf_config(cfg.crf, compat)
    sim = pairwise_similarity(guide_features(cloud, cfg.crf.guide), graph, load_transform(cfg.crf.projection_file))
    model = trace_model(sim, Z, compat)
    state = run_crf(Z, sim, crf_cfg, model)

    write_cloud(PointCloud(cloud.positions, readout(state.X, crf_cfg)), output_path(cfg, cfg.output.cloud), cfg.output.format)
    trace = (evaluate_energy(model, Z),) + state.energy_trace
    isolated = int(np.sum(graph.degrees() == 0))
    if isolated and state.t > 0:
        logger.warning(
            "trace row 0 is the energy of the input and precedes the first step, which moves %d isolated node(s) "
            "to (I + C)^-1 z; descent starts at step 1",
            isolated,
        )
    write_table(output_path(cfg, cfg.output.trace), ["step", "energy"], list(enumerate(trace)))

    deviation = None
    if cfg.crf.check_exact:
        if sim.is_reversible():
            exact = solve_exact(model, Assembly.ENERGY)
        else:
            exact = solve_exact(sim.normalized_model(Z, compat), Assembly.MESSAGE_PASSING)
        # isolated nodes sit at (I + C)^-1 z under message passing and at z in the minimizer
        connected = graph.degrees() > 0
        gap = np.abs(state.X[connected] - exact[connected])
        deviation = float(np.max(gap)) if gap.size else 0.0
        logger.info("max deviation from the exact minimizer after %d step(s): %.3e", state.t, deviation)
    return SmoothSummary(state.t, trace[-1], deviation)
