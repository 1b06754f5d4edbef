from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import List

import numpy as np

from crfconv.core.crf_continuous import pairwise_similarity, run_crf, trace_model
from crfconv.core.diffusion import diffusion_step
from crfconv.core.energy import evaluate_energy
from crfconv.core.transform import apply_transform
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
class SweepRow:
    steps: int
    energy: float
    fidelity: float
    diffusion_fidelity: float
    wall_time: float


def sweep_steps(cfg: RunConfig) -> List[SweepRow]:
    """Run the CRF from scratch for each step count next to the same number of diffusion steps."""
    cloud = load_input(cfg).cloud
    Z = apply_transform(load_transform(cfg.crf.unary_file), require_features(cloud))
    graph = crf_graph(cfg, cloud)
    compat = load_compat(cfg.crf, Z.shape[1])
    sim = pairwise_similarity(guide_features(cloud, cfg.crf.guide), graph, load_transform(cfg.crf.projection_file))
    model = trace_model(sim, Z, compat)
    weighted = sim.as_weighted_graph()

    rows: List[SweepRow] = []
    for T in sorted(set(cfg.sweep.steps)):
        started = time.perf_counter()
        state = run_crf(Z, sim, crf_config(cfg.crf, compat, T), model)
        wall_time = time.perf_counter() - started
        h = Z
        for _ in range(T):
            h = diffusion_step(h, weighted, cfg.diffusion.c)
        energy = state.energy_trace[-1] if state.energy_trace else evaluate_energy(model, Z)
        rows.append(
            SweepRow(T, energy, float(np.linalg.norm(state.X - Z)), float(np.linalg.norm(h - Z)), wall_time)
        )
        logger.debug("T=%d: energy %.6g after %d step(s) in %.3fs", T, energy, state.t, wall_time)

    header = ["T", "energy", "fidelity", "diffusion_fidelity"]
    if cfg.sweep.report_timing:
        header.append("wall_time")
    table = [
        (r.steps, r.energy, r.fidelity, r.diffusion_fidelity) + ((r.wall_time,) if cfg.sweep.report_timing else ())
        for r in rows
    ]
    write_table(output_path(cfg, cfg.output.sweep), header, table)
    return rows
