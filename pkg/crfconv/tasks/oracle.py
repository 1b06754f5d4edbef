"""Self-checks of the message-passing layer against its closed-form and mean-field counterparts."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List

import numpy as np

from crfconv.core.crf_continuous import crf_step, mean_field_covariance, pairwise_similarity, run_crf, trace_model
from crfconv.core.energy import solve_exact
from crfconv.core.mean_field import coordinate_descent_update, mean_field_mean_update, model_covariance
from crfconv.core.transform import apply_transform
from crfconv.models import CompatibilityMatrix, ContinuousCrfState, CrfConfig, SimilarityField
from crfconv.models.enums.crf import Activation, Assembly, Schedule
from crfconv.schemas.config import RunConfig
from crfconv.tasks.common import (
    crf_graph,
    guide_features,
    load_compat,
    load_input,
    load_transform,
    output_path,
    require_features,
)
from crfconv.utils.fixtures import random_crf_instance
from crfconv.utils.storage import write_table

logger = logging.getLogger(__name__)

ORACLE_TOL = 1e-12
ORACLE_MAX_STEPS = 100_000
EXACT_RELATIVE_TOL = 1e-8
EQUIVALENCE_STEPS = 25
RANDOM_NODES = 20
RANDOM_DIM = 3


@dataclass(frozen=True)
class OracleCheck:
    check: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tolerance)


def _instance(cfg: RunConfig) -> tuple[SimilarityField, CompatibilityMatrix, np.ndarray]:
    if cfg.input.path is None and cfg.input.synthetic is None:
        instance = random_crf_instance(np.random.default_rng(cfg.seed), RANDOM_NODES, RANDOM_DIM)
        logger.debug("checking a random instance with %d nodes", RANDOM_NODES)
        return instance.similarity, instance.compat, instance.Z
    cloud = load_input(cfg).cloud
    Z = apply_transform(load_transform(cfg.crf.unary_file), require_features(cloud))
    graph = crf_graph(cfg, cloud)
    sim = pairwise_similarity(guide_features(cloud, cfg.crf.guide), graph, load_transform(cfg.crf.projection_file))
    return sim, load_compat(cfg.crf, Z.shape[1]), Z


def _max_abs(a: np.ndarray) -> float:
    return float(np.max(np.abs(a))) if a.size else 0.0


def run_oracle_checks(cfg: RunConfig) -> List[OracleCheck]:
    sim, compat, Z = _instance(cfg)
    model = trace_model(sim, Z, compat)
    reversible = sim.is_reversible()
    # message passing maps isolated nodes to (I + C)^-1 z while every minimizer keeps z
    connected = sim.graph.degrees() > 0
    if not np.all(connected):
        logger.warning("excluding %d node(s) without neighbors from the comparisons", int(np.sum(~connected)))
    scale = 1.0 + _max_abs(Z)
    checks: List[OracleCheck] = []

    solver_cfg = CrfConfig(
        compat, steps=ORACLE_MAX_STEPS, schedule=Schedule.JACOBI, convergence_tol=ORACLE_TOL, readout=Activation.IDENTITY
    )
    X = run_crf(Z, sim, solver_cfg, model).X
    if reversible:
        exact = solve_exact(model, Assembly.ENERGY)
    else:
        exact = solve_exact(sim.normalized_model(Z, compat), Assembly.MESSAGE_PASSING)
    X, exact = X[connected], exact[connected]
    relative = float(np.linalg.norm(X - exact) / max(np.linalg.norm(exact), np.finfo(np.float64).tiny))
    checks.append(OracleCheck("jacobi_vs_exact", relative, EXACT_RELATIVE_TOL))

    for schedule in (Schedule.JACOBI, Schedule.GAUSS_SEIDEL):
        cd = mf = Z.copy()
        gap = 0.0
        for _ in range(EQUIVALENCE_STEPS):
            cd = coordinate_descent_update(model, cd, schedule)
            mf = mean_field_mean_update(model, mf, schedule)
            gap = max(gap, _max_abs(cd - mf))
        checks.append(OracleCheck(f"mean_field_vs_coordinate_descent_{schedule.value}", gap, ORACLE_TOL * scale))

    if reversible:
        step_cfg = CrfConfig(compat, steps=1, schedule=Schedule.JACOBI, readout=Activation.IDENTITY)
        state = ContinuousCrfState.initial(Z)
        mf = Z.copy()
        gap = 0.0
        for _ in range(EQUIVALENCE_STEPS):
            state = crf_step(state, sim, step_cfg, model)
            mf = mean_field_mean_update(model, mf)
            gap = max(gap, _max_abs(state.X[connected] - mf[connected]))
        checks.append(OracleCheck("message_passing_vs_mean_field", gap, ORACLE_TOL * scale))
    else:
        logger.warning("similarity field is not reversible; skipping the message-passing vs mean-field check")

    sigma = mean_field_covariance(sim, compat)
    checks.append(OracleCheck("covariance_asymmetry", _max_abs(sigma - np.swapaxes(sigma, 1, 2)), 0.0))
    min_eig = float(np.min(np.linalg.eigvalsh(sigma))) if sigma.size else 1.0
    checks.append(OracleCheck("covariance_not_positive_definite", float(min_eig <= 0.0), 0.0))
    if reversible:
        scaled = model_covariance(model) * model.fidelity_weights[:, None, None]
        mismatch = _max_abs(scaled - sigma) / max(_max_abs(sigma), np.finfo(np.float64).tiny)
        checks.append(OracleCheck("covariance_vs_energy_model", mismatch, 1e-10))

    table = [(c.check, c.value, c.tolerance, int(c.passed)) for c in checks]
    write_table(output_path(cfg, cfg.output.oracle), ["check", "value", "tolerance", "passed"], table)
    for c in checks:
        log = logger.info if c.passed else logger.error
        log("%s: %.3e (tolerance %.1e)", c.check, c.value, c.tolerance)
    return checks
