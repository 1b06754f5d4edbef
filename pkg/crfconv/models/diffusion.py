from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from crfconv.constants.defaults import DIFFUSION_COEFFICIENT


@dataclass(frozen=True)
class DiffusionConfig:
    c: float = DIFFUSION_COEFFICIENT
    steps: int | None = None

    def __post_init__(self) -> None:
        if not (np.isfinite(self.c) and self.c > 0):
            raise ValueError(f"diffusion coefficient must be positive and finite, got {self.c}")
        if self.c > 1:
            # explicit Euler on I - D^-1 W is only guaranteed stable up to c = 1
            raise ValueError(f"diffusion coefficient must be <= 1, got {self.c}")
        if self.steps is not None and self.steps < 0:
            raise ValueError(f"steps must be >= 0, got {self.steps}")

    def steps_for(self, num_nodes: int) -> int:
        return self.steps if self.steps is not None else 10 * num_nodes


@dataclass(frozen=True)
class DiffusionReportRow:
    step: int
    crf_fidelity: float
    crf_dirichlet: float
    diff_fidelity: float
    diff_dirichlet: float


@dataclass(frozen=True)
class DiffusionComparison:
    rows: tuple[DiffusionReportRow, ...]
    step1_max_difference: float
