from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from crfconv.constants.defaults import SIMPLEX_TOLERANCE
from crfconv.models.cloud import FloatArray
from crfconv.models.enums.labels import CompatPreset


def _check_simplex(name: str, rows: FloatArray) -> None:
    if np.any(rows < 0) or np.any(np.abs(rows.sum(axis=1) - 1.0) > SIMPLEX_TOLERANCE):
        raise ValueError(f"every row of {name} must lie on the probability simplex")


@dataclass(frozen=True, eq=False)
class LabelField:
    """Unary probabilities p and approximate posterior q, both N x L."""

    p: FloatArray
    q: FloatArray

    def __post_init__(self) -> None:
        p = np.atleast_2d(np.asarray(self.p, dtype=np.float64))
        q = np.atleast_2d(np.asarray(self.q, dtype=np.float64))
        if p.shape != q.shape:
            raise ValueError(f"p and q disagree in shape: {p.shape} != {q.shape}")
        _check_simplex("p", p)
        _check_simplex("q", q)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @classmethod
    def from_unary(cls, p: FloatArray) -> LabelField:
        p = np.atleast_2d(np.asarray(p, dtype=np.float64))
        return cls(p, p.copy())

    @property
    def num_labels(self) -> int:
        return int(self.p.shape[1])

    def hard_labels(self) -> np.ndarray:
        return np.argmax(self.q, axis=1)


@dataclass(frozen=True, eq=False)
class KernelMixture:
    """Gaussian kernel mixture sum_m w_m exp(-||P_m^T f_i - P_m^T f_j||^2).

    Each entry of `projections` stores P_m^T, shape (d'_m, d).
    """

    projections: tuple[FloatArray, ...]
    weights: FloatArray

    def __post_init__(self) -> None:
        projections = tuple(np.atleast_2d(np.asarray(P, dtype=np.float64)) for P in self.projections)
        weights = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        if len(projections) != weights.size:
            raise ValueError("one mixture weight per kernel component is required")
        if len({P.shape[1] for P in projections}) > 1:
            raise ValueError("every projection must read the same feature dimension")
        if not np.all(np.isfinite(weights)) or not all(np.all(np.isfinite(P)) for P in projections):
            raise ValueError("kernel parameters must be finite")
        object.__setattr__(self, "projections", projections)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def default(cls, dim: int) -> KernelMixture:
        return cls((np.eye(dim),), np.ones(1))

    @property
    def in_dim(self) -> int | None:
        return int(self.projections[0].shape[1]) if self.projections else None

    @property
    def has_negative_weights(self) -> bool:
        return bool(np.any(self.weights < 0))


@dataclass(frozen=True, eq=False)
class LabelCompatibility:
    matrix: FloatArray
    preset: CompatPreset = CompatPreset.FILE

    def __post_init__(self) -> None:
        matrix = np.atleast_2d(np.asarray(self.matrix, dtype=np.float64))
        if matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"label compatibility must be square, got {matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("label compatibility contains NaN or Inf")
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "preset", CompatPreset(self.preset))

    @classmethod
    def identity(cls, num_labels: int) -> LabelCompatibility:
        return cls(np.eye(num_labels), CompatPreset.IDENTITY)

    @classmethod
    def potts_complement(cls, num_labels: int) -> LabelCompatibility:
        return cls(np.ones((num_labels, num_labels)) - np.eye(num_labels), CompatPreset.POTTS_COMPLEMENT)

    @property
    def num_labels(self) -> int:
        return int(self.matrix.shape[0])
