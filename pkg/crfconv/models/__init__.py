from .cloud import NeighborGraph, PointCloud, SampleIndex
from .crf import ContinuousCrfState, CrfConfig, DenseLayer, PointwiseTransform, SimilarityField
from .diffusion import DiffusionComparison, DiffusionConfig, DiffusionReportRow
from .energy import CompatibilityMatrix, QuadraticEnergyModel
from .labels import KernelMixture, LabelCompatibility, LabelField

__all__ = [
    "PointCloud", "NeighborGraph", "SampleIndex",
    "CompatibilityMatrix", "QuadraticEnergyModel",
    "DenseLayer", "PointwiseTransform", "SimilarityField", "ContinuousCrfState", "CrfConfig",
    "LabelField", "KernelMixture", "LabelCompatibility",
    "DiffusionConfig", "DiffusionReportRow", "DiffusionComparison",
]
