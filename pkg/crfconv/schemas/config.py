import json
from pathlib import Path
from typing import Any, Dict, List

from pydantic import Field, field_validator, model_validator

from crfconv.constants.defaults import (
  DEFAULT_EPSILON,
  DEFAULT_STEPS,
  DIFFUSION_COEFFICIENT,
  READOUT_SLOPE,
)
from crfconv.models.enums.cloud import CloudFormat, GraphKind
from crfconv.models.enums.crf import Activation, GuideSource, Schedule
from crfconv.models.enums.labels import CompatPreset
from crfconv.schemas.base import CommonModel

class SyntheticConfig(CommonModel):
  points: int = Field(300, ge=1)
  clusters: int = Field(3, ge=1)
  noise: float = Field(0.1, ge=0.0, lt=1.0)
  labels: int | None = Field(None, ge=1)
  """label count of the planted unaries; defaults to the cluster count"""

class InputConfig(CommonModel):
  path: str | None = None
  format: CloudFormat = CloudFormat.CSV_XYZ
  synthetic: SyntheticConfig | None = None
  probabilities: str | None = None
  """N x L unary probabilities CSV for refine-labels"""

  @model_validator(mode="after")
  def _one_source(self) -> "InputConfig":
    if self.path is not None and self.synthetic is not None:
      raise ValueError("input takes either a path or a synthetic block, not both")
    return self

class OutputConfig(CommonModel):
  dir: str | None = None
  format: CloudFormat = CloudFormat.CSV_XYZ
  cloud: str = "smoothed.csv"
  graph: str = "graph.csv"
  samples: str = "samples.csv"
  trace: str = "trace.csv"
  probabilities: str = "refined.csv"
  labels: str = "labels.csv"
  report: str = "report.csv"
  sweep: str = "sweep.csv"
  oracle: str = "oracle.csv"

class GraphConfig(CommonModel):
  kind: GraphKind = GraphKind.KNN
  k: int = Field(16, ge=1)
  dilation: int = Field(1, ge=1)
  radius: float | None = Field(None, gt=0)
  """squared-distance threshold of the radius graph"""
  sample_ratio: float = Field(1.0, gt=0.0, le=1.0)

  @model_validator(mode="after")
  def _radius_given(self) -> "GraphConfig":
    if self.kind == GraphKind.RADIUS and self.radius is None:
      raise ValueError("graph.radius is required when graph.kind is 'radius'")
    return self

class CrfSection(CommonModel):
  steps: int = Field(DEFAULT_STEPS, ge=1)
  schedule: Schedule = Schedule.JACOBI
  epsilon: float = Field(DEFAULT_EPSILON, gt=0)
  activation: Activation = Activation.LEAKY_RELU
  """readout activation"""
  slope: float = READOUT_SLOPE
  tol: float = Field(0.0, ge=0)
  """+inf performs no step; NaN is rejected"""
  guide: GuideSource = GuideSource.FEATURES
  unary_file: str | None = None
  projection_file: str | None = None
  compat_file: str | None = None
  """d x d CSV holding c"""
  identity_compat: bool = False
  symmetric_graph: bool = True
  check_exact: bool = False

  @field_validator("epsilon", "slope")
  @classmethod
  def _finite(cls, value: float) -> float:
    if value != value or value in (float("inf"), float("-inf")):
      raise ValueError("must be finite")
    return value

class DiscreteConfig(CommonModel):
  labels: int | None = Field(None, ge=1)
  steps: int = Field(5, ge=1)
  compat: CompatPreset = CompatPreset.POTTS_COMPLEMENT
  compat_file: str | None = None
  kernel_file: str | None = None
  zero_kernel: bool = False
  guide: GuideSource = GuideSource.POSITIONS_AND_FEATURES

  @model_validator(mode="after")
  def _file_for_learned(self) -> "DiscreteConfig":
    if self.compat == CompatPreset.FILE and self.compat_file is None:
      raise ValueError("discrete.compatFile is required for the learned-from-file preset")
    return self

class DiffusionSection(CommonModel):
  c: float = Field(DIFFUSION_COEFFICIENT, gt=0, le=1)
  steps: int | None = Field(None, ge=1)

class SweepConfig(CommonModel):
  steps: List[int] = Field(default_factory=lambda: [1, 2, 5, 10, 20, 50])
  report_timing: bool = False

  @field_validator("steps")
  @classmethod
  def _positive(cls, steps: List[int]) -> List[int]:
    if not steps or any(t < 1 for t in steps):
      raise ValueError("sweep steps must be a non-empty list of counts >= 1")
    return steps

class RunConfig(CommonModel):
  input: InputConfig = Field(default_factory=InputConfig)
  output: OutputConfig = Field(default_factory=OutputConfig)
  graph: GraphConfig = Field(default_factory=GraphConfig)
  crf: CrfSection = Field(default_factory=CrfSection)
  discrete: DiscreteConfig = Field(default_factory=DiscreteConfig)
  diffusion: DiffusionSection = Field(default_factory=DiffusionSection)
  sweep: SweepConfig = Field(default_factory=SweepConfig)
  seed: int = 0
  threads: int = Field(1, ge=1)


def _merge(base: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
  merged = dict(base)
  for key, value in overrides.items():
    if isinstance(value, dict) and isinstance(merged.get(key), dict):
      merged[key] = _merge(merged[key], value)
    else:
      merged[key] = value
  return merged

def load_run_config(path: str | Path | None, overrides: Dict[str, Any] | None = None) -> RunConfig:
  """Read a JSON config (Infinity allowed) and apply overrides; overrides win."""
  document: Dict[str, Any] = {}
  if path is not None:
    with open(path, "r", encoding="utf-8") as f:
      document = json.load(f)
    if not isinstance(document, dict):
      raise ValueError(f"config {path} must hold a JSON object")
  if overrides:
    base = RunConfig.model_validate(document).model_dump(by_alias=True, exclude_unset=True)
    document = _merge(base, overrides)
  return RunConfig.model_validate(document)
