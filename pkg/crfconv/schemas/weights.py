from typing import List, Tuple

from pydantic import field_validator, model_validator

from crfconv.constants.defaults import TRANSFORM_SLOPE
from crfconv.models.enums.crf import Activation
from crfconv.schemas.base import CommonModel

class LayerRecord(CommonModel):
  shape: Tuple[int, int]
  """(out, in)"""
  weight: List[float]
  """row-major, out * in values"""
  bias: List[float]
  activation: Activation = Activation.IDENTITY
  slope: float = TRANSFORM_SLOPE

  @field_validator("shape")
  @classmethod
  def _positive_shape(cls, shape: Tuple[int, int]) -> Tuple[int, int]:
    if shape[0] < 1 or shape[1] < 1:
      raise ValueError("layer shape entries must be >= 1")
    return shape

  @model_validator(mode="after")
  def _sizes_match(self) -> "LayerRecord":
    out_dim, in_dim = self.shape
    if len(self.weight) != out_dim * in_dim:
      raise ValueError(f"expected {out_dim * in_dim} weights for shape {self.shape}, got {len(self.weight)}")
    if len(self.bias) != out_dim:
      raise ValueError(f"expected {out_dim} biases, got {len(self.bias)}")
    return self

class TransformFile(CommonModel):
  layers: List[LayerRecord]

class KernelMixtureFile(TransformFile):
  mixture_weights: List[float]

  @model_validator(mode="after")
  def _components_are_projections(self) -> "KernelMixtureFile":
    if len(self.mixture_weights) != len(self.layers):
      raise ValueError("one mixture weight per layer is required")
    for layer in self.layers:
      if layer.activation != Activation.IDENTITY or any(b != 0.0 for b in layer.bias):
        raise ValueError("kernel projections must be linear: identity activation and zero bias")
    if len({layer.shape[1] for layer in self.layers}) > 1:
      raise ValueError("every kernel projection must read the same feature dimension")
    return self
