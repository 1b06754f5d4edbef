from enum import Enum

class Schedule(str, Enum):
  JACOBI = "jacobi"
  """every node reads the previous iterate (message step reads h^(t-1))"""

  GAUSS_SEIDEL = "gauss-seidel"
  """nodes are updated in place, in node order"""

class Activation(str, Enum):
  IDENTITY = "identity"
  """y = x"""

  RELU = "relu"
  """y = max(x, 0)"""

  LEAKY_RELU = "leaky-relu"
  """y = x if x > 0 else slope * x"""

class GuideSource(str, Enum):
  FEATURES = "features"
  """pairwise net reads the per-point feature vectors"""

  POSITIONS = "positions"
  """pairwise net reads the xyz coordinates"""

  POSITIONS_AND_FEATURES = "positions-and-features"
  """pairwise net reads xyz followed by the feature vector"""

class Assembly(str, Enum):
  ENERGY = "energy"
  """system built from the gradient of the implemented energy (w_ij + w_ji)"""

  MESSAGE_PASSING = "message-passing"
  """directed system whose solution is the fixed point of the coordinate update"""
