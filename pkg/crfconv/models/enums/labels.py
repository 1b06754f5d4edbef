from enum import Enum

class CompatPreset(str, Enum):
  IDENTITY = "identity"
  """C = I, the literal compatibility of the compact mean-field update"""

  POTTS_COMPLEMENT = "potts-complement"
  """C = 11^T - I, the Potts penalty (0 for equal labels, 1 otherwise)"""

  FILE = "learned-from-file"
  """L x L matrix read from a CSV file"""
