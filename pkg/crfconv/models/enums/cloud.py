from enum import Enum

class CloudFormat(str, Enum):
  PLY_ASCII = "ply-ascii"
  """PLY ascii 1.0, `element vertex` with float properties"""

  CSV_XYZ = "csv-xyz"
  """comma separated, no header, columns x,y,z[,f1..fd]"""

class GraphKind(str, Enum):
  KNN = "knn"
  """k nearest neighbors, ties broken by lower index"""

  DILATED_KNN = "dilated-knn"
  """every `dilation`-th of the k*dilation nearest neighbors"""

  RADIUS = "radius"
  """all points whose squared distance is within the radius"""
