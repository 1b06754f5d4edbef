# continuous CRF
DEFAULT_EPSILON = 1e-4
DEFAULT_STEPS = 10
READOUT_SLOPE = 0.1
TRANSFORM_SLOPE = 0.01

# energy oracle
DENSE_SOLVE_LIMIT = 4096
RESIDUAL_TOLERANCE = 1e-8

# cloud
INTERPOLATION_K = 3
COINCIDENT_DISTANCE = 1e-12

# discrete CRF
PROBABILITY_FLOOR = 1e-12
SIMPLEX_TOLERANCE = 1e-9
PROBABILITY_ROW_TOLERANCE = 1e-6

# diffusion
DIFFUSION_COEFFICIENT = 0.5
STEADY_STATE_TOLERANCE = 1e-10

# similarity rows
ROW_SUM_TOLERANCE = 1e-9
