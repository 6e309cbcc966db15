import os
from dotenv import load_dotenv
load_dotenv()

# Exact lattice arithmetic
MAX_ENTRY = int(os.environ.get("TQ_MAX_ENTRY", 10**12))

# Polyhedral guards (desk scale)
MAX_AMBIENT_DIM = int(os.environ.get("TQ_MAX_AMBIENT_DIM", 4))
MAX_CHAMBER_RANK = int(os.environ.get("TQ_MAX_CHAMBER_RANK", 3))
MAX_CHAMBER_WEIGHTS = int(os.environ.get("TQ_MAX_CHAMBER_WEIGHTS", 24))
MAX_WALLS = int(os.environ.get("TQ_MAX_WALLS", 400))
MAX_CHAMBER_CELLS = int(os.environ.get("TQ_MAX_CHAMBER_CELLS", 20000))

# Kempf-Ness solver
KN_TOL = float(os.environ.get("TQ_KN_TOL", 1e-9))
KN_MAX_ITER = int(os.environ.get("TQ_KN_MAX_ITER", 200))
KN_NORM_BOUND = float(os.environ.get("TQ_KN_NORM_BOUND", 1e4))

EQUATION_TOL = float(os.environ.get("TQ_EQUATION_TOL", 1e-8))
PROBE_TOL = float(os.environ.get("TQ_PROBE_TOL", 1e-7))

LOG_LEVEL = os.environ.get("TQ_LOG_LEVEL", "WARNING")
