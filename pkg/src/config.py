import os
from dotenv import load_dotenv

load_dotenv()

APP_NAME = "potensor"
APP_VERSION = "1.0.0"

# Logging
LOG_LEVEL = os.getenv("POTENSOR_LOG_LEVEL", "INFO")

# Solver defaults (overridable per run through SolverConfig)
DEFAULT_MAX_SWEEPS = int(os.getenv("POTENSOR_MAX_SWEEPS", "5000"))
DEFAULT_TOL_STEP = float(os.getenv("POTENSOR_TOL_STEP", "1e-10"))
DEFAULT_TOL_KKT = float(os.getenv("POTENSOR_TOL_KKT", "1e-8"))
DEFAULT_INIT_RETRIES = int(os.getenv("POTENSOR_INIT_RETRIES", "20"))

# Relative proximal parameter: epsilon = EPSILON_SCALE * ||A|| when unset
EPSILON_SCALE = 1e-3


def get_thread_cap() -> int:
    """Read the experiment fan-out cap, at call time so tests can patch the env"""
    try:
        value = int(os.getenv("POTENSOR_THREADS", "4"))
    except ValueError:
        return 1
    return max(1, value)
