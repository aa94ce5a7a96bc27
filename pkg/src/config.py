"""
Configuration management for charflow
"""

import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()


def _default_threads() -> int:
    return os.cpu_count() or 1


class Config:
    """Application configuration"""

    # Application Configuration
    LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
    OUTPUT_DIR = os.getenv("CHARFLOW_OUTPUT_DIR", "runs")

    # Worker pool
    THREADS = int(os.getenv("CHARFLOW_THREADS", str(_default_threads())))

    # Numerical defaults
    FD_STEP = float(os.getenv("CHARFLOW_FD_STEP", "1e-4"))
    INTEGRATOR_TOL = float(os.getenv("CHARFLOW_TOL", "1e-9"))
    ORBIT_TOL = float(os.getenv("CHARFLOW_ORBIT_TOL", "1e-6"))
    MAX_STEPS = int(os.getenv("CHARFLOW_MAX_STEPS", "2000000"))

    # Quadrature
    GRID_RESOLUTION = int(os.getenv("CHARFLOW_GRID_RESOLUTION", "32"))
    MC_SAMPLES = int(os.getenv("CHARFLOW_MC_SAMPLES", "200000"))

    # Contact certification
    LP_COEFFICIENT_BOUND = float(os.getenv("CHARFLOW_LP_BOUND", "1.0"))

    # Unique-ergodicity thresholds
    UE_FAIL_THRESHOLD = 0.1
    UE_DECAY_FACTOR = 0.5

    # Report layout
    REPORT_SCHEMA_VERSION = 1
    SUPPORTED_FORMATS = ["json", "csv", "plotdata"]

    @classmethod
    def worker_count(cls) -> int:
        """Worker cap honoured by every parallel section"""
        return max(1, cls.THREADS)

    @classmethod
    def validate(cls) -> bool:
        """Validate configuration"""
        if cls.THREADS < 1:
            raise ValueError("CHARFLOW_THREADS must be at least 1")
        if cls.FD_STEP <= 0:
            raise ValueError("CHARFLOW_FD_STEP must be positive")
        if cls.INTEGRATOR_TOL <= 0 or cls.ORBIT_TOL <= 0:
            raise ValueError("tolerances must be positive")
        if cls.MAX_STEPS < 1:
            raise ValueError("CHARFLOW_MAX_STEPS must be at least 1")
        if cls.GRID_RESOLUTION < 4:
            raise ValueError("CHARFLOW_GRID_RESOLUTION must be at least 4")
        if cls.MC_SAMPLES < 16:
            raise ValueError("CHARFLOW_MC_SAMPLES must be at least 16")
        if cls.LP_COEFFICIENT_BOUND <= 0:
            raise ValueError("CHARFLOW_LP_BOUND must be positive")
        return True
