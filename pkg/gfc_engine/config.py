"""
Engine configuration
"""
import os
import logging
from pathlib import Path
from dataclasses import dataclass, field

logger = logging.getLogger("gfc_engine")

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def configure_logging(level: str = None) -> None:
    """Attach the engine's stream handler once; the CLI and the test suite call this."""
    level = (level or config.LOG_LEVEL).upper()
    if not any(getattr(h, "_gfc_engine", False) for h in logger.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._gfc_engine = True
        logger.addHandler(handler)
    logger.setLevel(level)


def _env_int(name: str, default: int) -> int:
    return int(os.getenv(name, default))


def _env_float(name: str, default: float) -> float:
    return float(os.getenv(name, default))


@dataclass
class EngineConfig:
    """Central numerical configuration for every module"""

    # Grid (nodes:grading:horizon)
    GRID_N: int = field(default_factory=lambda: _env_int("GFC_GRID_N", 512))
    GRADING: float = field(default_factory=lambda: _env_float("GFC_GRADING", 2.0))
    HORIZON: float = field(default_factory=lambda: _env_float("GFC_HORIZON", 2.0))
    MIN_GRID_NODES: int = 8

    # Series algebra
    SERIES_TRUNCATION: int = field(default_factory=lambda: _env_int("GFC_TRUNCATION", 24))
    SERIES_TERM_CUTOFF: float = 1e-17

    # Quadrature
    QUADRATURE_ORDER: int = field(default_factory=lambda: _env_int("GFC_QUAD_ORDER", 12))
    JACOBI_ORDER: int = 24
    DERIVATIVE_METHOD: str = os.getenv("GFC_DERIVATIVE_METHOD", "spline")
    WORKERS: int = field(default_factory=lambda: _env_int("GFC_WORKERS", 1))
    ROW_CHUNK: int = 64

    # Laplace transform
    LAPLACE_SPLIT: float = 0.5
    LAPLACE_DECAY: float = 40.0
    LAPLACE_TAIL_TOL: float = 1e-12
    LAPLACE_MAX_HORIZON: float = 400.0

    # Special function ranges
    ML_MAX_ARGUMENT: float = 50.0
    BESSEL_MAX_ARGUMENT: float = 20.0

    # Verification (engineering tolerances, not exact-math statements)
    RESIDUAL_WINDOW_FRACTION: float = 0.05
    TOL_POWER: float = 1e-8
    TOL_TRANSCENDENTAL: float = 1e-6
    TOL_THEOREM: float = 1e-4
    TOL_NULL_SPACE: float = 1e-5
    EXTRAPOLATION_TOL: float = 1e-6
    # Residuals below this are rounding noise; grid refinement may move them freely
    RESIDUAL_NOISE_FLOOR: float = 1e-12
    REFINEMENT_GROWTH: float = 1.1

    # Paths and logging
    REPORTS_DIR: Path = field(default_factory=lambda: Path(os.getenv("GFC_REPORTS_DIR", "reports")))
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")

    def default_grid(self):
        """Grid built from GRID_N, GRADING and HORIZON"""
        from gfc_engine.quadrature import Grid
        return Grid(n=self.GRID_N, r=self.GRADING, T=self.HORIZON)


# Global config instance
config = EngineConfig()
