"""
Shared pytest fixtures for all tests
"""
import statistics
import time
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Iterator, List, Optional

import numpy as np
import psutil
import pytest

from gfc_engine.config import config, configure_logging
from gfc_engine.kernels import PowerLaw, power_triple
from gfc_engine.quadrature import Grid, TestFunction


# ============================================================================
# Session-Level Fixtures
# ============================================================================

@pytest.fixture(scope="session", autouse=True)
def engine_logging():
    """Engine logs at WARNING unless LOG_LEVEL says otherwise"""
    configure_logging("WARNING" if config.LOG_LEVEL == "INFO" else config.LOG_LEVEL)


@pytest.fixture(scope="session")
def default_grid() -> Grid:
    """The shipped 512:2:2 grid"""
    return Grid(n=512, r=2.0, T=2.0)


@pytest.fixture(scope="session")
def coarse_grid() -> Grid:
    """Cheaper grid for checks that are exact for power laws"""
    return Grid(n=128, r=2.0, T=2.0)


@pytest.fixture
def reports_dir(tmp_path):
    """Per-test report database directory"""
    path = tmp_path / "reports"
    path.mkdir()
    return path


# ============================================================================
# Kernel Fixtures
# ============================================================================

@pytest.fixture
def power_pair():
    return PowerLaw(0.3), PowerLaw(0.7)


@pytest.fixture
def hilfer_triple():
    """(h_0.5, h_0.25, h_0.25)"""
    return power_triple(0.5, 0.25)


# ============================================================================
# Test Function Fixtures
# ============================================================================

@pytest.fixture
def exp_function() -> TestFunction:
    return TestFunction(np.exp, np.exp, 1.0, name="exp(t)")


@pytest.fixture
def identity_function() -> TestFunction:
    return TestFunction(lambda t: t, lambda t: np.ones_like(t), 0.0, name="t")


@pytest.fixture
def constant_function() -> TestFunction:
    return TestFunction(lambda t: np.ones_like(t), lambda t: np.zeros_like(t), 1.0, name="1")


# ============================================================================
# Performance Monitoring
# ============================================================================

@dataclass
class Measurement:
    """Wall time and resident set size around one engine call"""
    duration_s: float = 0.0
    rss_mb: float = 0.0
    rss_delta_mb: float = 0.0


class EngineMonitor:
    """Records a Measurement per measured block"""

    def __init__(self):
        self.process = psutil.Process()
        self.runs: List[Measurement] = []

    def _rss_mb(self) -> float:
        return self.process.memory_info().rss / 1024 / 1024

    @contextmanager
    def measure(self) -> Iterator[Measurement]:
        measurement = Measurement()
        before = self._rss_mb()
        started = time.perf_counter()
        try:
            yield measurement
        finally:
            measurement.duration_s = time.perf_counter() - started
            measurement.rss_mb = self._rss_mb()
            measurement.rss_delta_mb = measurement.rss_mb - before
            self.runs.append(measurement)

    @property
    def median_duration_s(self) -> float:
        return statistics.median(m.duration_s for m in self.runs)

    @property
    def max_rss_delta_mb(self) -> float:
        return max(m.rss_delta_mb for m in self.runs)

    def assert_within(self, measurement: Measurement, max_duration_s: Optional[float] = None,
                      max_rss_mb: Optional[float] = None) -> None:
        if max_duration_s is not None and measurement.duration_s > max_duration_s:
            raise AssertionError(f"took {measurement.duration_s:.2f}s (max: {max_duration_s}s)")
        if max_rss_mb is not None and measurement.rss_mb > max_rss_mb:
            raise AssertionError(f"resident {measurement.rss_mb:.0f}MB (max: {max_rss_mb}MB)")


@pytest.fixture
def performance_monitor() -> EngineMonitor:
    """Wall time and memory of engine calls"""
    return EngineMonitor()
