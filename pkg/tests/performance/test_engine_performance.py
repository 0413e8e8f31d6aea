"""
Performance Benchmarking for the Engine

Timings and memory use of the hot paths:
- Product-integration convolution on the default grid
- Sonin pair residual checks
- The shipped verification suite

Run with:
    pytest tests/performance -v -m performance
    pytest tests/performance -v --benchmark-only
"""
import time

import pytest

from gfc_engine.config import config
from gfc_engine.kernels import PowerLaw, Tempered, TemperedAssociated
from gfc_engine.quadrature import Grid, convolve
from gfc_engine.verification import check_sonin_pair, default_suite, run_suite


@pytest.mark.performance
def test_convolution_benchmark(benchmark, default_grid, exp_function):
    """Single Tempered * exp convolution on 512:2:2"""
    result = benchmark(convolve, Tempered(0.5, 1.0), exp_function, default_grid)
    assert result.grid == default_grid


@pytest.mark.performance
def test_sonin_pair_under_one_second(performance_monitor, default_grid):
    """A catalog Sonin pair check stays interactive"""
    for _ in range(3):
        with performance_monitor.measure():
            report = check_sonin_pair(Tempered(0.5, 1.0), TemperedAssociated(0.5, 1.0), default_grid)
        assert report.passed

    median = performance_monitor.median_duration_s
    print(f"\n{'='*70}")
    print("SONIN PAIR CHECK (512:2:2)")
    print(f"  median {median:.3f}s, max {max(m.duration_s for m in performance_monitor.runs):.3f}s")
    print(f"  largest memory growth {performance_monitor.max_rss_delta_mb:.1f}MB")
    print(f"{'='*70}\n")
    assert median < 1.0, f"median {median:.2f}s (max: 1s)"
    # a 512-node check works on arrays of a few thousand doubles
    assert performance_monitor.max_rss_delta_mb < 256


@pytest.mark.performance
def test_runtime_scales_with_grid(default_exp_timer):
    """Doubling n costs about 4x (quadratic in n), with slack for timer noise"""
    small = default_exp_timer(Grid(256, 2.0, 2.0))
    large = default_exp_timer(Grid(512, 2.0, 2.0))
    print(f"\n256 nodes: {small:.3f}s, 512 nodes: {large:.3f}s, ratio {large / small:.2f}")
    assert large / small < 8.0


@pytest.fixture
def default_exp_timer(exp_function):
    def timer(grid: Grid) -> float:
        convolve(PowerLaw(0.5), exp_function, grid)  # warm the rule cache
        start = time.perf_counter()
        convolve(PowerLaw(0.5), exp_function, grid)
        return time.perf_counter() - start
    return timer


@pytest.mark.performance
@pytest.mark.slow
def test_default_suite_budget(performance_monitor):
    """The 14-check suite finishes within 30 s on the default grid"""
    with performance_monitor.measure() as measurement:
        reports = run_suite(default_suite(config.default_grid()))

    print(f"\n{'='*70}")
    print("DEFAULT SUITE")
    for report in sorted(reports, key=lambda r: r.elapsed_s, reverse=True)[:5]:
        print(f"  {report.name:<50} {report.elapsed_s:.3f}s")
    print(f"  total {measurement.duration_s:.2f}s, resident {measurement.rss_mb:.0f}MB "
          f"(+{measurement.rss_delta_mb:.1f}MB)")
    print(f"{'='*70}\n")

    assert all(r.passed for r in reports)
    performance_monitor.assert_within(measurement, max_duration_s=30, max_rss_mb=2048)
