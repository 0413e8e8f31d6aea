"""
Verification
============

Executable residual checks for the identities of general fractional
calculus:

1. Sonin condition (kappa * k)(t) = 1
2. First-level triple condition (kappa * k1 * k2)(t) = 1
3. First and second fundamental theorems for the first-level derivative
4. Index law of power-law integrals
5. Laplace-domain triple relation
6. Null space and right inverse of the first-level derivative

Every check returns a ResidualReport; run_suite never aborts on a single
failure. Tolerances are engineering choices, not analytic error bounds.
"""
import math
import time
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from gfc_engine.config import config
from gfc_engine.errors import EngineError, ParameterRangeError
from gfc_engine.kernels import (
    H0,
    BesselK,
    BesselKappa,
    Kernel,
    KernelTriple,
    MLK,
    MLKappa,
    PowerLaw,
    Tempered,
    TemperedAssociated,
    laplace_transform,
    power_triple,
    third_kernel,
)
from gfc_engine.operators import (
    apply_gfd_1l,
    apply_gfd_rl,
    apply_gfi,
    apply_rl_integral,
    power_kernel,
    projector_1l,
)
from gfc_engine.quadrature import Grid, GridFunction, TestFunction, convolve, kernel_on_grid

logger = logging.getLogger("gfc_engine.verification")


class CheckKind(Enum):
    """Kinds of executable identity checks"""
    SONIN = "sonin"
    TRIPLE = "triple"
    FT1 = "ft1"
    FT2 = "ft2"
    INDEX = "index"
    LAPLACE = "laplace"
    NULL_SPACE = "null_space"
    RIGHT_INVERSE = "right_inverse"


@dataclass
class CheckSpec:
    """One check: its kind, tolerance, grid and named inputs"""
    name: str
    kind: CheckKind
    tolerance: float
    grid: Optional[Grid] = None
    inputs: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ParameterRangeError(f"check {self.name}: tolerance must be positive, got {self.tolerance}")


@dataclass
class ResidualReport:
    """Outcome of a single check"""
    name: str
    kind: str
    tolerance: float
    max_residual: float
    rms_residual: float
    nodes_evaluated: int

    # Max residual over the nodes t < window start, reported apart
    near_origin_max: Optional[float] = None
    window_start: Optional[float] = None
    grid: Optional[str] = None
    elapsed_s: float = 0.0
    error_code: Optional[str] = None
    notes: List[str] = field(default_factory=list)

    # Node-wise residuals for CSV output, not serialized
    abscissae: Optional[np.ndarray] = field(default=None, repr=False)
    residuals: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        """max_residual <= tolerance"""
        return bool(self.max_residual <= self.tolerance)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization"""
        result = asdict(self)
        result.pop("abscissae")
        result.pop("residuals")
        result["passed"] = self.passed
        for key in ("max_residual", "rms_residual", "near_origin_max"):
            value = result[key]
            if value is not None and not math.isfinite(value):
                result[key] = None
        return result

    def residual_frame(self) -> pd.DataFrame:
        if self.residuals is None:
            return pd.DataFrame(columns=["t", "residual"])
        return pd.DataFrame({"t": self.abscissae, "residual": self.residuals})


@dataclass
class SuiteResult:
    """Result of a complete suite run"""
    suite_name: str
    grid: str
    reports: List[ResidualReport] = field(default_factory=list)
    total_time_s: float = 0.0
    generated_at: str = field(default_factory=lambda: datetime.now().isoformat())

    @property
    def passed_checks(self) -> int:
        return sum(1 for r in self.reports if r.passed)

    @property
    def passed(self) -> bool:
        return self.passed_checks == len(self.reports)

    def to_dict(self) -> Dict[str, Any]:
        total = len(self.reports)
        return {
            "suite_name": self.suite_name,
            "grid": self.grid,
            "generated_at": self.generated_at,
            "summary": {
                "total_checks": total,
                "passed": self.passed_checks,
                "failed": total - self.passed_checks,
                "pass_rate": f"{(self.passed_checks / total) * 100:.1f}%" if total > 0 else "N/A",
            },
            "timing": {"total_time_s": round(self.total_time_s, 3)},
            "reports": [r.to_dict() for r in self.reports],
        }


# ============================================================================
# Residual helpers
# ============================================================================

def _window_report(name: str, kind: CheckKind, tol: float, grid: Grid,
                   residual: np.ndarray, notes: Optional[List[str]] = None) -> ResidualReport:
    nodes = grid.nodes
    start = config.RESIDUAL_WINDOW_FRACTION * grid.T
    inside = nodes >= start
    window = np.abs(residual[inside])
    near = np.abs(residual[~inside])
    max_residual = float(window.max()) if window.size else math.inf
    report = ResidualReport(
        name=name,
        kind=kind.value,
        tolerance=tol,
        max_residual=max_residual,
        rms_residual=float(np.sqrt(np.mean(window ** 2))) if window.size else math.inf,
        nodes_evaluated=int(window.size),
        near_origin_max=float(near.max()) if near.size else None,
        window_start=start,
        grid=str(grid),
        notes=list(notes or []),
        abscissae=nodes.copy(),
        residuals=np.asarray(residual, dtype=float).copy(),
    )
    logger.info("%s: max residual %.3e (tolerance %.1e) %s",
                name, report.max_residual, tol, "PASS" if report.passed else "FAIL")
    return report


def _non_identity(kernels: Sequence[Kernel]) -> List[Kernel]:
    members = [k for k in kernels if not isinstance(k, H0)]
    skipped = len(kernels) - len(members)
    if skipped:
        logger.warning("skipping %d h0 member(s)", skipped)
    return members


def _convolve_all(kernels: Sequence[Kernel], grid: Grid) -> GridFunction:
    """Grid values of the convolution of all non-h0 kernels"""
    members = _non_identity(kernels)
    if not members:
        raise ParameterRangeError("convolution of h0 kernels only has no pointwise value")
    if len(members) == 1:
        return kernel_on_grid(members[0], grid)
    result = convolve(members[-2], members[-1], grid)
    for kernel in reversed(members[:-2]):
        result = convolve(kernel, result, grid)
    return result


def _grid_or_default(grid: Optional[Grid]) -> Grid:
    return grid if grid is not None else config.default_grid()


# ============================================================================
# Checks
# ============================================================================

def check_sonin_pair(kappa: Kernel, k: Kernel, grid: Optional[Grid] = None,
                     tol: Optional[float] = None, name: Optional[str] = None) -> ResidualReport:
    """Residual of (kappa * k)(t) - 1"""
    grid = _grid_or_default(grid)
    tol = tol if tol is not None else config.TOL_TRANSCENDENTAL
    product = _convolve_all([kappa, k], grid)
    return _window_report(name or f"sonin {kappa.label} * {k.label}", CheckKind.SONIN, tol,
                          grid, product.full_values - 1.0)


def check_triple(triple: KernelTriple, grid: Optional[Grid] = None,
                 tol: Optional[float] = None, name: Optional[str] = None) -> ResidualReport:
    """Residual of (kappa * k1 * k2)(t) - 1; h0 members are skipped"""
    grid = _grid_or_default(grid)
    tol = tol if tol is not None else config.TOL_TRANSCENDENTAL
    product = _convolve_all(triple.members(), grid)
    notes = []
    if any(isinstance(k, H0) for k in triple.members()):
        notes.append("h0 member skipped: reduces to a Sonin pair check")
    labels = " * ".join(k.label for k in triple.members())
    return _window_report(name or f"triple {labels}", CheckKind.TRIPLE, tol, grid,
                          product.full_values - 1.0, notes)


def check_ft1(triple: KernelTriple, phi: TestFunction, grid: Optional[Grid] = None,
              tol: Optional[float] = None, name: Optional[str] = None) -> ResidualReport:
    """
    First fundamental theorem: with f = I_(k1) phi, the first-level
    derivative of I_(kappa) f returns f.
    """
    grid = _grid_or_default(grid)
    tol = tol if tol is not None else config.TOL_THEOREM
    f = apply_gfi(triple.k1, phi, grid)
    lhs = apply_gfd_1l(triple.k1, triple.k2, apply_gfi(triple.kappa, f, grid), grid)
    residual = lhs.full_values - f.full_values
    return _window_report(name or f"ft1 {phi.name}", CheckKind.FT1, tol, grid, residual,
                          [f"f = I_(k1) {phi.name}"])


def check_ft2(triple: KernelTriple, f: TestFunction, grid: Optional[Grid] = None,
              tol: Optional[float] = None, name: Optional[str] = None) -> ResidualReport:
    """
    Second fundamental theorem: I_(kappa) 1L-D f = f - (I_(k2) f)(0) (k1 * kappa).
    """
    grid = _grid_or_default(grid)
    tol = tol if tol is not None else config.TOL_THEOREM
    derivative = apply_gfd_1l(triple.k1, triple.k2, f, grid)
    lhs = apply_gfi(triple.kappa, derivative, grid)
    projection = projector_1l(triple.k1, triple.k2, triple.kappa, f, grid)
    residual = lhs.full_values - (f(grid.nodes) - projection.full_values)
    return _window_report(name or f"ft2 {f.name}", CheckKind.FT2, tol, grid, residual)


def check_index_law(alpha: float, beta: float, f: TestFunction, grid: Optional[Grid] = None,
                    tol: Optional[float] = None, name: Optional[str] = None) -> ResidualReport:
    """Residual of I^alpha I^beta f - I^(alpha+beta) f"""
    grid = _grid_or_default(grid)
    tol = tol if tol is not None else config.TOL_TRANSCENDENTAL
    composed = apply_gfi(power_kernel(alpha), apply_gfi(power_kernel(beta), f, grid), grid)
    single = apply_rl_integral(alpha + beta, f, grid)
    return _window_report(name or f"index {alpha:g}+{beta:g} {f.name}", CheckKind.INDEX, tol,
                          grid, composed.full_values - single.full_values)


def check_laplace_triple(triple: KernelTriple, p_values: Sequence[float] = (1.0, 2.0, 5.0),
                         tol: Optional[float] = None, name: Optional[str] = None) -> ResidualReport:
    """Residual of kappa~(p) k1~(p) k2~(p) - 1/p at each p"""
    tol = tol if tol is not None else config.TOL_TRANSCENDENTAL
    p_values = np.asarray(p_values, dtype=float)
    residual = np.empty(len(p_values))
    for i, p in enumerate(p_values):
        product = 1.0
        for kernel in _non_identity(triple.members()):
            product *= laplace_transform(kernel, p)
        residual[i] = product - 1.0 / p
    magnitude = np.abs(residual)
    report = ResidualReport(
        name=name or "laplace " + " * ".join(k.label for k in triple.members()),
        kind=CheckKind.LAPLACE.value,
        tolerance=tol,
        max_residual=float(magnitude.max()) if magnitude.size else 0.0,
        rms_residual=float(np.sqrt(np.mean(magnitude ** 2))) if magnitude.size else 0.0,
        nodes_evaluated=int(magnitude.size),
        notes=[f"p = {', '.join(f'{p:g}' for p in p_values)}"],
        abscissae=p_values,
        residuals=residual,
    )
    logger.info("%s: max residual %.3e (tolerance %.1e) %s",
                report.name, report.max_residual, tol, "PASS" if report.passed else "FAIL")
    return report


def check_null_space(triple: KernelTriple, constants: Sequence[float] = (-3.0, 1.0, 7.0),
                     grid: Optional[Grid] = None, tol: Optional[float] = None,
                     name: Optional[str] = None) -> ResidualReport:
    """The first-level derivative annihilates c (kappa * k1)"""
    grid = _grid_or_default(grid)
    tol = tol if tol is not None else config.TOL_NULL_SPACE
    base = _convolve_all([triple.kappa, triple.k1], grid)
    worst = np.zeros(grid.n)
    for c in constants:
        result = apply_gfd_1l(triple.k1, triple.k2, c * base, grid)
        worst = np.where(np.abs(result.full_values) > np.abs(worst), result.full_values, worst)
    return _window_report(name or "null space", CheckKind.NULL_SPACE, tol, grid, worst,
                          [f"c = {', '.join(f'{c:g}' for c in constants)}"])


def check_right_inverse(kappa: Kernel, k: Kernel, phi: TestFunction, grid: Optional[Grid] = None,
                        tol: Optional[float] = None, name: Optional[str] = None) -> ResidualReport:
    """With f = I_(kappa) phi, I_(kappa) D_(k) f returns f"""
    grid = _grid_or_default(grid)
    tol = tol if tol is not None else config.TOL_THEOREM
    f = apply_gfi(kappa, phi, grid)
    lhs = apply_gfi(kappa, apply_gfd_rl(k, f, grid), grid)
    return _window_report(name or f"right inverse {phi.name}", CheckKind.RIGHT_INVERSE, tol,
                          grid, lhs.full_values - f.full_values)


# ============================================================================
# Suite
# ============================================================================

def run_check(spec: CheckSpec) -> ResidualReport:
    """Run one check; failures of any kind become a failed report"""
    started = time.perf_counter()
    inputs = spec.inputs
    grid = _grid_or_default(spec.grid)
    try:
        if spec.kind is CheckKind.SONIN:
            report = check_sonin_pair(inputs["kappa"], inputs["k"], grid, spec.tolerance, spec.name)
        elif spec.kind is CheckKind.TRIPLE:
            report = check_triple(inputs["triple"], grid, spec.tolerance, spec.name)
        elif spec.kind is CheckKind.FT1:
            report = check_ft1(inputs["triple"], inputs["phi"], grid, spec.tolerance, spec.name)
        elif spec.kind is CheckKind.FT2:
            report = check_ft2(inputs["triple"], inputs["f"], grid, spec.tolerance, spec.name)
        elif spec.kind is CheckKind.INDEX:
            report = check_index_law(inputs["alpha"], inputs["beta"], inputs["f"], grid,
                                     spec.tolerance, spec.name)
        elif spec.kind is CheckKind.LAPLACE:
            report = check_laplace_triple(inputs["triple"], inputs.get("p_values", (1.0, 2.0, 5.0)),
                                          spec.tolerance, spec.name)
        elif spec.kind is CheckKind.NULL_SPACE:
            report = check_null_space(inputs["triple"], inputs.get("constants", (-3.0, 1.0, 7.0)),
                                      grid, spec.tolerance, spec.name)
        else:
            report = check_right_inverse(inputs["kappa"], inputs["k"], inputs["phi"], grid,
                                         spec.tolerance, spec.name)
    except EngineError as exc:
        logger.error("%s failed: %s", spec.name, exc.one_line())
        report = _failed_report(spec, grid, exc.code, exc.one_line())
    except Exception as exc:
        logger.exception("%s raised an unexpected error", spec.name)
        report = _failed_report(spec, grid, "internal", f"{type(exc).__name__}: {exc}")
    report.elapsed_s = time.perf_counter() - started
    return report


def _failed_report(spec: CheckSpec, grid: Grid, code: str, message: str) -> ResidualReport:
    return ResidualReport(
        name=spec.name,
        kind=spec.kind.value,
        tolerance=spec.tolerance,
        max_residual=math.inf,
        rms_residual=math.inf,
        nodes_evaluated=0,
        grid=str(grid),
        error_code=code,
        notes=[message],
    )


def run_suite(specs: Sequence[CheckSpec], workers: Optional[int] = None) -> List[ResidualReport]:
    """Run all checks; report order follows spec order"""
    workers = workers if workers is not None else config.WORKERS
    if workers > 1 and len(specs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(run_check, specs))
    return [run_check(spec) for spec in specs]


def run_named_suite(specs: Sequence[CheckSpec], suite_name: str = "default",
                    grid: Optional[Grid] = None) -> SuiteResult:
    started = time.perf_counter()
    reports = run_suite(specs)
    return SuiteResult(
        suite_name=suite_name,
        grid=str(_grid_or_default(grid)),
        reports=reports,
        total_time_s=time.perf_counter() - started,
    )


def refinement_regressions(coarse: Sequence[ResidualReport],
                           fine: Sequence[ResidualReport]) -> List[str]:
    """
    Names of checks whose max residual grew by more than REFINEMENT_GROWTH
    from the coarse to the refined grid. Residuals are compared above
    RESIDUAL_NOISE_FLOOR; error reports carry an infinite residual, so a
    check that fails to run only on the fine grid counts.
    """
    floor = config.RESIDUAL_NOISE_FLOOR
    worse = []
    for before, after in zip(coarse, fine):
        if max(after.max_residual, floor) > config.REFINEMENT_GROWTH * max(before.max_residual, floor):
            logger.warning("%s: residual %.3e -> %.3e under refinement",
                           after.name, before.max_residual, after.max_residual)
            worse.append(after.name)
    return worse


def _exp_function() -> TestFunction:
    return TestFunction(np.exp, np.exp, 1.0, name="exp(t)")


def _identity_function() -> TestFunction:
    return TestFunction(lambda t: t, lambda t: np.ones_like(t), 0.0, name="t")


def _affine_function() -> TestFunction:
    return TestFunction(lambda t: 1.0 + t, lambda t: np.ones_like(t), 1.0, name="1+t")


def default_suite(grid: Optional[Grid] = None) -> List[CheckSpec]:
    """The shipped 14-check suite"""
    grid = _grid_or_default(grid)
    tol_power = config.TOL_POWER
    tol_trans = config.TOL_TRANSCENDENTAL
    tol_theorem = config.TOL_THEOREM
    power = power_triple(0.5, 0.25)
    tempered_kappa = Tempered(0.4, 1.0)
    solved = KernelTriple(tempered_kappa, PowerLaw(0.3), third_kernel(tempered_kappa, PowerLaw(0.3)))
    return [
        CheckSpec("sonin power 0.3/0.7", CheckKind.SONIN, tol_power, grid,
                  {"kappa": PowerLaw(0.3), "k": PowerLaw(0.7)}),
        CheckSpec("sonin power 0.5/0.5", CheckKind.SONIN, tol_power, grid,
                  {"kappa": PowerLaw(0.5), "k": PowerLaw(0.5)}),
        CheckSpec("sonin bessel 0.5", CheckKind.SONIN, tol_trans, grid,
                  {"kappa": BesselKappa(0.5), "k": BesselK(0.5)}),
        CheckSpec("sonin mittag-leffler 0.25/0.75", CheckKind.SONIN, tol_trans, grid,
                  {"kappa": MLKappa(0.25, 0.75), "k": MLK(0.25, 0.75)}),
        CheckSpec("sonin tempered 0.5/1", CheckKind.SONIN, tol_trans, grid,
                  {"kappa": Tempered(0.5, 1.0), "k": TemperedAssociated(0.5, 1.0)}),
        CheckSpec("triple power 0.5/0.25/0.25", CheckKind.TRIPLE, tol_power, grid, {"triple": power}),
        CheckSpec("triple tempered 0.4/1 with solved third kernel", CheckKind.TRIPLE, tol_power, grid,
                  {"triple": solved}),
        CheckSpec("ft1 power triple, phi = exp(t)", CheckKind.FT1, tol_theorem, grid,
                  {"triple": power, "phi": _exp_function()}),
        CheckSpec("ft1 k1 = h0, phi = t", CheckKind.FT1, tol_theorem, grid,
                  {"triple": KernelTriple(PowerLaw(0.5), H0(), PowerLaw(0.5)), "phi": _identity_function()}),
        CheckSpec("ft2 hilfer 0.5/0.25, f = t", CheckKind.FT2, tol_theorem, grid,
                  {"triple": power, "f": _identity_function()}),
        CheckSpec("ft2 k2 = h0, f = 1+t", CheckKind.FT2, tol_theorem, grid,
                  {"triple": KernelTriple(PowerLaw(0.5), PowerLaw(0.5), H0()), "f": _affine_function()}),
        CheckSpec("index law 0.4+0.9, f = exp(t)", CheckKind.INDEX, tol_trans, grid,
                  {"alpha": 0.4, "beta": 0.9, "f": _exp_function()}),
        CheckSpec("laplace power triple", CheckKind.LAPLACE, tol_power, grid,
                  {"triple": power, "p_values": (1.0, 2.0, 5.0)}),
        CheckSpec("laplace tempered pair 0.5/1", CheckKind.LAPLACE, tol_trans, grid,
                  {"triple": KernelTriple(Tempered(0.5, 1.0), TemperedAssociated(0.5, 1.0), H0()),
                   "p_values": (1.0, 2.0, 5.0)}),
    ]


def extended_suite(grid: Optional[Grid] = None) -> List[CheckSpec]:
    """Default suite plus the null-space and right-inverse checks"""
    grid = _grid_or_default(grid)
    power = power_triple(0.5, 0.25)
    return default_suite(grid) + [
        CheckSpec("null space power triple", CheckKind.NULL_SPACE, config.TOL_NULL_SPACE, grid,
                  {"triple": power, "constants": (-3.0, 1.0, 7.0)}),
        CheckSpec("right inverse tempered 0.5/1, phi = exp(t)", CheckKind.RIGHT_INVERSE,
                  config.TOL_THEOREM, grid,
                  {"kappa": Tempered(0.5, 1.0), "k": TemperedAssociated(0.5, 1.0), "phi": _exp_function()}),
    ]


# ============================================================================
# Report output
# ============================================================================

def _format_number(value: Optional[float]) -> str:
    if value is None:
        return "n/a"
    if not math.isfinite(value):
        return "inf"
    return f"{value:.6e}"


def format_report(report: ResidualReport) -> str:
    """One structured text record"""
    lines = [
        f"check: {report.name}",
        f"kind: {report.kind}",
        f"max_residual: {_format_number(report.max_residual)}",
        f"rms_residual: {_format_number(report.rms_residual)}",
        f"nodes_evaluated: {report.nodes_evaluated}",
        f"tolerance: {report.tolerance:.1e} (engineering choice)",
        f"pass: {'true' if report.passed else 'false'}",
    ]
    if report.near_origin_max is not None:
        lines.append(f"near_origin_max: {_format_number(report.near_origin_max)}")
    if report.error_code:
        lines.append(f"error: {report.error_code}")
    lines.extend(f"note: {note}" for note in report.notes)
    return "\n".join(lines)


def format_reports(reports: Sequence[ResidualReport]) -> str:
    return "\n\n".join(format_report(r) for r in reports)


def write_residual_csv(report: ResidualReport, path: Union[str, Path]) -> None:
    """Node-wise residuals with header t,residual"""
    report.residual_frame().to_csv(path, index=False, float_format="%.15g")


def print_console_summary(result: SuiteResult) -> None:
    """Print a formatted summary to console"""
    print("\n" + "=" * 70)
    print(f"  SUITE: {result.suite_name}  (grid {result.grid})")
    print("=" * 70)
    for report in result.reports:
        status = "PASS" if report.passed else "FAIL"
        print(f"  [{status}] {report.name:<48} {_format_number(report.max_residual)}")
    print("-" * 70)
    print(f"  {result.passed_checks}/{len(result.reports)} passed in {result.total_time_s:.2f}s")
    print("=" * 70 + "\n")
