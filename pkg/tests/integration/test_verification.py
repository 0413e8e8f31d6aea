"""
Verification Suite Tests
========================

End-to-end residual checks: Sonin pairs, triples, fundamental theorems,
index law and Laplace relations on the default grid.

Run with:
    pytest tests/integration/test_verification.py -v
    pytest tests/integration/test_verification.py -v -m "not slow"
"""
import math

import numpy as np
import pytest

from gfc_engine.config import config
from gfc_engine.kernels import (
    H0,
    BesselK,
    BesselKappa,
    KernelTriple,
    MLK,
    MLKappa,
    PowerLaw,
    Tempered,
    TemperedAssociated,
)
from gfc_engine.quadrature import Grid
from gfc_engine.verification import (
    CheckKind,
    CheckSpec,
    ResidualReport,
    SuiteResult,
    check_index_law,
    check_laplace_triple,
    check_null_space,
    check_right_inverse,
    check_sonin_pair,
    check_triple,
    default_suite,
    extended_suite,
    format_report,
    format_reports,
    print_console_summary,
    refinement_regressions,
    run_check,
    run_named_suite,
    run_suite,
    write_residual_csv,
)


@pytest.fixture(scope="module")
def default_reports():
    return run_suite(default_suite(Grid(512, 2.0, 2.0)))


@pytest.mark.integration
@pytest.mark.slow
class TestDefaultSuite:
    """The shipped suite passes on the default grid"""

    def test_fourteen_checks(self, default_reports):
        assert len(default_reports) == 14

    def test_every_check_passes(self, default_reports):
        failed = [(r.name, r.max_residual, r.tolerance, r.error_code) for r in default_reports if not r.passed]
        assert failed == []

    def test_reports_follow_spec_order(self, default_reports):
        assert [r.name for r in default_reports] == [spec.name for spec in default_suite()]

    def test_refined_grid_does_not_degrade_residuals(self, default_reports):
        refined = run_suite(default_suite(Grid(1024, 2.0, 2.0)))
        assert refinement_regressions(default_reports, refined) == []

    def test_extended_suite_adds_two_checks(self):
        names = [spec.name for spec in extended_suite()]
        assert len(names) == 16
        assert {spec.kind for spec in extended_suite()[-2:]} == {CheckKind.NULL_SPACE, CheckKind.RIGHT_INVERSE}


@pytest.mark.integration
class TestSoninChecks:
    """Individual pair and triple checks"""

    @pytest.mark.parametrize("kappa, k, tol", [
        (PowerLaw(0.3), PowerLaw(0.7), 1e-8),
        (Tempered(0.5, 1.0), TemperedAssociated(0.5, 1.0), 1e-6),
        (BesselKappa(0.5), BesselK(0.5), 1e-6),
        (MLKappa(0.25, 0.75), MLK(0.25, 0.75), 1e-6),
        (MLKappa(0.3, 0.7), MLK(0.3, 0.7), 1e-6),
        (MLKappa(0.35, 0.6), MLK(0.35, 0.6), 1e-6),
        (MLKappa(0.4, 0.5), MLK(0.4, 0.5), 1e-6),
    ])
    def test_catalog_pairs(self, default_grid, kappa, k, tol):
        report = check_sonin_pair(kappa, k, default_grid, tol)
        assert report.passed, f"{report.name}: {report.max_residual:.3e}"
        assert report.window_start == pytest.approx(config.RESIDUAL_WINDOW_FRACTION * default_grid.T)
        assert report.nodes_evaluated == int(np.sum(default_grid.nodes >= report.window_start))

    def test_mismatched_pair_fails(self, default_grid):
        report = check_sonin_pair(PowerLaw(0.3), PowerLaw(0.6), default_grid, 1e-8)
        assert not report.passed
        assert report.max_residual > 0.1

    def test_triple_with_h0_member_is_noted(self, default_grid):
        report = check_triple(KernelTriple(PowerLaw(0.5), H0(), PowerLaw(0.5)), default_grid, 1e-8)
        assert report.passed
        assert any("h0" in note for note in report.notes)

    def test_all_h0_is_an_error_report(self, default_grid):
        spec = CheckSpec("h0 pair", CheckKind.SONIN, 1e-8, default_grid, {"kappa": H0(), "k": H0()})
        report = run_check(spec)
        assert not report.passed
        assert report.error_code == "parameter"
        assert report.to_dict()["max_residual"] is None

    def test_failure_does_not_stop_the_run(self, coarse_grid):
        specs = [
            CheckSpec("bad pair", CheckKind.SONIN, 1e-8, coarse_grid,
                      {"kappa": PowerLaw(0.3), "k": PowerLaw(0.6)}),
            CheckSpec("good pair", CheckKind.SONIN, 1e-8, coarse_grid,
                      {"kappa": PowerLaw(0.3), "k": PowerLaw(0.7)}),
        ]
        reports = run_suite(specs)
        assert [r.passed for r in reports] == [False, True]

    def test_empty_suite(self):
        assert run_suite([]) == []

    def test_tolerance_must_be_positive(self):
        with pytest.raises(Exception):
            CheckSpec("zero", CheckKind.SONIN, 0.0)


@pytest.mark.integration
class TestTheoremChecks:
    """Index law, Laplace relation, null space and right inverse"""

    def test_index_law(self, default_grid, exp_function):
        assert check_index_law(0.4, 0.9, exp_function, default_grid, 1e-6).passed

    def test_laplace_power_triple(self, hilfer_triple):
        report = check_laplace_triple(hilfer_triple, (1.0, 2.0, 5.0), 1e-12)
        assert report.passed
        assert report.nodes_evaluated == 3

    def test_laplace_of_wrong_triple_fails(self):
        triple = KernelTriple(PowerLaw(0.5), PowerLaw(0.25), PowerLaw(0.5))
        assert not check_laplace_triple(triple, tol=1e-8).passed

    def test_null_space(self, default_grid, hilfer_triple):
        report = check_null_space(hilfer_triple, grid=default_grid)
        assert report.passed, f"{report.max_residual:.3e}"

    def test_right_inverse(self, default_grid, exp_function):
        report = check_right_inverse(Tempered(0.5, 1.0), TemperedAssociated(0.5, 1.0), exp_function, default_grid)
        assert report.passed, f"{report.max_residual:.3e}"


@pytest.mark.integration
class TestReportOutput:
    """Structured text, CSV and suite summaries"""

    @pytest.fixture
    def report(self, coarse_grid):
        return check_sonin_pair(PowerLaw(0.3), PowerLaw(0.7), coarse_grid, 1e-8, name="sonin power")

    def test_format_report(self, report):
        text = format_report(report)
        assert text.splitlines()[0] == "check: sonin power"
        assert "kind: sonin" in text
        assert "pass: true" in text
        assert "tolerance: 1.0e-08 (engineering choice)" in text

    def test_format_reports_separates_records(self, report):
        assert format_reports([report, report]).count("\n\ncheck: ") == 1

    def test_residual_csv(self, report, tmp_path):
        path = tmp_path / "residual.csv"
        write_residual_csv(report, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "t,residual"
        assert len(lines) == report.abscissae.size + 1

    def test_named_suite_summary(self, coarse_grid, capsys):
        specs = [CheckSpec("good pair", CheckKind.SONIN, 1e-8, coarse_grid,
                           {"kappa": PowerLaw(0.3), "k": PowerLaw(0.7)})]
        result = run_named_suite(specs, "smoke", coarse_grid)
        assert isinstance(result, SuiteResult)
        assert result.passed
        assert result.to_dict()["summary"]["pass_rate"] == "100.0%"
        print_console_summary(result)
        assert "1/1 passed" in capsys.readouterr().out


def residual_report(name: str, max_residual: float) -> ResidualReport:
    return ResidualReport(name, "sonin_pair", 1e-8, max_residual, max_residual, 480)


@pytest.mark.integration
class TestRefinementComparison:
    """Residual growth between a coarse and a refined run"""

    def test_growth_above_noise_floor_is_reported(self):
        coarse = [residual_report("a", 1e-9), residual_report("b", 1e-9)]
        fine = [residual_report("a", 1.05e-9), residual_report("b", 2e-9)]
        assert refinement_regressions(coarse, fine) == ["b"]

    def test_rounding_noise_is_ignored(self):
        # 5.7e-14 -> 2.2e-13 is a 4x jump, both below the floor
        coarse = [residual_report("ft1", 5.73e-14)]
        fine = [residual_report("ft1", 2.19e-13)]
        assert refinement_regressions(coarse, fine) == []

    def test_growth_from_the_floor_counts(self):
        coarse = [residual_report("ft1", 1e-14)]
        fine = [residual_report("ft1", 5e-12)]
        assert refinement_regressions(coarse, fine) == ["ft1"]

    def test_error_on_refined_grid_counts(self):
        coarse = [residual_report("pair", 1e-10)]
        fine = [residual_report("pair", math.inf)]
        assert refinement_regressions(coarse, fine) == ["pair"]
