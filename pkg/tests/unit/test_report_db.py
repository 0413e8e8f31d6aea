"""
Report Database Tests
=====================

Saving, reloading and comparing verification suite runs.

Run with:
    pytest tests/unit/test_report_db.py -v
"""
import json

import pytest

from gfc_engine.utils.report_db import ReportDatabase
from gfc_engine.verification import ResidualReport, SuiteResult


def make_report(name: str, max_residual: float, tolerance: float = 1e-8) -> ResidualReport:
    return ResidualReport(
        name=name,
        kind="sonin_pair",
        tolerance=tolerance,
        max_residual=max_residual,
        rms_residual=max_residual / 2.0,
        nodes_evaluated=480,
        grid="512:2:2",
    )


def make_suite(*reports: ResidualReport, grid: str = "512:2:2", stamp: str = "2026-01-01T00:00:00") -> SuiteResult:
    return SuiteResult(suite_name="default", grid=grid, reports=list(reports), generated_at=stamp)


@pytest.fixture
def db(reports_dir) -> ReportDatabase:
    return ReportDatabase(reports_dir)


@pytest.mark.unit
class TestReportDatabase:
    """JSON run store"""

    def test_save_and_reload(self, db):
        path = db.save_suite_result(make_suite(make_report("sonin powerlaw", 3e-12)), metadata={"note": "baseline"})
        run = db.get_run(path.stem)
        assert run["run_id"] == path.stem
        assert run["metadata"] == {"note": "baseline"}
        assert run["summary"]["passed"] == 1
        assert run["reports"][0]["max_residual"] == pytest.approx(3e-12)

    def test_index_tracks_grids_and_checks(self, db):
        db.save_suite_result(make_suite(make_report("a", 1e-10), grid="256:2:2"))
        db.save_suite_result(make_suite(make_report("b", 1e-10), grid="512:2:2"))
        index = json.loads(db.index_file.read_text())
        assert len(index["runs"]) == 2
        assert index["grids"] == ["256:2:2", "512:2:2"]
        assert index["checks"] == ["a", "b"]

    def test_infinite_residual_is_stored_as_null(self, db):
        path = db.save_suite_result(make_suite(make_report("broken", float("inf"))))
        report = db.get_run(path.stem)["reports"][0]
        assert report["max_residual"] is None
        assert report["passed"] is False

    def test_missing_run(self, db):
        with pytest.raises(FileNotFoundError):
            db.get_run("suite_missing")

    def test_compare_runs(self, db):
        before = db.save_suite_result(make_suite(make_report("a", 4e-9), make_report("only_before", 1e-9)))
        after = db.save_suite_result(make_suite(make_report("a", 1e-9), make_report("only_after", 1e-9)))
        comparison = db.compare_runs(before.stem, after.stem)
        assert set(comparison) == {"a"}
        assert comparison["a"]["ratio"] == pytest.approx(0.25)
        assert comparison["a"]["candidate_passed"] is True

    def test_aggregate_and_trend(self, db):
        for value, stamp in [(1e-9, "2026-01-02T00:00:00"), (3e-9, "2026-01-01T00:00:00")]:
            db.save_suite_result(make_suite(make_report("a", value), stamp=stamp))
        stats = db.aggregate_check("a")
        assert stats["count"] == 2
        assert stats["mean"] == pytest.approx(2e-9)
        assert db.aggregate_check("absent") == {}
        trend = db.get_residual_trend("a")
        assert [point["value"] for point in trend] == [3e-9, 1e-9]

    def test_comparison_report(self, db, tmp_path):
        assert db.generate_comparison_report() == "No verification runs available."
        db.save_suite_result(make_suite(make_report("a", 1e-9), make_report("b", 1e-3)))
        output = tmp_path / "report.md"
        text = db.generate_comparison_report(str(output))
        assert "Passed: 1/2" in text
        assert "[FAIL] b" in text
        assert output.read_text() == text
