"""
Verification Report Persistence Layer

Saves and compares verification suite runs across:
- Different grids (n:r:T, track convergence as the mesh is refined)
- Different runs (catch regressions in max residuals)

Results are stored in JSON format for easy comparison and trending.
"""
import json
import logging
import statistics
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional, Union

from gfc_engine.config import config
from gfc_engine.verification import SuiteResult

logger = logging.getLogger("gfc_engine.report_db")


class ReportDatabase:
    """Manages saving and retrieving verification suite runs."""

    def __init__(self, db_dir: Union[str, Path, None] = None):
        self.db_dir = Path(db_dir) if db_dir is not None else config.REPORTS_DIR
        self.db_dir.mkdir(parents=True, exist_ok=True)
        self.index_file = self.db_dir / "index.json"

    def save_suite_result(self, result: SuiteResult, metadata: Optional[Dict] = None) -> Path:
        """Save one suite run as its own file and register it in the index."""
        stamp = datetime.now().strftime('%Y%m%d_%H%M%S_%f')
        run_file = self.db_dir / f"suite_{stamp}.json"
        data = result.to_dict()
        data['run_id'] = run_file.stem
        data['metadata'] = metadata or {}

        with open(run_file, 'w') as f:
            json.dump(data, f, indent=2)

        self._update_index(data)
        logger.info("saved suite run %s to %s", data['run_id'], run_file)
        return run_file

    def _update_index(self, data: Dict):
        """Update the run index for quick lookups."""
        if self.index_file.exists():
            with open(self.index_file, 'r') as f:
                index = json.load(f)
        else:
            index = {'runs': [], 'grids': [], 'checks': []}

        if data['run_id'] not in index['runs']:
            index['runs'].append(data['run_id'])
        index['grids'] = sorted(set(index.get('grids', [])) | {data['grid']})
        index['checks'] = sorted(set(index.get('checks', [])) | {r['name'] for r in data['reports']})

        with open(self.index_file, 'w') as f:
            json.dump(index, f, indent=2)

    def get_all_runs(self) -> List[Dict]:
        """Get all saved runs, oldest first."""
        runs = []
        for file in sorted(self.db_dir.glob("suite_*.json")):
            with open(file, 'r') as f:
                runs.append(json.load(f))
        return runs

    def get_run(self, run_id: str) -> Dict:
        path = self.db_dir / f"{run_id}.json"
        if not path.exists():
            raise FileNotFoundError(f"no saved run {run_id} in {self.db_dir}")
        with open(path, 'r') as f:
            return json.load(f)

    def compare_runs(self, baseline_id: str, candidate_id: str) -> Dict[str, Dict]:
        """
        Max residual of every check present in both runs, with the ratio
        candidate / baseline (None when the baseline residual is zero or
        missing).
        """
        baseline = {r['name']: r for r in self.get_run(baseline_id)['reports']}
        candidate = {r['name']: r for r in self.get_run(candidate_id)['reports']}

        comparison = {}
        for name in baseline.keys() & candidate.keys():
            before = baseline[name]['max_residual']
            after = candidate[name]['max_residual']
            ratio = after / before if before and after is not None else None
            comparison[name] = {
                'baseline': before,
                'candidate': after,
                'ratio': ratio,
                'baseline_passed': baseline[name]['passed'],
                'candidate_passed': candidate[name]['passed'],
            }
        return comparison

    def aggregate_check(self, check_name: str) -> Dict:
        """Aggregate the max residual of one check across all runs."""
        values = [
            report['max_residual']
            for run in self.get_all_runs()
            for report in run['reports']
            if report['name'] == check_name and report['max_residual'] is not None
        ]
        if not values:
            return {}
        return {
            'mean': statistics.mean(values),
            'median': statistics.median(values),
            'min': min(values),
            'max': max(values),
            'std': statistics.stdev(values) if len(values) > 1 else 0,
            'count': len(values),
        }

    def get_residual_trend(self, check_name: str) -> List[Dict]:
        """Max residual of one check over time."""
        trend = []
        for run in self.get_all_runs():
            for report in run['reports']:
                if report['name'] == check_name:
                    trend.append({
                        'timestamp': run['generated_at'],
                        'grid': run['grid'],
                        'value': report['max_residual'],
                    })
        return sorted(trend, key=lambda x: x['timestamp'])

    def generate_comparison_report(self, output_file: Optional[str] = None) -> str:
        """Generate a human-readable summary of all saved runs."""
        runs = self.get_all_runs()

        if not runs:
            return "No verification runs available."

        report_lines = [
            "# Verification Run Report",
            f"Generated: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}",
            f"Total Runs: {len(runs)}",
            "",
        ]
        for run in runs:
            summary = run['summary']
            report_lines.append(f"## {run['run_id']} (grid {run['grid']})")
            report_lines.append(f"Passed: {summary['passed']}/{summary['total_checks']}")
            for report in run['reports']:
                value = report['max_residual']
                shown = f"{value:.3e}" if value is not None else "error"
                status = "PASS" if report['passed'] else "FAIL"
                report_lines.append(f"- [{status}] {report['name']}: {shown}")
            report_lines.append("")

        report = "\n".join(report_lines)

        if output_file:
            with open(output_file, 'w') as f:
                f.write(report)

        return report

