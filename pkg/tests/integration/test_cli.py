"""
Command Line Tests
==================

The gfc command: kernel solvers, operators with CSV output, verification
checks and exit codes.

Run with:
    pytest tests/integration/test_cli.py -v -m cli
"""
import json
import math

import numpy as np
import pandas as pd
import pytest

from gfc_engine import cli
from gfc_engine.kernels import PowerLaw
from gfc_engine.quadrature import Grid, GridFunction
from gfc_engine.utils.report_db import ReportDatabase
from gfc_engine.verification import CheckKind, CheckSpec


@pytest.fixture
def power_spec(tmp_path):
    path = tmp_path / "power.toml"
    path.write_text('kind = "powerlaw"\nalpha = 0.5\ngamma = 0.25\n')
    return path


@pytest.mark.integration
@pytest.mark.cli
class TestKernelCommands:
    """gfc kernel ..."""

    def test_associate_power_series(self, capsys):
        assert cli.main(["kernel", "associate", "--mu", "0.5", "--coeffs", "1"]) == cli.EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert "mu=0.5" in lines
        assert "coeffs=[1]" in lines
        assert "truncation=1" in lines

    def test_associate_writes_spec(self, tmp_path, capsys):
        out = tmp_path / "partner.json"
        assert cli.main(["kernel", "associate", "--kernel", "tempered:0.5,1", "--truncation", "8",
                         "--out", str(out)]) == cli.EXIT_OK
        data = json.loads(out.read_text())
        assert data["kind"] == "series"
        assert data["mu"] == pytest.approx(0.5)
        assert len(data["coeffs"]) == 8

    def test_third_kernel_of_power_triple(self, capsys):
        assert cli.main(["kernel", "third", "--kappa", "powerlaw:0.5", "--k1", "powerlaw:0.25"]) == cli.EXIT_OK
        out = capsys.readouterr().out
        assert "mu=0.25" in out
        assert "coeffs=[1, 0, 0" in out

    def test_eval(self, capsys):
        assert cli.main(["kernel", "eval", "--kernel", "powerlaw:0.5", "--t", "1", "4"]) == cli.EXIT_OK
        values = [float(v) for v in capsys.readouterr().out.split()]
        assert values == pytest.approx([1.0 / math.sqrt(math.pi), 0.5 / math.sqrt(math.pi)], rel=1e-13)

    def test_laplace(self, capsys):
        assert cli.main(["kernel", "laplace", "--kernel", "tempered:0.5,1", "--p", "1"]) == cli.EXIT_OK
        assert float(capsys.readouterr().out) == pytest.approx(2.0 ** -0.5, rel=1e-13)

    def test_h0_has_no_value(self, capsys):
        assert cli.main(["kernel", "eval", "--kernel", "h0", "--t", "1"]) == cli.EXIT_USAGE
        assert "error[h0-pointwise]" in capsys.readouterr().err

    def test_unknown_kind(self, capsys):
        assert cli.main(["kernel", "eval", "--kernel", "bogus:1", "--t", "1"]) == cli.EXIT_USAGE
        assert "error[spec]" in capsys.readouterr().err


@pytest.mark.integration
@pytest.mark.cli
class TestOperatorCommands:
    """gfc op ..."""

    def test_first_level_derivative_csv(self, tmp_path):
        out = tmp_path / "result.csv"
        code = cli.main(["op", "gfd-1l", "--k1", "powerlaw:0.25", "--k2", "powerlaw:0.25",
                         "--f", "t", "--grid", "256:2:2", "--out", str(out)])
        assert code == cli.EXIT_OK
        frame = pd.read_csv(out)
        assert list(frame.columns) == ["t", "value"]
        expected = frame["t"].to_numpy() ** 0.5 / math.gamma(1.5)
        np.testing.assert_allclose(frame["value"].to_numpy(), expected, rtol=0, atol=1e-7)

    def test_csv_input_through_identity_integral(self, tmp_path):
        grid = Grid(64, 2.0, 2.0)
        source = tmp_path / "in.csv"
        GridFunction.from_callable(np.exp, grid).to_csv(source)
        out = tmp_path / "out.csv"
        code = cli.main(["op", "gfi", "--kappa", "h0", "--input", str(source),
                         "--grid", str(grid), "--out", str(out)])
        assert code == cli.EXIT_OK
        np.testing.assert_allclose(pd.read_csv(out)["value"], pd.read_csv(source)["value"], rtol=1e-14)

    def test_square_root_without_declared_singularity(self, tmp_path):
        out = tmp_path / "rl.csv"
        code = cli.main(["op", "gfd-rl", "--k", "powerlaw:0.5", "--f", "t^0.5",
                         "--grid", "512:2:2", "--out", str(out)])
        assert code == cli.EXIT_OK
        frame = pd.read_csv(out)
        window = frame["t"] >= 0.1
        np.testing.assert_allclose(frame["value"][window], math.gamma(1.5), rtol=0, atol=1e-8)

    def test_stdout_output(self, capsys):
        assert cli.main(["op", "gfi", "--kappa", "powerlaw:0.5", "--f", "1", "--grid", "16:2:1"]) == cli.EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "t,value"
        assert len(lines) == 17

    def test_hilfer(self, tmp_path):
        out = tmp_path / "hilfer.csv"
        code = cli.main(["op", "hilfer", "--alpha", "0.5", "--gamma", "0.25", "--f", "t",
                         "--grid", "256:2:2", "--out", str(out)])
        assert code == cli.EXIT_OK
        frame = pd.read_csv(out)
        np.testing.assert_allclose(frame["value"], frame["t"] ** 0.5 / math.gamma(1.5), atol=1e-7)

    def test_syntax_error(self, capsys):
        code = cli.main(["op", "gfi", "--kappa", "powerlaw:0.5", "--f", "2*^t"])
        assert code == cli.EXIT_USAGE
        err = capsys.readouterr().err
        assert err.startswith("error[syntax]")
        assert "offset 2" in err

    def test_missing_input(self, capsys):
        assert cli.main(["op", "gfi", "--kappa", "powerlaw:0.5"]) == cli.EXIT_USAGE
        assert "error[spec]" in capsys.readouterr().err


@pytest.mark.integration
@pytest.mark.cli
class TestVerifyCommands:
    """gfc verify ..."""

    def test_triple_from_spec_file(self, power_spec, capsys):
        assert cli.main(["verify", "triple", "--spec", str(power_spec), "--grid", "256:2:2"]) == cli.EXIT_OK
        out = capsys.readouterr().out
        assert "kind: triple" in out
        assert "pass: true" in out

    def test_shorthand_overrides_spec(self, power_spec, capsys):
        code = cli.main(["verify", "triple", "--spec", str(power_spec), "--k2", "powerlaw:0.5",
                         "--grid", "128:2:2"])
        assert code == cli.EXIT_FAILED
        assert "pass: false" in capsys.readouterr().out

    def test_mismatched_sonin_pair_fails(self, tmp_path, capsys):
        residuals = tmp_path / "residual.csv"
        code = cli.main(["verify", "sonin", "--kappa", "powerlaw:0.3", "--k", "powerlaw:0.6",
                         "--grid", "128:2:2", "--out", str(residuals)])
        assert code == cli.EXIT_FAILED
        assert residuals.read_text().startswith("t,residual")

    def test_sonin_with_catalog_partner(self, capsys):
        assert cli.main(["verify", "sonin", "--kappa", "tempered:0.5,1", "--grid", "256:2:2"]) == cli.EXIT_OK

    def test_laplace(self, power_spec, capsys):
        assert cli.main(["verify", "laplace", "--spec", str(power_spec), "--p", "1,3"]) == cli.EXIT_OK
        assert "note: p = 1, 3" in capsys.readouterr().out

    def test_missing_spec_file(self, tmp_path, capsys):
        assert cli.main(["verify", "triple", "--spec", str(tmp_path / "absent.toml")]) == cli.EXIT_USAGE
        assert "error[spec]" in capsys.readouterr().err

    def test_suite_with_json_and_saved_run(self, tmp_path, monkeypatch, capsys):
        def small_suite(grid=None):
            return [CheckSpec("sonin power 0.3/0.7", CheckKind.SONIN, 1e-8, grid,
                              {"kappa": PowerLaw(0.3), "k": PowerLaw(0.7)})]

        monkeypatch.setattr(cli, "default_suite", small_suite)
        result_file = tmp_path / "suite.json"
        save_dir = tmp_path / "runs"
        code = cli.main(["verify", "suite", "--grid", "64:2:2", "--json", str(result_file),
                         "--save-dir", str(save_dir)])
        assert code == cli.EXIT_OK
        data = json.loads(result_file.read_text())
        assert data["grid"] == "64:2:2"
        assert data["summary"]["passed"] == 1
        assert len(ReportDatabase(save_dir).get_all_runs()) == 1
        assert "1/1 passed" in capsys.readouterr().out


@pytest.mark.integration
@pytest.mark.cli
class TestUsage:
    """argparse exit codes"""

    def test_help(self, capsys):
        assert cli.main(["--help"]) == cli.EXIT_OK
        assert "General fractional calculus engine" in capsys.readouterr().out

    @pytest.mark.parametrize("argv", [[], ["op"], ["kernel", "eval"], ["verify", "bogus"]])
    def test_usage_errors(self, argv, capsys):
        assert cli.main(argv) == cli.EXIT_USAGE
