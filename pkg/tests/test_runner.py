"""
Tests for the scenario runner, report emission and the command line
"""

import json
import sys
from pathlib import Path
from unittest.mock import patch

import numpy as np
import pandas as pd
import pytest

# Add src to path
sys.path.append(str(Path(__file__).parent.parent / "src"))

from cli.config_schema import ConfigError, config_from_dict
from cli.report import ORBIT_COLUMNS, emit_report, report_json
from cli.runner import FAIL, PASS, SKIPPED, ReportDocument, run_scenario
from cli.selftest import DEFAULT_CHECKS, EXTENDED_CHECKS, SelftestCheck, run_selftest
from dynamics.orbits import OrbitRecord
from ergodic.birkhoff import CONSISTENT, DiagnosticReport, UEThresholds
from main import EXIT_CONFIG, EXIT_INVARIANT, EXIT_OK, main

TWO_PI = 2 * np.pi


def t3_config(tasks=("lk", "currents"), **extra):
    data = {
        "model": {"kind": "t3_contact"},
        "tasks": list(tasks),
        "quadrature": {"scheme": "grid", "resolution": 8},
    }
    data.update(extra)
    return config_from_dict(data)


@pytest.fixture(scope="module")
def t3_report():
    return run_scenario(t3_config())


def synthetic_report(**fields) -> ReportDocument:
    return ReportDocument(config={}, model={"name": "synthetic"}, tasks={}, checks={}, **fields)


class TestRunScenario:
    """Test run_scenario on T^3"""

    def test_tasks_pass(self, t3_report):
        assert t3_report.failed_tasks == []
        assert set(t3_report.tasks) == {"lk", "currents"}
        lk = t3_report.tasks["lk"].result
        assert lk["value"] == pytest.approx(-(TWO_PI ** 3), rel=1e-10)
        assert lk["shifted_value"] == pytest.approx(lk["value"], rel=1e-8)

    def test_checks(self, t3_report):
        checks = t3_report.checks
        assert t3_report.failed_checks == []
        assert checks["primitive_independence"].status == PASS
        assert checks["current_lk_identity"].status == PASS
        assert checks["structure_boundary"].status == PASS
        assert checks["boundary_formula"].status == SKIPPED
        assert checks["lk_contact_or_not_uniquely_ergodic"].status == SKIPPED

    def test_currents_rows(self, t3_report):
        rows = t3_report.tasks["currents"].result["rows"]
        assert len(rows) == 1
        assert rows[0]["measure"]["kind"] == "volume"
        assert rows[0]["value"] == pytest.approx(-(TWO_PI ** 3), rel=1e-10)

    def test_deterministic(self, t3_report):
        again = run_scenario(t3_config())
        assert report_json(again, normalize=True) == report_json(t3_report, normalize=True)

    def test_normalized_report_has_no_timings(self, t3_report):
        data = json.loads(report_json(t3_report, normalize=True))
        assert "timings" not in data
        assert "seconds" not in data["tasks"]["lk"]
        assert data["config"]["model"] == {"kind": "t3_contact"}

    def test_task_failure_is_captured(self):
        """A rejected task argument fails that task only"""
        report = run_scenario(t3_config(tasks=("lk", "certify"), certify={"basis_cap": 3, "samples": 16}))
        assert report.tasks["lk"].status == PASS
        assert report.tasks["certify"].status == FAIL
        assert "sample_count must be at least" in report.tasks["certify"].error

    def test_unbuildable_model(self):
        """Model construction errors surface as ConfigError"""
        config = config_from_dict({
            "model": {"kind": "levelset", "hamiltonian": "custom", "level": 1.0,
                      "terms": [[1.0, [2, 0, 0, 0]], [-1.0, [0, 2, 0, 0]],
                                [1.0, [0, 0, 2, 0]], [1.0, [0, 0, 0, 2]]]},
            "tasks": ["lk"],
        })
        with pytest.raises(ConfigError, match="star-shaped"):
            run_scenario(config)

    def test_hamiltonian_parametrization_needs_hamiltonian(self):
        with pytest.raises(ConfigError, match="no Hamiltonian parametrization"):
            run_scenario(t3_config(integrator={"parametrization": "hamiltonian"}))


class TestEmitReport:
    """Test the report artefacts"""

    def test_files_written(self, t3_report, tmp_path):
        written = emit_report(t3_report, str(tmp_path / "out"), formats=("json", "csv", "plotdata"))
        assert [p.name for p in written] == ["report.json", "currents.csv"]
        data = json.loads(written[0].read_text())
        assert data["schema_version"] == 1
        assert data["tasks"]["lk"]["status"] == PASS

    def test_orbit_table(self, tmp_path):
        orbits = [OrbitRecord(np.zeros(3), TWO_PI, np.pi, 1e-9, contractible=True),
                  OrbitRecord(np.ones(3), 2 * TWO_PI, -1.0, 1e-8, multiplicity=2, family=True)]
        written = emit_report(synthetic_report(orbits=orbits), str(tmp_path), formats=("csv",))
        frame = pd.read_csv(written[0])
        assert written[0].name == "orbits.csv"
        assert list(frame.columns) == ORBIT_COLUMNS
        assert frame["period"].tolist() == pytest.approx([TWO_PI, 2 * TWO_PI])

    def test_ue_curve(self, tmp_path):
        deviations = np.array([[[0.4, 0.1, 0.02]]])
        diagnostic = DiagnosticReport("synthetic", ["f"], [10.0, 100.0, 1000.0], deviations,
                                      {"f": 0.0}, UEThresholds(), CONSISTENT)
        written = emit_report(synthetic_report(diagnostic=diagnostic), str(tmp_path), formats=("plotdata",))
        lines = written[0].read_text().splitlines()
        assert lines[0] == "# horizon max_deviation"
        assert np.loadtxt(written[0]) == pytest.approx(np.array([[10.0, 0.4], [100.0, 0.1], [1000.0, 0.02]]))

    def test_unsupported_format(self, t3_report, tmp_path):
        with pytest.raises(ValueError, match="unsupported report formats"):
            emit_report(t3_report, str(tmp_path), formats=("xml",))


class TestMain:
    """Test the command line exit codes"""

    def test_lk_command(self, tmp_path):
        out = tmp_path / "lk"
        code = main(["lk", "--model", "t3_contact", "--scheme", "grid", "--resolution", "8",
                     "--out", str(out), "--normalize"])
        assert code == EXIT_OK
        data = json.loads((out / "report.json").read_text())
        assert data["tasks"]["lk"]["result"]["value"] == pytest.approx(-(TWO_PI ** 3), rel=1e-10)

    def test_bad_scenario_file(self, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text('tasks = ["lk"]\n\n[modle]\nkind = "t3_contact"\n')
        assert main(["scenario", str(path), "--out", str(tmp_path / "out")]) == EXIT_CONFIG

    def test_missing_scenario_file(self, tmp_path):
        assert main(["scenario", str(tmp_path / "absent.toml")]) == EXIT_CONFIG

    def test_negative_epsilon(self, tmp_path):
        code = main(["lk", "--model", "magnetic_torus", "--epsilon", "-1", "--out", str(tmp_path)])
        assert code == EXIT_CONFIG

    def test_flow_command(self, tmp_path, capsys):
        code = main(["flow", "--model", "t3_contact", "--time", "1.0", "--x0", "0", "0", "0",
                     "--samples-out", "8", "--out", str(tmp_path)])
        assert code == EXIT_OK
        frame = pd.read_csv(tmp_path / "trajectory.csv")
        assert list(frame.columns) == ["t", "x", "y", "z", "drift"]
        assert frame["x"].iloc[-1] == pytest.approx(-1.0, abs=1e-8)

    def test_selftest_exit_codes(self, capsys):
        passing = [SelftestCheck("t3_linking", True, "ok", 0.1)]
        failing = passing + [SelftestCheck("sphere_linking", False, "gap too large", 0.2)]
        with patch("main.run_selftest", return_value=passing):
            assert main(["selftest"]) == EXIT_OK
        with patch("main.run_selftest", return_value=failing) as selftest:
            assert main(["selftest", "--extended"]) == EXIT_INVARIANT
        selftest.assert_called_once_with(extended=True)
        assert "FAIL  sphere_linking" in capsys.readouterr().out


class TestSelftestPlan:
    """Test which checks the selftest runs"""

    def test_only_hyperbolic_suite_is_extended(self):
        assert [name for name, _ in EXTENDED_CHECKS] == ["hyperbolic_bundle"]
        defaults = {name for name, _ in DEFAULT_CHECKS}
        assert {"ellipsoid_orbits", "magnetic_orbits", "sphere_monte_carlo"} <= defaults

    def test_raising_check_is_recorded(self):
        def broken():
            raise ValueError("radial sampler requires star-shaped level")

        checks = [("first", lambda: (True, "ok")), ("broken", broken)]
        with patch("cli.selftest.DEFAULT_CHECKS", checks), \
                patch("cli.selftest.EXTENDED_CHECKS", [("last", lambda: (False, "off"))]):
            results = run_selftest(extended=True)
        assert [r.name for r in results] == ["first", "broken", "last"]
        assert [r.passed for r in results] == [True, False, False]
        assert results[1].detail.startswith("ValueError")
        assert results[2].extended
