import json

import pytest

from risnet import cli
from risnet.calculation.validation import CheckResult
from risnet.exceptions import NumericalError

FAST_QUADRATURE = {
    "rel_tol": 1e-6,
    "cluster_radial_nodes": 12,
    "cluster_angular_nodes": 16,
    "signal_radial_nodes": 24,
    "signal_angular_nodes": 48,
}


def write_config(tmp_path, **params):
    path = tmp_path / "experiment.json"
    config = {
        "schema": 1,
        "scenario": "coverage",
        "params": {"include_interference": False, **params},
        "mc_samples": 0,
        "quadrature": FAST_QUADRATURE,
        "output_path": str(tmp_path / "default.csv"),
    }
    path.write_text(json.dumps(config), encoding="utf-8")
    return path


def test_run_writes_requested_output(tmp_path):
    output = tmp_path / "cli.csv"
    code = cli.main(
        ["run", "--config", str(write_config(tmp_path)), "--output", str(output),
         "--seed", "3"]
    )
    assert code == cli.EXIT_OK
    assert output.exists()
    assert not (tmp_path / "default.csv").exists()
    assert len(output.read_text().splitlines()) == 6


def test_invalid_config_exit_code(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"scenario": "coverage", "mc_samples": 7}))
    assert cli.main(["run", "--config", str(path)]) == cli.EXIT_CONFIG


def test_invalid_override_exit_code(tmp_path):
    path = write_config(tmp_path)
    code = cli.main(["run", "--config", str(path), "--mc-samples", "10"])
    assert code == cli.EXIT_CONFIG


def test_infeasible_parameters_exit_code(tmp_path):
    path = write_config(tmp_path, m_total=2_000_000)
    code = cli.main(
        ["run", "--config", str(path), "--output", str(tmp_path / "never.csv")]
    )
    assert code == cli.EXIT_INFEASIBLE
    assert not (tmp_path / "never.csv").exists()


def test_command_is_required():
    with pytest.raises(SystemExit):
        cli.main([])


def _check(name: str, passed: bool) -> CheckResult:
    return CheckResult(name=name, deviation=0.5, bound=1.0, passed=passed)


def test_validate_reports_every_check(monkeypatch, capsys):
    calls = {}

    def fake_validation(quick, seed, progress_callback):
        calls.update(quick=quick, seed=seed)
        return [_check("first", True), _check("second", False)]

    monkeypatch.setattr(cli, "run_validation", fake_validation)
    code = cli.main(["validate", "--quick", "--seed", "4"])
    out = capsys.readouterr().out
    assert code == cli.EXIT_CHECK_FAILED
    assert calls == {"quick": True, "seed": 4}
    assert "PASS  first" in out
    assert "FAIL  second" in out


def test_validate_passes(monkeypatch):
    monkeypatch.setattr(
        cli, "run_validation", lambda **kwargs: [_check("only", True)]
    )
    assert cli.main(["validate"]) == cli.EXIT_OK


def test_numerical_failure_has_its_own_exit_code(monkeypatch):
    def failing_validation(**kwargs):
        raise NumericalError("no convergence", partial=0.5, error_estimate=0.1)

    monkeypatch.setattr(cli, "run_validation", failing_validation)
    code = cli.main(["validate"])
    assert code == cli.EXIT_NUMERICAL
    assert code not in (cli.EXIT_CHECK_FAILED, cli.EXIT_CONFIG, cli.EXIT_INFEASIBLE)
