"""Command-line surface: outputs, exit codes and argument errors."""

import json
import os

import pandas as pd
import pytest

from pss_model.cli import run_command

SHORT_STEP = {
    "name": "short",
    "machine": {"beta": 0.3, "x": "inf"},
    "event": {"xi_initial": 1, "xi_final": 5, "delta_initial": 0.3333333333333333, "angle_unit": "pi"},
    "input_kind": "speed",
    "run": {"horizon": 20, "dt": 0.01, "omega_grid": {"start": 0.5, "stop": 5, "points": 10}},
    "output": {"stages": ["v_in", "v_out"]},
}


@pytest.fixture
def short_scenario(tmp_path):
    path = tmp_path / "short.json"
    path.write_text(json.dumps(SHORT_STEP), encoding="utf-8")
    return str(path)


def _run(*argv):
    return run_command([str(a) for a in argv])


def test_bode_without_scenario(tmp_path):
    assert _run("bode", "--out-dir", tmp_path) == 0
    for part in ("pss", "avr", "cascade"):
        frame = pd.read_csv(tmp_path / f"table1_bode_{part}.csv")
        assert list(frame.columns) == ["omega", "mag_db", "phase_deg"]
        assert len(frame) == 400


def test_linear_outputs(tmp_path):
    assert _run("linear", "--scenario", "fig4a_speed", "--out-dir", tmp_path) == 0
    coefficients = pd.read_csv(tmp_path / "fig4a_speed_linear_coefficients.csv")
    table = dict(zip(coefficients["name"], coefficients["value"]))
    assert table["lam"] == pytest.approx(0.15)
    traces = pd.read_csv(tmp_path / "fig4a_speed_linear_traces.csv")
    assert list(traces.columns) == ["t", "v_in", "v_pss", "v_out"]
    spectra = pd.read_csv(tmp_path / "fig4a_speed_linear_spectra.csv")
    assert "v_out_imag_spectrum" in spectra.columns


def test_envelope_outputs(tmp_path):
    assert _run("envelope", "--scenario", "fig7_envelope", "--out-dir", tmp_path) == 0
    traces = pd.read_csv(tmp_path / "fig7_envelope_envelope_traces.csv")
    assert list(traces.columns) == ["t", "v_in", "v_pss", "v_out"]
    spectra = pd.read_csv(tmp_path / "fig7_envelope_envelope_spectra.csv")
    assert len(spectra) == 240
    assert spectra.notna().all().all()


def test_simulate_outputs(tmp_path, short_scenario):
    assert _run("simulate", "--scenario", short_scenario, "--out-dir", tmp_path) == 0
    rotor = pd.read_csv(tmp_path / "short_rotor.csv")
    assert list(rotor.columns) == ["t", "delta", "delta_dot", "rotor_speed", "frequency_deviation"]
    assert len(rotor) == 2001
    two_body = pd.read_csv(tmp_path / "short_two_body.csv")
    assert (two_body["delta"] - rotor["delta"]).abs().max() < 1e-6


def test_simulate_physical_machine(tmp_path):
    machine = {"j_gen": 1.0, "j_grid": "inf", "tau_elmax": 5.0, "k_d": 0.3}
    physical = dict(SHORT_STEP, name="physical", machine=machine)
    path = tmp_path / "physical.json"
    path.write_text(json.dumps(physical), encoding="utf-8")
    assert _run("simulate", "--scenario", path, "--out-dir", tmp_path) == 0
    rotor = pd.read_csv(tmp_path / "physical_rotor.csv")
    two_body = pd.read_csv(tmp_path / "physical_two_body.csv")
    assert (two_body["delta"] - rotor["delta"]).abs().max() < 1e-6

    physical["machine"] = dict(physical["machine"], tau_gen=-0.2)
    path.write_text(json.dumps(physical), encoding="utf-8")
    assert _run("simulate", "--scenario", path, "--out-dir", tmp_path / "mismatch") == 1


def test_nonlinear_outputs(tmp_path, short_scenario):
    assert _run("nonlinear", "--scenario", short_scenario, "--out-dir", tmp_path, "--stages", "v_in,v_pss") == 0
    traces = pd.read_csv(tmp_path / "short_nonlinear_traces.csv")
    assert list(traces.columns) == ["t", "delta", "v_in", "v_pss"]
    modes = pd.read_csv(tmp_path / "short_nonlinear_modes.csv")
    assert list(modes.columns) == ["eigenvalue_real", "eigenvalue_imag", "amplitude_real", "amplitude_imag"]
    assert (modes["eigenvalue_real"] <= 0).all()


def test_nonlinear_sweep_from_flags(tmp_path, short_scenario):
    code = _run("nonlinear", "--scenario", short_scenario, "--out-dir", tmp_path,
                "--x-values", "1,inf", "--models", "kuramoto")
    assert code == 0
    for label in ("1", "inf"):
        assert os.path.exists(tmp_path / f"short_kuramoto_x{label}_traces.csv")
        assert os.path.exists(tmp_path / f"short_kuramoto_x{label}_spectra.csv")


def test_validate_failure_exit_code(tmp_path):
    assert _run("validate", "--scenario", "fig4a_speed", "--out-dir", tmp_path, "--tolerance", "1e-20") == 2
    report = pd.read_csv(tmp_path / "fig4a_speed_validation.csv")
    assert not report["passed"].all()


def test_configuration_errors(tmp_path):
    assert _run("linear", "--out-dir", tmp_path) == 1
    assert _run("linear", "--scenario", "fig99", "--out-dir", tmp_path) == 1
    assert _run("linear", "--scenario", "fig7_envelope", "--out-dir", tmp_path) == 1
    assert _run("explode") == 1
    assert _run("bode", "--n-jobs", "many") == 1
    assert _run("nonlinear", "--scenario", "fig5a_speed", "--x-values", "1,heavy", "--out-dir", tmp_path) == 1
    assert not any(name.endswith(".csv") for name in os.listdir(tmp_path))


def test_numerical_error_exit_code(tmp_path):
    overdamped = dict(SHORT_STEP, name="overdamped", machine={"beta": 20.0, "x": "inf"})
    path = tmp_path / "overdamped.json"
    path.write_text(json.dumps(overdamped), encoding="utf-8")
    assert _run("linear", "--scenario", path, "--out-dir", tmp_path) == 2
