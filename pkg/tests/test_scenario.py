"""Scenario JSON parsing and the bundled figure scenarios."""

import json
import math

import pytest

from pss_model.errors import ConfigError, ParameterError
from pss_model.grid_dynamics import Model, reduce_params
from pss_model.scenario import (
    bundled_scenario_path,
    bundled_scenarios,
    load_scenario,
    parse_scenario,
    parse_x_values,
)

FIG5 = {
    "name": "step",
    "machine": {"beta": 0.3, "x": "inf"},
    "event": {"xi_initial": 1, "xi_final": 5, "delta_initial": 0.3333333333333333, "angle_unit": "pi"},
}


def test_bundled_scenarios_all_load():
    names = bundled_scenarios()
    assert names == ["fig3_bode", "fig4a_speed", "fig4b_power", "fig5a_speed", "fig5b_power",
                     "fig6_inertia_sweep", "fig7_envelope"]
    for name in names:
        assert load_scenario(bundled_scenario_path(name)).name == name


def test_small_step_scenario():
    scenario = load_scenario(bundled_scenario_path("fig4a_speed"))
    assert scenario.event.delta_final == pytest.approx(math.pi / 5, abs=1e-12)
    reduced = scenario.reduced()
    assert reduced.xi == pytest.approx(1.0)
    assert reduced.beta == pytest.approx(0.3)
    assert scenario.beta == 0.3
    assert scenario.sweep is None
    assert scenario.output.stages == ("v_in", "v_pss", "v_out")


def test_reduced_machine_reproduces_event():
    scenario = parse_scenario(FIG5)
    reduced = scenario.reduced()
    assert reduced.xi == pytest.approx(5.0)
    assert reduced.tau_r == pytest.approx(math.sin(math.pi / 3))
    assert scenario.model is Model.CAGE
    assert scenario.run.horizon is None and scenario.run.dt == 1e-3


def test_sweep_section():
    scenario = load_scenario(bundled_scenario_path("fig6_inertia_sweep"))
    assert scenario.sweep.x_values == (0.5, 1.0, 5.0, math.inf)
    assert scenario.sweep.models == ("cage", "kuramoto")
    assert scenario.sweep.damping == "combined"
    assert scenario.output.stages == ("v_in", "v_pss", "v_out")

    generator = dict(FIG5, machine={"beta": 0.3, "damping": "generator"}, sweep={"x_values": [1]})
    assert parse_scenario(generator).sweep.damping == "generator"


def test_physical_machine():
    data = {
        "name": "physical",
        "model": "kuramoto",
        "machine": {"j_gen": 2.0, "j_grid": "inf", "tau_elmax": 4.0, "k_gen_kuramoto": 0.6,
                    "k_grid_kuramoto": 0.6},
        "event": {"xi_initial": 1.0, "delta_initial": 0.5},
    }
    scenario = parse_scenario(data)
    assert scenario.machine.infinite_grid
    assert scenario.event.xi_final == pytest.approx(2.0)
    assert scenario.reduced().beta == pytest.approx(0.3)
    # turbine torques are derived to hold the pre-event equilibrium
    assert scenario.machine.tau_gen == pytest.approx(-2.0 * math.sin(0.5))
    assert scenario.machine.tau_grid == 0.0
    assert reduce_params(scenario.machine, scenario.model).tau_r == pytest.approx(scenario.event.torque)


def test_physical_torques_must_hold_the_event():
    data = {
        "name": "physical",
        "machine": {"j_gen": 1.0, "j_grid": 4.0, "tau_elmax": 4.0, "k_d": 0.3, "tau_gen": -0.5, "tau_grid": 0.5},
        "event": {"xi_initial": 1.0, "delta_initial": 0.5},
    }
    with pytest.raises(ParameterError, match=r"machine\.tau_gen"):
        parse_scenario(data)
    torque = math.sin(0.5)
    data["machine"].update(tau_gen=-torque / 1.25, tau_grid=torque / 1.25)
    scenario = parse_scenario(data)
    assert reduce_params(scenario.machine, scenario.model).tau_r == pytest.approx(torque)



def test_unknown_keys_report_their_path():
    with pytest.raises(ParameterError, match=r"machine\.gamma"):
        parse_scenario(dict(FIG5, machine={"beta": 0.3, "gamma": 1}))
    with pytest.raises(ParameterError, match=r"^colour"):
        parse_scenario(dict(FIG5, colour="red"))


def test_event_needs_exactly_one_target():
    both = dict(FIG5, event={"xi_initial": 1, "xi_final": 5, "delta_initial": 0.5, "delta_final": 0.1})
    with pytest.raises(ParameterError, match="exactly one"):
        parse_scenario(both)
    neither = dict(FIG5, event={"xi_final": 5, "delta_initial": 0.5})
    with pytest.raises(ParameterError, match="exactly one"):
        parse_scenario(neither)


def test_invalid_values_are_prefixed():
    with pytest.raises(ParameterError, match=r"stabilizer\.t1"):
        parse_scenario(dict(FIG5, stabilizer={"t1": -1.0}))
    with pytest.raises(ParameterError, match=r"run\.dt"):
        parse_scenario(dict(FIG5, run={"dt": 0}))
    with pytest.raises(ParameterError, match=r"output\.stages"):
        parse_scenario(dict(FIG5, output={"stages": ["v_in", "v8"]}))
    with pytest.raises(ParameterError, match=r"machine\.beta"):
        parse_scenario(dict(FIG5, machine={"beta": -0.3}))


def test_envelope_section_follows_input_kind():
    with pytest.raises(ParameterError, match="envelope"):
        parse_scenario({"name": "e", "input_kind": "envelope"})
    with pytest.raises(ParameterError, match="envelope"):
        parse_scenario(dict(FIG5, envelope={"amplitude": 1, "omega_e": 0.3, "omega0": 5.2}))
    scenario = load_scenario(bundled_scenario_path("fig7_envelope"))
    assert scenario.envelope.omega0 == 5.2
    assert scenario.output.spectrum_component == "abs"


def test_missing_sections_for_a_command():
    scenario = load_scenario(bundled_scenario_path("fig3_bode"))
    with pytest.raises(ConfigError, match="machine"):
        scenario.reduced()


def test_x_values():
    assert parse_x_values([0.5, "inf"]) == (0.5, math.inf)
    with pytest.raises(ParameterError):
        parse_x_values([0.0])
    with pytest.raises(ParameterError):
        parse_x_values("1,2")


def test_file_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_scenario(tmp_path / "missing.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_scenario(broken)
    with pytest.raises(ConfigError, match="no bundled scenario"):
        bundled_scenario_path("fig99")


def test_round_trip_through_a_file(tmp_path):
    path = tmp_path / "step.json"
    path.write_text(json.dumps(FIG5), encoding="utf-8")
    assert load_scenario(path).event.xi_final == 5.0
