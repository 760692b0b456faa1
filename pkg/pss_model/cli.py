"""
Command-line interface.

    python -m pss_model <command> --scenario <file or bundled name> [options]

Commands:
    simulate   rotor angle, speed and frequency traces plus the two-body trajectory
    linear     closed-form coefficients, stage traces and spectra for a small step
    nonlinear  modal pipeline (optionally swept over inertia ratio and model)
    envelope   sine-envelope input response and its spectra
    bode       PSS1A, AVR and cascade frequency responses
    validate   closed form versus time-domain report

Exit codes: 0 success, 1 configuration error, 2 numerical error.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd

from .envelope_input import envelope_response
from .errors import ConfigError, PssModelError, ValidationFailure
from .grid_dynamics import (
    bus_frequency_deviation,
    integrate_rotor,
    integrate_two_body,
    rotor_velocity,
)
from .linear_response import linear_response
from .modal_response import HORIZON_DECAYS, inertia_sweep, nonlinear_response
from .scenario import (
    Scenario,
    SweepSpec,
    bundled_scenario_path,
    load_scenario,
    parse_models,
    parse_stages,
    parse_x_values,
)
from .signal_analysis import (
    spectra_frame,
    spectrum_closed_form,
    spectrum_values,
    traces_frame,
    write_csv,
)
from .stabilizer_blocks import BlockCascade, StabilizerParams, bode
from .validation import report_frame, validate_scenario

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
DEFAULT_OUT_DIR = "outputs"
COMMANDS = ("simulate", "linear", "nonlinear", "envelope", "bode", "validate")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"arguments: {message}")


def build_parser():
    parser = _Parser(prog="pss_model", description="PSS1A/AVR response to low-inertia grid transients")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--scenario", help="scenario JSON file or bundled scenario name")
    parser.add_argument("--out-dir", default=DEFAULT_OUT_DIR)
    parser.add_argument("--stages", help="comma-separated stage names, e.g. v_in,v_pss,v_out")
    parser.add_argument("--tolerance", type=float, help="validate: oracle tolerance")
    parser.add_argument("--models", help="comma-separated models for the inertia sweep")
    parser.add_argument("--x-values", help="comma-separated inertia ratios, 'inf' allowed")
    parser.add_argument("--n-jobs", type=int, default=1, help="parallel workers for the inertia sweep")
    parser.add_argument("--log-level", default="INFO", choices=("DEBUG", "INFO", "WARNING", "ERROR"))
    return parser


def _split(value):
    return [item.strip() for item in value.split(",") if item.strip()]


def _resolve_scenario(args, required=True):
    if args.scenario is None:
        if required:
            raise ConfigError("--scenario: this command needs a scenario")
        return None
    path = Path(args.scenario)
    if not path.exists() and not path.suffix:
        path = bundled_scenario_path(args.scenario)
    scenario = load_scenario(path)
    if args.stages:
        scenario = replace(scenario, output=replace(scenario.output, stages=parse_stages(_split(args.stages),
                                                                                          "--stages")))
    return scenario


def _horizon(scenario, beta):
    if scenario.run.horizon is not None:
        return scenario.run.horizon
    if beta <= 0:
        raise ConfigError("run.horizon: beta = 0 never decays; give an explicit horizon")
    return HORIZON_DECAYS / beta


def _out(args, scenario_name, suffix):
    return os.path.join(args.out_dir, f"{scenario_name}_{suffix}.csv")


# ============================================================================
# COMMANDS
# ============================================================================

def cmd_simulate(args):
    scenario = _resolve_scenario(args)
    scenario.require("machine", "event")
    reduced = scenario.reduced()
    horizon = _horizon(scenario, reduced.beta)
    dt = scenario.run.dt
    machine = scenario.machine

    delta, delta_dot = integrate_rotor(scenario.event, reduced, horizon, dt)
    rotor = traces_frame({
        "delta": delta,
        "delta_dot": delta_dot,
        "rotor_speed": rotor_velocity(delta_dot, reduced.x, machine.omega_base),
        "frequency_deviation": bus_frequency_deviation(delta_dot, machine.poles, reduced.x),
    })
    written = [write_csv(rotor, _out(args, scenario.name, "rotor"))]

    trajectory = integrate_two_body(machine, scenario.model, scenario.two_body_initial(), horizon, dt)
    two_body = traces_frame({
        "theta_gen_dot": trajectory.theta_gen_dot(),
        "theta_grid_dot": trajectory.theta_grid_dot(),
        "delta": trajectory.relative_angle(),
        "speed_deviation": trajectory.generator_speed_deviation(),
    })
    written.append(write_csv(two_body, _out(args, scenario.name, "two_body")))
    return written


def cmd_linear(args):
    scenario = _resolve_scenario(args)
    scenario.require("machine", "event")
    if scenario.input_kind == "envelope":
        raise ConfigError("input_kind: the linear command takes speed, frequency or power inputs")
    reduced = scenario.reduced()
    stages = scenario.output.stages
    result = linear_response(scenario.event, reduced, scenario.input_kind, scenario.stabilizer, scenario.machine,
                             _horizon(scenario, reduced.beta), scenario.run.dt, stages)

    coefficients = result.coefficients.as_dict()
    written = [write_csv(pd.DataFrame({"name": list(coefficients), "value": list(coefficients.values())}),
                         _out(args, scenario.name, "linear_coefficients"))]
    written.append(write_csv(traces_frame(result.closed_form), _out(args, scenario.name, "linear_traces")))

    omegas = scenario.run.omegas()
    spectra = {stage: spectrum_values(spectrum_closed_form(result.coefficients, stage, omegas)) for stage in stages}
    written.append(write_csv(spectra_frame(omegas, spectra, scenario.output.spectrum_component),
                             _out(args, scenario.name, "linear_spectra")))
    return written


def _modes_frame(modes):
    eigenvalues = list(modes.eigenvalues)
    amplitudes = list(modes.amplitudes)
    if modes.dc_offset != 0.0:
        eigenvalues.append(0.0)
        amplitudes.append(modes.dc_offset)
    return pd.DataFrame({
        "eigenvalue_real": np.real(eigenvalues),
        "eigenvalue_imag": np.imag(eigenvalues),
        "amplitude_real": np.real(amplitudes),
        "amplitude_imag": np.imag(amplitudes),
    })


def _write_nonlinear(args, scenario, result, prefix):
    omegas = scenario.run.omegas()
    traces = {"delta": result.delta}
    traces.update(result.closed_form)
    written = [write_csv(traces_frame(traces), _out(args, scenario.name, f"{prefix}_traces"))]
    written.append(write_csv(_modes_frame(result.modes), _out(args, scenario.name, f"{prefix}_modes")))
    spectra = {stage: spectrum_values(spectrum_closed_form(result.coefficients, stage, omegas))
               for stage in result.closed_form}
    written.append(write_csv(spectra_frame(omegas, spectra, scenario.output.spectrum_component),
                             _out(args, scenario.name, f"{prefix}_spectra")))
    return written


def _x_label(x):
    return "inf" if math.isinf(x) else f"{x:g}"


def cmd_nonlinear(args):
    scenario = _resolve_scenario(args)
    scenario.require("machine", "event")
    if scenario.input_kind == "envelope":
        raise ConfigError("input_kind: the nonlinear command takes speed, frequency or power inputs")
    reduced = scenario.reduced()
    horizon = _horizon(scenario, reduced.beta)
    machine = scenario.machine
    stages = scenario.output.stages

    sweep = scenario.sweep
    if args.x_values or args.models:
        base = sweep or SweepSpec(damping=scenario.damping)
        sweep = SweepSpec(
            x_values=parse_x_values([_inf_or_float(v) for v in _split(args.x_values)], "--x-values")
            if args.x_values else base.x_values,
            models=parse_models(_split(args.models), "--models") if args.models else base.models,
            damping=base.damping,
        )

    if sweep is None:
        result = nonlinear_response(scenario.event, reduced, scenario.input_kind, scenario.stabilizer, horizon,
                                    scenario.run.dt, machine.poles, machine.p_max, stages)
        return _write_nonlinear(args, scenario, result, "nonlinear")

    if scenario.beta is None:
        raise ConfigError("machine.beta: the inertia sweep needs a reduced machine section (beta)")
    results = inertia_sweep(scenario.event, scenario.beta, sweep.x_values, sweep.models, scenario.input_kind,
                            scenario.stabilizer, horizon, scenario.run.dt, sweep.damping, n_jobs=args.n_jobs,
                            omega_base=machine.omega_base, poles=machine.poles, p_max=machine.p_max, stages=stages)
    written = []
    for (model, x), result in results:
        written += _write_nonlinear(args, scenario, result, f"{model}_x{_x_label(x)}")
    return written


def _inf_or_float(token):
    if token in ("inf", "Infinity"):
        return "inf"
    try:
        return float(token)
    except ValueError as exc:
        raise ConfigError(f"--x-values: {token!r} is not a number") from exc


def cmd_envelope(args):
    scenario = _resolve_scenario(args)
    scenario.require("envelope")
    result = envelope_response(scenario.envelope, scenario.stabilizer, scenario.run.horizon, scenario.run.dt,
                               scenario.run.omegas(), scenario.output.stages)
    written = [write_csv(traces_frame(result.traces), _out(args, scenario.name, "envelope_traces"))]
    written.append(write_csv(spectra_frame(result.omega_grid, result.spectra, scenario.output.spectrum_component),
                             _out(args, scenario.name, "envelope_spectra")))
    return written


def _bode_frame(samples):
    return pd.DataFrame({
        "omega": [s.omega for s in samples],
        "mag_db": [s.magnitude_db for s in samples],
        "phase_deg": [s.phase_deg for s in samples],
    })


def cmd_bode(args):
    scenario = _resolve_scenario(args, required=False) or Scenario(name="table1")
    params = scenario.stabilizer or StabilizerParams()
    omegas = scenario.run.bode_omegas()
    written = []
    for label, cascade in (("pss", BlockCascade.pss1a(params)), ("avr", BlockCascade.avr(params)),
                           ("cascade", BlockCascade.full(params))):
        written.append(write_csv(_bode_frame(bode(cascade, omegas)), _out(args, scenario.name, f"bode_{label}")))
    return written


def cmd_validate(args):
    scenario = _resolve_scenario(args)
    checks = validate_scenario(scenario, args.tolerance)
    written = [write_csv(report_frame(checks), _out(args, scenario.name, "validation"))]
    worst = max(checks, key=lambda c: c.error / c.tolerance if c.tolerance else math.inf)
    logger.info("worst check %s: error %.3g (tolerance %.3g)", worst.check, worst.error, worst.tolerance)
    failed = [c.check for c in checks if not c.passed]
    if failed:
        raise ValidationFailure(f"{len(failed)} check(s) failed: {', '.join(failed)}")
    return written


HANDLERS = {
    "simulate": cmd_simulate,
    "linear": cmd_linear,
    "nonlinear": cmd_nonlinear,
    "envelope": cmd_envelope,
    "bode": cmd_bode,
    "validate": cmd_validate,
}


def run_command(argv=None):
    """Parse ``argv``, run the command and return the process exit code."""
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as exc:
        logging.basicConfig(level=logging.INFO, format=LOG_FORMAT, stream=sys.stderr)
        logger.error("%s", exc)
        return exc.exit_code
    logging.basicConfig(level=args.log_level, format=LOG_FORMAT, stream=sys.stderr)
    logging.getLogger("pss_model").setLevel(args.log_level)

    try:
        written = HANDLERS[args.command](args)
    except PssModelError as exc:
        logger.error("%s", exc)
        return exc.exit_code
    logger.info("%s: wrote %d file(s) to %s", args.command, len(written), args.out_dir)
    return 0


def main():
    sys.exit(run_command())
