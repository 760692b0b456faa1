"""
Scenario files.

A scenario is one UTF-8 JSON document describing a figure run:

    {
      "name": "fig5a_speed",
      "model": "cage",
      "machine": {"beta": 0.3, "x": "inf"},
      "event": {"xi_initial": 1, "xi_final": 5, "delta_initial": 0.3333333333333333, "angle_unit": "pi"},
      "stabilizer": {},
      "input_kind": "speed",
      "run": {"horizon": 60, "dt": 0.001},
      "output": {"stages": ["v_in", "v_pss", "v_out"], "spectrum_component": "imag"}
    }

``machine`` is either reduced (``beta``, ``x``, ``damping``; the physical
constants are then derived so the cage model reproduces xi_II and beta) or
physical (the ``MachineParams`` fields). Unknown keys are rejected at every
level with their dotted path.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .envelope_input import EnvelopeInput
from .errors import ConfigError, ParameterError
from .grid_dynamics import (
    DEFAULT_OMEGA_BASE,
    MachineParams,
    Model,
    TransientEvent,
    TwoBodyState,
    equilibrium_state,
    inertia_factor,
    reduce_params,
    scenario_machine,
)
from .linear_response import INPUT_KINDS
from .signal_analysis import SPECTRUM_COMPONENTS, make_omega_grid
from .stabilizer_blocks import ALL_STAGES, StabilizerParams

logger = logging.getLogger(__name__)

SCENARIO_DIR = Path(__file__).resolve().parent / "scenarios"

TOP_LEVEL_KEYS = ("name", "model", "machine", "event", "stabilizer", "input_kind", "envelope",
                  "initial_state", "sweep", "run", "output")
REDUCED_MACHINE_KEYS = ("beta", "x", "damping", "j_gen", "omega_base", "poles", "p_max")
PHYSICAL_MACHINE_KEYS = ("j_gen", "j_grid", "k_d", "k_gen_kuramoto", "k_grid_kuramoto", "tau_elmax",
                         "tau_gen", "tau_grid", "omega_base", "poles", "p_max")
EVENT_KEYS = ("xi_initial", "xi_final", "delta_initial", "delta_final", "event_time", "angle_unit")
GRID_KEYS = ("start", "stop", "points", "spacing")

DEFAULT_DT = 1e-3
DEFAULT_OMEGA_GRID = {"start": 0.05, "stop": 12.0, "points": 240, "spacing": "linear"}
DEFAULT_BODE_GRID = {"start": 1e-3, "stop": 1e3, "points": 400, "spacing": "log"}
DEFAULT_STAGES = ("v_in", "v_pss", "v_out")


@dataclass(frozen=True)
class SweepSpec:
    x_values: tuple = (0.5, 1.0, 5.0, math.inf)
    models: tuple = ("cage", "kuramoto")
    damping: str = "combined"


@dataclass(frozen=True)
class RunSpec:
    horizon: float | None = None
    dt: float = DEFAULT_DT
    omega_grid: dict = field(default_factory=lambda: dict(DEFAULT_OMEGA_GRID))
    bode_grid: dict = field(default_factory=lambda: dict(DEFAULT_BODE_GRID))

    def omegas(self):
        return make_omega_grid(**self.omega_grid)

    def bode_omegas(self):
        return make_omega_grid(**self.bode_grid)


@dataclass(frozen=True)
class OutputSpec:
    stages: tuple = DEFAULT_STAGES
    spectrum_component: str = "imag"


@dataclass(frozen=True)
class Scenario:
    name: str
    model: Model = Model.CAGE
    machine: MachineParams | None = None
    event: TransientEvent | None = None
    stabilizer: StabilizerParams = field(default_factory=StabilizerParams)
    input_kind: str = "speed"
    envelope: EnvelopeInput | None = None
    initial_state: TwoBodyState | None = None
    sweep: SweepSpec | None = None
    run: RunSpec = field(default_factory=RunSpec)
    output: OutputSpec = field(default_factory=OutputSpec)
    beta: float | None = None      # reduced damping when the machine section was reduced
    damping: str = "combined"

    def reduced(self):
        """Post-event reduced parameters (xi_II and the pre-event torque)."""
        self.require("machine", "event")
        return self.event.post_event(reduce_params(self.machine, self.model))

    def two_body_initial(self):
        if self.initial_state is not None:
            return self.initial_state
        self.require("event")
        return equilibrium_state(self.event, self.machine.omega_base if self.machine else DEFAULT_OMEGA_BASE)

    def require(self, *sections):
        for section in sections:
            if getattr(self, section) is None:
                raise ConfigError(f"{section}: scenario {self.name!r} needs a {section} section for this command")


# ============================================================================
# PARSING
# ============================================================================

def _check_keys(data, allowed, path):
    if not isinstance(data, dict):
        raise ParameterError(path, "expected a JSON object")
    for key in data:
        if key not in allowed:
            dotted = f"{path}.{key}" if path else key
            raise ParameterError(dotted, "unknown key")


def _number(value, path, allow_inf=False):
    if allow_inf and value in ("inf", "Infinity"):
        return math.inf
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParameterError(path, f"expected a number, got {value!r}")
    return float(value)


def _integer(value, path):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParameterError(path, f"expected an integer, got {value!r}")
    return value


def _choice(value, choices, path):
    if value not in choices:
        raise ParameterError(path, f"expected one of {', '.join(choices)}, got {value!r}")
    return value


def _build(factory, kwargs, path):
    """Construct a parameter type, prefixing invariant violations with ``path``."""
    try:
        return factory(**kwargs)
    except ParameterError as exc:
        raise ParameterError(f"{path}.{exc.field}", exc.message) from exc


def _parse_event(data, path, default_xi_final=None):
    _check_keys(data, EVENT_KEYS, path)
    unit = _choice(data.get("angle_unit", "rad"), ("rad", "pi"), f"{path}.angle_unit")
    scale = math.pi if unit == "pi" else 1.0
    if "delta_initial" not in data:
        raise ParameterError(f"{path}.delta_initial", "missing")
    delta_initial = _number(data["delta_initial"], f"{path}.delta_initial") * scale
    event_time = _number(data.get("event_time", 0.0), f"{path}.event_time")

    if "xi_final" in data:
        xi_final = _number(data["xi_final"], f"{path}.xi_final")
    elif default_xi_final is not None:
        xi_final = default_xi_final
    else:
        raise ParameterError(f"{path}.xi_final", "missing")

    if ("xi_initial" in data) == ("delta_final" in data):
        raise ParameterError(f"{path}.xi_initial", "give exactly one of xi_initial and delta_final")
    if "delta_final" in data:
        delta_final = _number(data["delta_final"], f"{path}.delta_final") * scale
        return _build(
            lambda **kw: TransientEvent.from_angles(**kw),
            dict(xi_final=xi_final, delta_initial=delta_initial, delta_final=delta_final, event_time=event_time),
            path,
        )
    xi_initial = _number(data["xi_initial"], f"{path}.xi_initial")
    return _build(
        TransientEvent,
        dict(xi_initial=xi_initial, xi_final=xi_final, delta_initial=delta_initial, event_time=event_time),
        path,
    )


def _parse_physical_machine(data, path):
    _check_keys(data, PHYSICAL_MACHINE_KEYS, path)
    kwargs = {}
    for key, value in data.items():
        if key == "poles":
            kwargs[key] = _integer(value, f"{path}.{key}")
        elif key == "j_grid":
            j_grid = _number(value, f"{path}.{key}", allow_inf=True)
            if math.isinf(j_grid):
                kwargs["infinite_grid"] = True
            else:
                kwargs["j_grid"] = j_grid
        else:
            kwargs[key] = _number(value, f"{path}.{key}")
    for key in ("j_gen", "tau_elmax"):
        if key not in kwargs:
            raise ParameterError(f"{path}.{key}", "missing")
    return _build(MachineParams, kwargs, path)


def _match_event_torque(machine, event, model, data, path):
    """
    Physical machine whose turbine torques hold the event's pre-event
    equilibrium. Missing torques are derived; explicit ones must agree.
    """
    if "tau_gen" not in data and "tau_grid" not in data:
        tau_gen = -event.torque * machine.j_gen / inertia_factor(machine.x)
        tau_grid = 0.0 if machine.infinite_grid else -tau_gen
        return replace(machine, tau_gen=tau_gen, tau_grid=tau_grid)
    tau_r = reduce_params(machine, model).tau_r
    if abs(tau_r - event.torque) > 1e-9 * max(1.0, abs(event.torque)):
        raise ParameterError(
            f"{path}.tau_gen",
            f"turbine torques give tau_r = {tau_r:.6g} but the event holds xi_I sin(delta_I) = {event.torque:.6g}",
        )
    return machine


def _parse_reduced_machine(data, event, path):
    _check_keys(data, REDUCED_MACHINE_KEYS, path)
    if event is None:
        raise ParameterError("event", "a reduced machine section needs an event")
    beta = _number(data["beta"], f"{path}.beta")
    if beta < 0:
        raise ParameterError(f"{path}.beta", f"must be >= 0, got {beta!r}")
    x = _number(data.get("x", "inf"), f"{path}.x", allow_inf=True)
    damping = _choice(data.get("damping", "combined"), ("combined", "generator"), f"{path}.damping")
    kwargs = dict(damping=damping)
    for key in ("j_gen", "omega_base", "p_max"):
        if key in data:
            kwargs[key] = _number(data[key], f"{path}.{key}")
    if "poles" in data:
        kwargs["poles"] = _integer(data["poles"], f"{path}.poles")
    machine = _build(lambda **kw: scenario_machine(event, beta, x, **kw), kwargs, path)
    return machine, beta, damping


def _parse_grid(data, path, default):
    _check_keys(data, GRID_KEYS, path)
    grid = dict(default)
    for key in ("start", "stop"):
        if key in data:
            grid[key] = _number(data[key], f"{path}.{key}")
    if "points" in data:
        grid["points"] = _integer(data["points"], f"{path}.points")
    if "spacing" in data:
        grid["spacing"] = _choice(data["spacing"], ("linear", "log"), f"{path}.spacing")
    make_omega_grid(**grid)
    return grid


def _parse_run(data, path="run"):
    _check_keys(data, ("horizon", "dt", "omega_grid", "bode_grid"), path)
    horizon = None
    if data.get("horizon") is not None:
        horizon = _number(data["horizon"], f"{path}.horizon")
        if not horizon > 0:
            raise ParameterError(f"{path}.horizon", "must be > 0")
    dt = _number(data.get("dt", DEFAULT_DT), f"{path}.dt")
    if not dt > 0:
        raise ParameterError(f"{path}.dt", "must be > 0")
    return RunSpec(
        horizon=horizon,
        dt=dt,
        omega_grid=_parse_grid(data.get("omega_grid", {}), f"{path}.omega_grid", DEFAULT_OMEGA_GRID),
        bode_grid=_parse_grid(data.get("bode_grid", {}), f"{path}.bode_grid", DEFAULT_BODE_GRID),
    )


def parse_stages(stages, path="output.stages"):
    if isinstance(stages, str) or not isinstance(stages, (list, tuple)) or not stages:
        raise ParameterError(path, "expected a non-empty list of stage names")
    for stage in stages:
        _choice(stage, ALL_STAGES, path)
    return tuple(stages)


def parse_x_values(values, path="sweep.x_values"):
    if isinstance(values, str) or not isinstance(values, (list, tuple)) or not values:
        raise ParameterError(path, "expected a non-empty list of inertia ratios")
    parsed = tuple(_number(v, path, allow_inf=True) for v in values)
    for x in parsed:
        if not x > 0:
            raise ParameterError(path, f"inertia ratios must be > 0 or inf, got {x!r}")
    return parsed


def parse_models(values, path="sweep.models"):
    if isinstance(values, str) or not isinstance(values, (list, tuple)) or not values:
        raise ParameterError(path, "expected a non-empty list of models")
    return tuple(_choice(v, tuple(m.value for m in Model), path) for v in values)


def _parse_sweep(data, path="sweep"):
    _check_keys(data, ("x_values", "models", "damping"), path)
    default = SweepSpec()
    return SweepSpec(
        x_values=parse_x_values(data["x_values"], f"{path}.x_values") if "x_values" in data else default.x_values,
        models=parse_models(data["models"], f"{path}.models") if "models" in data else default.models,
        damping=_choice(data.get("damping", default.damping), ("combined", "generator"), f"{path}.damping"),
    )


def _parse_output(data, path="output"):
    _check_keys(data, ("stages", "spectrum_component"), path)
    return OutputSpec(
        stages=parse_stages(data["stages"], f"{path}.stages") if "stages" in data else DEFAULT_STAGES,
        spectrum_component=_choice(data.get("spectrum_component", "imag"), SPECTRUM_COMPONENTS,
                                   f"{path}.spectrum_component"),
    )


def parse_scenario(data):
    """Scenario from an already decoded JSON document."""
    _check_keys(data, TOP_LEVEL_KEYS, "")
    name = data.get("name")
    if not isinstance(name, str) or not name:
        raise ParameterError("name", "a non-empty scenario name is required")
    model = Model(_choice(data.get("model", "cage"), tuple(m.value for m in Model), "model"))
    input_kind = _choice(data.get("input_kind", "speed"), INPUT_KINDS + ("envelope",), "input_kind")

    stabilizer_data = data.get("stabilizer", {})
    _check_keys(stabilizer_data, tuple(StabilizerParams.__dataclass_fields__), "stabilizer")
    stabilizer = _build(
        StabilizerParams,
        {key: _number(value, f"stabilizer.{key}") for key, value in stabilizer_data.items()},
        "stabilizer",
    )

    machine_data = data.get("machine")
    machine = None
    beta = None
    damping = "combined"
    if machine_data is not None and "beta" not in machine_data:
        machine = _parse_physical_machine(machine_data, "machine")
    event = None
    if data.get("event") is not None:
        default_xi = reduce_params(machine, model).xi if machine is not None else None
        event = _parse_event(data["event"], "event", default_xi)
        if machine is not None:
            machine = _match_event_torque(machine, event, model, machine_data, "machine")
    if machine_data is not None and "beta" in machine_data:
        machine, beta, damping = _parse_reduced_machine(machine_data, event, "machine")

    envelope = None
    if data.get("envelope") is not None:
        envelope_data = data["envelope"]
        _check_keys(envelope_data, ("amplitude", "omega_e", "omega0"), "envelope")
        envelope = _build(
            EnvelopeInput,
            {key: _number(value, f"envelope.{key}") for key, value in envelope_data.items()},
            "envelope",
        )
    if (envelope is not None) != (input_kind == "envelope"):
        raise ParameterError("envelope", "an envelope section is required exactly when input_kind is 'envelope'")

    initial_state = None
    if data.get("initial_state") is not None:
        state_data = data["initial_state"]
        _check_keys(state_data, ("theta_gen", "theta_grid", "theta_gen_dot", "theta_grid_dot"), "initial_state")
        initial_state = _build(
            TwoBodyState,
            {key: _number(value, f"initial_state.{key}") for key, value in state_data.items()},
            "initial_state",
        )

    sweep = None
    if data.get("sweep") is not None:
        sweep = _parse_sweep(data["sweep"])
        if "damping" not in data["sweep"]:
            sweep = SweepSpec(sweep.x_values, sweep.models, damping)

    return Scenario(
        name=name,
        model=model,
        machine=machine,
        event=event,
        stabilizer=stabilizer,
        input_kind=input_kind,
        envelope=envelope,
        initial_state=initial_state,
        sweep=sweep,
        run=_parse_run(data.get("run", {})),
        output=_parse_output(data.get("output", {})),
        beta=beta,
        damping=damping,
    )


def load_scenario(path):
    """Read and validate a scenario JSON file."""
    path = Path(path)
    try:
        with path.open(encoding="utf-8") as handle:
            data = json.load(handle)
    except FileNotFoundError as exc:
        raise ConfigError(f"scenario: file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scenario: {path} is not valid JSON ({exc.msg} at line {exc.lineno})") from exc
    scenario = parse_scenario(data)
    logger.info("loaded scenario %r from %s", scenario.name, path)
    return scenario


def bundled_scenarios():
    """Names of the scenario files shipped with the package."""
    return sorted(p.stem for p in SCENARIO_DIR.glob("*.json"))


def bundled_scenario_path(name):
    path = SCENARIO_DIR / f"{name}.json"
    if not path.exists():
        raise ConfigError(f"scenario: no bundled scenario named {name!r}; available: {', '.join(bundled_scenarios())}")
    return path
