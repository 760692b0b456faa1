"""
Closed-form linear transient response.

A small coupling step leaves the rotor ringing as a single damped
oscillation. Each input signal (rotor speed deviation, bus frequency
deviation, electrical power) is then

    V_in(t) = (a0 sin w0 t + b0 cos w0 t) exp(-lam t) + V_inf

and every stage of the PSS1A/AVR cascade answers with the same oscillation
plus one decaying exponential per stage pole already passed. The
coefficients are computed by mapping the complex amplitude b - i a through
each stage gain at p = -lam + i w0 and closing each new pole term on the
stage's value at t = 0.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, PoleCollisionError, RegimeError, UnknownStageError
from .grid_dynamics import speed_weight
from .signal_analysis import ExponentialSum
from .stabilizer_blocks import ALL_STAGES, MODE_TOLERANCE, BlockCascade, propagate_cascade, simulate_cascade

logger = logging.getLogger(__name__)

INPUT_KINDS = ("speed", "frequency", "power")
SMALL_DEVIATION = math.pi / 20  # rad; larger steps get a warning on the linear path

# decaying terms per stage, in the order their poles are passed
STAGE_TERMS = {
    "v_in": (),
    "v1": (("c", "T6"),),
    "v2": (("c", "T6"), ("d", "T5")),
    "v3": (("c", "T6"), ("d", "T5"), ("e", "T2")),
    "v_pss": (("c", "T6"), ("d", "T5"), ("e", "T2"), ("f", "T4")),
    "v_r": (("c", "T6"), ("d", "T5"), ("e", "T2"), ("f", "T4")),
    "v_out": (("c", "T6"), ("d", "T5"), ("e", "T2"), ("f", "T4"), ("g", "T_S")),
}
STAGE_SUFFIX = {"v_in": "0", "v1": "1", "v2": "2", "v3": "3", "v_pss": "4", "v_r": "_r", "v_out": "_out"}


@dataclass(frozen=True)
class DampedOscillation:
    """(a0 sin w0 t + b0 cos w0 t) exp(-lam t) + v_inf."""

    a0: float
    b0: float
    v_inf: float
    lam: float
    omega0: float

    def __post_init__(self):
        for name in ("a0", "b0", "v_inf", "lam", "omega0"):
            if not math.isfinite(getattr(self, name)):
                raise ParameterError(name, "must be finite")
        if self.lam < 0:
            raise ParameterError("lam", f"decay rate must be >= 0, got {self.lam!r}")
        if self.omega0 <= 0:
            raise ParameterError("omega0", f"oscillation frequency must be > 0, got {self.omega0!r}")

    @property
    def rate(self):
        return complex(-self.lam, self.omega0)

    def as_sum(self):
        return ExponentialSum([complex(self.b0, -self.a0)], [self.rate], self.v_inf)

    @property
    def pre_level(self):
        """V_in(0): the level the cascade is assumed to rest at before the event."""
        return self.b0 + self.v_inf

    def evaluate(self, t):
        return self.as_sum().evaluate(t)

    def sample(self, horizon, dt):
        return self.as_sum().sample(horizon, dt)


@dataclass(frozen=True)
class CascadeCoefficients:
    """Per-stage closed-form coefficients of the linear response."""

    lam: float
    omega0: float
    v_inf: float
    a0: float
    b0: float
    a1: float
    b1: float
    c1: float
    a2: float
    b2: float
    c2: float
    d2: float
    a3: float
    b3: float
    c3: float
    d3: float
    e3: float
    a4: float
    b4: float
    c4: float
    d4: float
    e4: float
    f4: float
    a_r: float
    b_r: float
    c_r: float
    d_r: float
    e_r: float
    f_r: float
    s_r: float
    a_out: float
    b_out: float
    c_out: float
    d_out: float
    e_out: float
    f_out: float
    g_out: float
    k_ps: float = 1.0
    time_constants: dict = field(default_factory=dict)

    def coefficient(self, letter, stage):
        return getattr(self, f"{letter}{STAGE_SUFFIX[stage]}")

    def stage_constant(self, stage):
        if stage in ("v_in", "v1"):
            return self.v_inf
        if stage == "v_r":
            return self.s_r
        if stage == "v_out":
            return self.k_ps * self.s_r
        return 0.0

    def stage_sum(self, stage):
        """The named stage as an ExponentialSum."""
        if stage not in STAGE_TERMS:
            raise UnknownStageError(stage, ALL_STAGES)
        amplitudes = [complex(self.coefficient("b", stage), -self.coefficient("a", stage))]
        rates = [complex(-self.lam, self.omega0)]
        for letter, tau in STAGE_TERMS[stage]:
            amplitudes.append(self.coefficient(letter, stage))
            rates.append(-1.0 / self.time_constants[tau])
        return ExponentialSum(amplitudes, rates, self.stage_constant(stage))

    def as_dict(self):
        """Coefficient name -> value, in stage order."""
        names = ["lam", "omega0", "v_inf", "a0", "b0"]
        for stage in ALL_STAGES[1:]:
            names += [f"a{STAGE_SUFFIX[stage]}", f"b{STAGE_SUFFIX[stage]}"]
            names += [f"{letter}{STAGE_SUFFIX[stage]}" for letter, _ in STAGE_TERMS[stage]]
            if stage == "v_r":
                names.append("s_r")
        return {name: float(getattr(self, name)) for name in names}


# ============================================================================
# INPUT SIGNALS
# ============================================================================

def linear_mode(reduced, delta_final):
    """Decay rate lam = beta/2 and frequency w0 = sqrt(xi cos(delta_II) - beta^2/4)."""
    lam = reduced.beta / 2.0
    radicand = reduced.xi * math.cos(delta_final) - lam * lam
    if radicand <= 0.0:
        raise RegimeError(
            f"xi cos(delta_II) - beta^2/4 = {radicand:.6g} <= 0: the post-event response is not "
            "an oscillation; use the nonlinear (modal) path"
        )
    return lam, math.sqrt(radicand)


def _speed_amplitude(reduced, delta_initial, delta_final):
    lam, omega0 = linear_mode(reduced, delta_final)
    a0 = reduced.xi * (delta_initial - delta_final) * math.cos(delta_final) / omega0
    return lam, omega0, a0


def input_rotor_speed_deviation(reduced, delta_initial, delta_final):
    """Generator speed deviation -x/(x+1) delta'(t) of the linearized rotor."""
    lam, omega0, a0 = _speed_amplitude(reduced, delta_initial, delta_final)
    return DampedOscillation(a0=a0 * speed_weight(reduced.x), b0=0.0, v_inf=0.0, lam=lam, omega0=omega0)


def input_frequency_deviation(machine, reduced, delta_initial, delta_final):
    """Bus frequency deviation -(p/2) x/(x+1) delta'(t)."""
    lam, omega0, a0 = _speed_amplitude(reduced, delta_initial, delta_final)
    scale = 0.5 * machine.poles * speed_weight(reduced.x)
    return DampedOscillation(a0=a0 * scale, b0=0.0, v_inf=0.0, lam=lam, omega0=omega0)


def input_electrical_power(machine, reduced, delta_initial, delta_final):
    """P_max sin(delta(t)) linearized about delta_II."""
    lam, omega0 = linear_mode(reduced, delta_final)
    b0 = machine.p_max * (delta_initial - delta_final) * math.cos(delta_final)
    return DampedOscillation(
        a0=b0 * lam / omega0,
        b0=b0,
        v_inf=machine.p_max * math.sin(delta_final),
        lam=lam,
        omega0=omega0,
    )


def linear_input(input_kind, machine, reduced, delta_initial, delta_final):
    if input_kind == "speed":
        return input_rotor_speed_deviation(reduced, delta_initial, delta_final)
    if input_kind == "frequency":
        return input_frequency_deviation(machine, reduced, delta_initial, delta_final)
    if input_kind == "power":
        return input_electrical_power(machine, reduced, delta_initial, delta_final)
    raise ParameterError("input_kind", f"expected one of {', '.join(INPUT_KINDS)}, got {input_kind!r}")


# ============================================================================
# CASCADE
# ============================================================================

def _check_decay(oscillation, pss):
    for name, tau in pss.closed_form_poles().items():
        if abs(oscillation.lam * tau - 1.0) < MODE_TOLERANCE:
            raise PoleCollisionError(
                f"input decay rate {oscillation.lam:.12g} 1/s coincides with 1/{name} = {1.0 / tau:.12g} 1/s"
            )


def cascade_linear(oscillation, pss):
    """Closed-form coefficients of every stage for a damped-oscillation input."""
    pss.check_pole_separation()
    _check_decay(oscillation, pss)
    stages = propagate_cascade(BlockCascade.full(pss), oscillation.as_sum(), oscillation.pre_level)

    values = {"lam": oscillation.lam, "omega0": oscillation.omega0, "v_inf": oscillation.v_inf,
              "a0": oscillation.a0, "b0": oscillation.b0}
    for stage, series in stages.items():
        suffix = STAGE_SUFFIX[stage]
        values[f"a{suffix}"] = -series.amplitudes[0].imag
        values[f"b{suffix}"] = series.amplitudes[0].real
        for (letter, _), amplitude in zip(STAGE_TERMS[stage], series.amplitudes[1:]):
            values[f"{letter}{suffix}"] = amplitude.real
    values["s_r"] = stages["v_r"].constant

    time_constants = {"T6": pss.t6, "T5": pss.t5, "T2": pss.t2, "T4": pss.t4, "T_S": pss.t_s}
    return CascadeCoefficients(k_ps=pss.k_ps, time_constants=time_constants, **values)


def eval_linear(coeffs, stage, t):
    """Value of the named stage at t >= 0 (scalar or array)."""
    if np.any(np.asarray(t) < 0):
        raise ParameterError("t", "closed forms hold for t >= 0")
    return coeffs.stage_sum(stage).evaluate(t)


# ============================================================================
# PIPELINE
# ============================================================================

def is_small_step(event):
    """|delta_I - delta_II| within the small-signal bound, up to rounding of the angles."""
    return abs(event.delta_initial - event.delta_final) <= SMALL_DEVIATION * (1.0 + 1e-9)


@dataclass(frozen=True, eq=False)
class LinearResult:
    oscillation: DampedOscillation
    coefficients: CascadeCoefficients
    closed_form: dict
    oracle: dict


def linear_response(event, reduced, input_kind, pss, machine, horizon, dt, stages=ALL_STAGES):
    """
    Linear input for ``event``, its closed-form stage signals and the
    time-domain oracle on the same grid, keyed by stage name.
    """
    post = event.post_event(reduced)
    if not is_small_step(event):
        deviation = abs(event.delta_initial - event.delta_final)
        logger.warning(
            "|delta_I - delta_II| = %.4g rad exceeds %.4g rad; the linear closed form may be inaccurate",
            deviation, SMALL_DEVIATION,
        )
    oscillation = linear_input(input_kind, machine, post, event.delta_initial, event.delta_final)
    coefficients = cascade_linear(oscillation, pss)
    logger.info("linear %s input: lam=%.6g 1/s, omega0=%.6g rad/s", input_kind, oscillation.lam, oscillation.omega0)

    input_trace = oscillation.sample(horizon, dt)
    oracle = {"v_in": input_trace}
    oracle.update(simulate_cascade(BlockCascade.full(pss), input_trace, oscillation.pre_level))
    closed_form = {stage: input_trace.with_samples(eval_linear(coefficients, stage, input_trace.times))
                   for stage in stages}
    return LinearResult(oscillation, coefficients, closed_form, {stage: oracle[stage] for stage in stages})
