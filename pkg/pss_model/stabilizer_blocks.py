"""
PSS1A and AVR block cascade.

The stabilizing path is six first-order stages fed by V_in:

    v1     low-pass      1 / (1 + s T6)
    v2     washout       K_S s T5 / (1 + s T5)
    v3     lead-lag      (1 + s T1) / (1 + s T2)
    v_pss  lead-lag      (1 + s T3) / (1 + s T4)
    v_r    AVR PI        K_PR (1 + s T_N) / (s T_N)
    v_out  bridge        K_PS / (1 + s T_S)

Polynomials are stored in descending powers of s (scipy.signal convention).
``simulate_cascade`` is the time-domain reference every closed form is
checked against.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, fields

import numpy as np
from scipy import signal

from .errors import ParameterError, PoleCollisionError, PoleEvaluationError, ResolutionError, UnknownStageError
from .signal_analysis import ExponentialSum

logger = logging.getLogger(__name__)

STAGE_NAMES = ("v1", "v2", "v3", "v_pss", "v_r", "v_out")
PSS_STAGES = STAGE_NAMES[:4]
AVR_STAGES = STAGE_NAMES[4:]
ALL_STAGES = ("v_in",) + STAGE_NAMES

TIME_CONSTANT_TOLERANCE = 1e-9   # s, closed-form pole separation
MODE_TOLERANCE = 1e-9            # |1 + r T| below this counts as a mode/pole collision
RESOLUTION_LIMIT = 4             # dt must stay below T_min / RESOLUTION_LIMIT
INTERNAL_RESOLUTION = 10         # internal step T_min / INTERNAL_RESOLUTION
POLE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class StabilizerParams:
    """PSS1A and AVR constants; the defaults are the reference tuning."""

    t1: float = 0.4
    t2: float = 1.0
    t3: float = 0.1
    t4: float = 0.05
    t5: float = 2.0
    t6: float = 0.028
    k_s: float = 0.8
    t_n: float = 2.0      # AVR integration time
    t_s: float = 1.8e-3   # bridge time constant
    k_pr: float = 1.0
    k_ps: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ParameterError(f.name, f"must be a finite number, got {value!r}")
            if f.name.startswith("t") and value <= 0:
                raise ParameterError(f.name, f"time constant must be > 0, got {value!r}")
            if f.name.startswith("k") and value < 0:
                raise ParameterError(f.name, f"gain must be >= 0, got {value!r}")

    def closed_form_poles(self):
        """Time constants whose poles appear in closed-form denominators."""
        return {"T2": self.t2, "T4": self.t4, "T5": self.t5, "T6": self.t6, "T_S": self.t_s}

    def check_pole_separation(self, tolerance=TIME_CONSTANT_TOLERANCE):
        """Raise PoleCollisionError when two closed-form poles coincide."""
        for (name_a, t_a), (name_b, t_b) in itertools.combinations(self.closed_form_poles().items(), 2):
            if abs(t_a - t_b) < tolerance:
                raise PoleCollisionError(
                    f"{name_a} = {t_a:.12g} s and {name_b} = {t_b:.12g} s coincide; "
                    "closed forms need distinct poles, use the time-domain simulation instead"
                )


@dataclass(frozen=True)
class Stage:
    """One rational first-order block num(s) / den(s)."""

    name: str
    num: tuple
    den: tuple

    @property
    def time_constant(self):
        return float(self.den[0])

    @property
    def is_integrator(self):
        return self.den[-1] == 0

    @property
    def pole(self):
        return -self.den[-1] / self.den[0]

    def dc_gain(self):
        if self.is_integrator:
            return math.inf
        return self.num[-1] / self.den[-1]

    def gain_at(self, s):
        den = np.polyval(self.den, s)
        if abs(den) <= POLE_TOLERANCE * max(1.0, abs(s) * abs(self.den[0])):
            raise PoleEvaluationError(f"{self.name}: evaluated on its pole s = {self.pole:.6g}")
        return complex(np.polyval(self.num, s) / den)


@dataclass(frozen=True)
class BlockCascade:
    stages: tuple

    def __post_init__(self):
        if not self.stages:
            raise ParameterError("stages", "a cascade needs at least one stage")

    @classmethod
    def pss1a(cls, params):
        return cls(_pss_stages(params))

    @classmethod
    def avr(cls, params):
        return cls(_avr_stages(params))

    @classmethod
    def full(cls, params):
        """PSS1A followed by the AVR: V_in -> V_out."""
        return cls(_pss_stages(params) + _avr_stages(params))

    @classmethod
    def low_pass(cls, t6):
        return cls((Stage("v1", (1.0,), (t6, 1.0)),))

    @property
    def names(self):
        return tuple(stage.name for stage in self.stages)

    @property
    def min_time_constant(self):
        return min(stage.time_constant for stage in self.stages)

    def up_to(self, stage_name):
        """Leading part of the cascade that ends with ``stage_name``."""
        if stage_name not in self.names:
            raise UnknownStageError(stage_name, self.names)
        return BlockCascade(self.stages[: self.names.index(stage_name) + 1])

    def polynomials(self):
        """Numerator and denominator of the whole cascade."""
        num, den = np.array([1.0]), np.array([1.0])
        for stage in self.stages:
            num = np.polymul(num, stage.num)
            den = np.polymul(den, stage.den)
        return num, den


def _pss_stages(p):
    return (
        Stage("v1", (1.0,), (p.t6, 1.0)),
        Stage("v2", (p.k_s * p.t5, 0.0), (p.t5, 1.0)),
        Stage("v3", (p.t1, 1.0), (p.t2, 1.0)),
        Stage("v_pss", (p.t3, 1.0), (p.t4, 1.0)),
    )


def _avr_stages(p):
    return (
        Stage("v_r", (p.k_pr * p.t_n, p.k_pr), (p.t_n, 0.0)),
        Stage("v_out", (p.k_ps,), (p.t_s, 1.0)),
    )


@dataclass(frozen=True)
class BodeSample:
    omega: float
    magnitude_db: float
    phase_deg: float


# ============================================================================
# FREQUENCY DOMAIN
# ============================================================================

def transfer_at(cascade, s):
    """Product of the stage gains at the complex point s."""
    gain = 1.0 + 0.0j
    for stage in cascade.stages:
        gain *= stage.gain_at(complex(s))
    return gain


def frequency_response(cascade, omega_grid):
    """Complex H(i omega) on the grid, through scipy.signal.freqs."""
    num, den = cascade.polynomials()
    _, response = signal.freqs(num, den, worN=np.asarray(omega_grid, dtype=float))
    return response


def bode(cascade, omega_grid):
    """Magnitude (dB) and unwrapped phase (degrees) of H(i omega)."""
    omega_grid = np.atleast_1d(np.asarray(omega_grid, dtype=float))
    if omega_grid.size == 0:
        raise ParameterError("omega_grid", "Bode grid must not be empty")
    if not np.all(omega_grid > 0) or not np.all(np.isfinite(omega_grid)):
        raise ParameterError("omega_grid", "Bode frequencies must be finite and > 0")

    response = frequency_response(cascade, omega_grid)
    magnitude_db = 20.0 * np.log10(np.abs(response))
    phase_deg = np.degrees(np.unwrap(np.angle(response)))
    return [BodeSample(float(w), float(m), float(p)) for w, m, p in zip(omega_grid, magnitude_db, phase_deg)]


# ============================================================================
# CLOSED FORM
# ============================================================================

def propagate_stage(stage, series, initial_value, tolerance=MODE_TOLERANCE):
    """
    Closed-form output of one stage driven by an exponential sum.

    Every input term a exp(r t) leaves as a H(r) exp(r t); the stage's own
    pole adds one term (a constant for the integrating PI stage) sized so the
    output starts at ``initial_value``.
    """
    amplitudes = np.empty(len(series), dtype=complex)
    for j, (amplitude, rate) in enumerate(zip(series.amplitudes, series.rates)):
        if stage.is_integrator:
            collided = abs(rate) < tolerance
        else:
            collided = abs(1.0 + rate * stage.time_constant / stage.den[-1]) < tolerance
        if collided:
            raise PoleCollisionError(
                f"{stage.name}: mode {rate:.9g} coincides with the stage pole {stage.pole:.9g}"
            )
        amplitudes[j] = amplitude * stage.gain_at(rate)

    constant = 0.0
    if series.constant != 0.0:
        if stage.is_integrator:
            raise PoleCollisionError(f"{stage.name}: a constant input has no bounded closed form at the integrator")
        constant = series.constant * stage.dc_gain()

    forced = float(np.sum(amplitudes).real) + constant
    if stage.is_integrator:
        return ExponentialSum(amplitudes, series.rates, constant + initial_value - forced)
    return ExponentialSum(
        np.append(amplitudes, initial_value - forced),
        np.append(series.rates, stage.pole),
        constant,
    )


def propagate_cascade(cascade, input_series, pre_level=None):
    """
    Closed-form output of every stage, keyed by stage name.

    The cascade starts in steady state at ``pre_level`` (default: the input's
    value at t = 0); a continuous input then gives v1(0) = pre_level and 0 at
    every stage after the washout.
    """
    level = input_series.initial_value() if pre_level is None else float(pre_level)
    outputs = {}
    series = input_series
    for stage in cascade.stages:
        if stage.is_integrator and level != 0.0:
            raise ParameterError(
                "pre_level", f"{stage.name} integrates its input and has no steady state at level {level:.6g}"
            )
        # the stage output starts at its steady state for the input level
        level = 0.0 if level == 0.0 else level * stage.dc_gain()
        series = propagate_stage(stage, series, level)
        outputs[stage.name] = series
    return outputs


# ============================================================================
# TIME DOMAIN
# ============================================================================

def _discretize(stage, step):
    num_d, den_d, _ = signal.cont2discrete((stage.num, stage.den), step, method="foh")
    return np.atleast_1d(np.squeeze(num_d)), np.atleast_1d(np.squeeze(den_d))


def _run_stage(stage, values, step, level_in):
    """First-order-hold response of one stage started in steady state."""
    if not any(stage.num):
        return np.zeros_like(values)
    b, a = _discretize(stage, step)
    if level_in == 0.0:
        return signal.lfilter(b, a, values)
    if stage.is_integrator:
        raise ParameterError(
            "initial_output_level",
            f"{stage.name} integrates its input and has no steady state at level {level_in:.6g}",
        )
    y, _ = signal.lfilter(b, a, values, zi=signal.lfilter_zi(b, a) * level_in)
    return y


def simulate_cascade(cascade, input_trace, initial_output_level=None, upsample=True):
    """
    Drive the cascade with a sampled input and return every stage output.

    Internal states start in steady state for the pre-event input level
    (default: the first input sample), so v1 starts at that level and the
    stages after the washout start at 0. Each stage is discretized with a
    first-order hold on dt_internal = min(dt, T_min / 10); the input is
    linearly interpolated onto that grid and outputs are returned on the
    input grid.
    """
    level = float(input_trace.samples[0]) if initial_output_level is None else float(initial_output_level)
    if not math.isfinite(level):
        raise ParameterError("initial_output_level", "must be finite")

    dt = input_trace.dt
    t_min = cascade.min_time_constant
    if upsample:
        factor = max(1, math.ceil(dt / (t_min / INTERNAL_RESOLUTION) - 1e-9))
    else:
        if dt >= t_min / RESOLUTION_LIMIT:
            raise ResolutionError(
                f"dt = {dt:.6g} s is too coarse for the fastest time constant {t_min:.6g} s "
                f"(needs dt < {t_min / RESOLUTION_LIMIT:.6g} s or internal upsampling)"
            )
        factor = 1
    step = dt / factor

    samples = np.asarray(input_trace.samples, dtype=float)
    if factor > 1:
        coarse = np.arange(samples.size, dtype=float)
        fine = np.arange((samples.size - 1) * factor + 1, dtype=float) / factor
        values = np.interp(fine, coarse, samples)
    else:
        values = samples
    logger.debug("cascade %s: %d samples, upsampling x%d", "/".join(cascade.names), values.size, factor)

    outputs = {}
    for stage in cascade.stages:
        values = _run_stage(stage, values, step, level)
        level = 0.0 if level == 0.0 else level * stage.dc_gain()
        outputs[stage.name] = input_trace.with_samples(values[::factor])
    return outputs

