"""
Nonlinear transient response through a modal decomposition.

A large coupling step makes the rotor signals multi-harmonic, but each input
V_in(t) is still well described by a sum of complex exponentials

    V_in(t) = sum_j a_0j exp(lam_j t) + dc,

with conjugate-paired modes. The modes are extracted from the integrated
trajectory with the matrix-pencil method and pushed through the PSS1A/AVR
cascade in closed form: stage k scales mode j by its gain at lam_j and adds
one real exponential per stage pole, sized so the stage starts at rest.

Pipeline: integrate -> V_in trace -> extract_modes -> cascade_modal ->
closed-form traces, with the time-domain cascade on the reconstructed input
as the reference.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from scipy import linalg

from .errors import ModalFitError, ParameterError, UnknownStageError
from .grid_dynamics import (
    DEFAULT_OMEGA_BASE,
    Model,
    SignalTrace,
    bus_frequency_deviation,
    equilibrium_state,
    integrate_rotor,
    integrate_two_body,
    scenario_machine,
    speed_weight,
)
from .linear_response import INPUT_KINDS, STAGE_SUFFIX, STAGE_TERMS
from .signal_analysis import ExponentialSum, relative_l2_error
from .stabilizer_blocks import ALL_STAGES, BlockCascade, propagate_cascade, simulate_cascade

logger = logging.getLogger(__name__)

MAX_ORDER = 40
SV_THRESHOLD = 1e-8
FIT_TOLERANCE = 1e-4
MAX_SAMPLES = 2000           # pencil is built on at most this many (decimated) samples
DC_TOLERANCE = 1e-5          # |lam| below this (1/s) is treated as the constant mode
NYQUIST_MARGIN = 0.95
CONJUGATE_TOLERANCE = 1e-9
DEFAULT_DT = 1e-3
HORIZON_DECAYS = 40.0        # default horizon is HORIZON_DECAYS / beta


@dataclass(frozen=True, eq=False)
class ModalSum:
    """sum_j a_0j exp(lam_j t) + dc_offset, t measured from the trace start."""

    amplitudes: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    eigenvalues: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    dc_offset: float = 0.0
    fit_error: float = 0.0

    def __post_init__(self):
        amplitudes = np.atleast_1d(np.asarray(self.amplitudes, dtype=complex))
        eigenvalues = np.atleast_1d(np.asarray(self.eigenvalues, dtype=complex))
        if amplitudes.shape != eigenvalues.shape:
            raise ParameterError("amplitudes", "one amplitude per eigenvalue is required")
        if not (np.all(np.isfinite(amplitudes)) and np.all(np.isfinite(eigenvalues))):
            raise ParameterError("eigenvalues", "modes must be finite")

        # the lam = 0 mode is carried as the dc offset
        zero = eigenvalues == 0
        dc = float(self.dc_offset) + float(np.sum(amplitudes[zero]).real)
        amplitudes, eigenvalues = amplitudes[~zero], eigenvalues[~zero]

        for a, lam in zip(amplitudes, eigenvalues):
            scale = CONJUGATE_TOLERANCE * max(1.0, abs(lam))
            if abs(lam.imag) <= scale:
                if abs(a.imag) > CONJUGATE_TOLERANCE * max(1.0, abs(a)):
                    raise ParameterError("amplitudes", f"real mode {lam.real:.6g} needs a real amplitude")
                continue
            partner = np.abs(eigenvalues - lam.conjugate()) <= scale
            if not np.any(partner & (np.abs(amplitudes - a.conjugate()) <= CONJUGATE_TOLERANCE * max(1.0, abs(a)))):
                raise ParameterError("eigenvalues", f"mode {lam:.6g} has no conjugate partner")

        if not math.isfinite(dc):
            raise ParameterError("dc_offset", "must be finite")
        amplitudes.setflags(write=False)
        eigenvalues.setflags(write=False)
        object.__setattr__(self, "amplitudes", amplitudes)
        object.__setattr__(self, "eigenvalues", eigenvalues)
        object.__setattr__(self, "dc_offset", dc)

    @classmethod
    def from_pairs(cls, pairs, reals=(), dc_offset=0.0, fit_error=0.0):
        """Modes from (amplitude, eigenvalue) pair representatives (Im > 0) plus real modes."""
        amplitudes, eigenvalues = [], []
        for a, lam in pairs:
            amplitudes += [complex(a), complex(a).conjugate()]
            eigenvalues += [complex(lam), complex(lam).conjugate()]
        for a, lam in reals:
            amplitudes.append(complex(float(np.real(a))))
            eigenvalues.append(complex(float(np.real(lam))))
        return cls(np.array(amplitudes, dtype=complex), np.array(eigenvalues, dtype=complex), dc_offset, fit_error)

    def __len__(self):
        return self.eigenvalues.size

    @property
    def terms(self):
        return list(zip(self.amplitudes, self.eigenvalues))

    def as_sum(self):
        return ExponentialSum(self.amplitudes, self.eigenvalues, self.dc_offset)

    def evaluate(self, t):
        return self.as_sum().evaluate(t)

    def reconstruct(self, horizon, dt, t0=0.0):
        """Sampled signal on t0, t0 + dt, ...; modes are referenced to t0."""
        return SignalTrace(t0, dt, self.as_sum().sample(horizon, dt).samples)

    def dominant_pair(self):
        """Eigenvalue (Im > 0) of the oscillating mode with the largest amplitude."""
        upper = self.eigenvalues.imag > 0
        if not np.any(upper):
            return None
        index = np.argmax(np.where(upper, np.abs(self.amplitudes), -1.0))
        return complex(self.eigenvalues[index])


# ============================================================================
# MODE EXTRACTION
# ============================================================================

def _mode_basis(times, dc, reals, pairs):
    columns = []
    if dc:
        columns.append(np.ones_like(times))
    for sigma in reals:
        columns.append(np.exp(sigma * times))
    for lam in pairs:
        envelope = np.exp(lam.real * times)
        columns.append(envelope * np.cos(lam.imag * times))
        columns.append(envelope * np.sin(lam.imag * times))
    return np.column_stack(columns)


def _classify(lam, step, horizon, stable):
    """Split pencil eigenvalues into (dc, real rates, pair representatives)."""
    lam = lam[np.isfinite(lam)]
    lam = lam[np.abs(lam.imag) < NYQUIST_MARGIN * math.pi / step]
    lam = lam[lam.real * horizon < 50.0]
    dc = bool(np.any(np.abs(lam) < DC_TOLERANCE))
    lam = lam[np.abs(lam) >= DC_TOLERANCE]
    if stable:
        lam = lam[lam.real < 0]
    reals = sorted(float(v.real) for v in lam if abs(v.imag) <= 1e-12 * abs(v))
    pairs = sorted((complex(v) for v in lam if v.imag > 1e-12 * abs(v)), key=lambda v: v.imag)
    return dc, reals, pairs


def _fit(times, values, dc, reals, pairs):
    basis = _mode_basis(times, dc, reals, pairs)
    coefficients, *_ = linalg.lstsq(basis, values)
    return coefficients, relative_l2_error(values, basis @ coefficients)


def _to_modal_sum(coefficients, dc, reals, pairs, fit_error=0.0):
    k = 0
    dc_offset = 0.0
    if dc:
        dc_offset = float(coefficients[0])
        k = 1
    real_modes = [(coefficients[k + i], sigma) for i, sigma in enumerate(reals)]
    k += len(reals)
    pair_modes = [(complex(coefficients[k + 2 * i], -coefficients[k + 2 * i + 1]) / 2.0, lam)
                  for i, lam in enumerate(pairs)]
    return ModalSum.from_pairs(pair_modes, real_modes, dc_offset, fit_error)


def extract_modes(trace, max_order=MAX_ORDER, sv_threshold=SV_THRESHOLD, fit_tolerance=FIT_TOLERANCE,
                  max_samples=MAX_SAMPLES, strict=True, stable=False):
    """
    Matrix-pencil decomposition of a trace into conjugate-paired exponentials.

    The model order grows from 1 up to the number of significant singular
    values of the Hankel matrix (relative threshold ``sv_threshold``, at most
    ``max_order``) until the relative L2 fit error drops to
    ``fit_tolerance``. Amplitudes come from a least-squares fit on a real
    basis, so conjugate pairing holds by construction. ``stable=True`` drops
    growing modes.
    """
    samples = np.asarray(trace.samples, dtype=float)
    if isinstance(max_order, bool) or int(max_order) != max_order or max_order < 1:
        raise ParameterError("max_order", f"must be an integer >= 1, got {max_order!r}")
    if max_order > samples.size / 4:
        raise ParameterError("max_order", f"{max_order} exceeds a quarter of the {samples.size} samples")
    if not np.any(samples):
        return ModalSum()

    stride = max(1, math.ceil(samples.size / max_samples))
    decimated = samples[::stride]
    step = trace.dt * stride
    times = step * np.arange(decimated.size)
    horizon = times[-1]

    pencil = decimated.size // 3
    hankel = linalg.hankel(decimated[: decimated.size - pencil], decimated[decimated.size - pencil - 1:])
    _, singular, vh = linalg.svd(hankel, full_matrices=False)
    significant = int(np.count_nonzero(singular / singular[0] > sv_threshold))
    cap = min(int(max_order), significant, pencil)
    if cap == 0:
        raise ModalFitError("ill-conditioned pencil: no singular value above the threshold")
    logger.debug("pencil %dx%d (stride %d): %d significant singular values",
                 hankel.shape[0], hankel.shape[1], stride, significant)

    best = None
    for order in range(1, cap + 1):
        right = vh[:order].T
        shift = linalg.pinv(right[:-1]) @ right[1:]
        with np.errstate(divide="ignore", invalid="ignore"):
            lam = np.log(linalg.eigvals(shift).astype(complex)) / step
        dc, reals, pairs = _classify(lam, step, horizon, stable)
        if not (dc or reals or pairs):
            continue
        coefficients, error = _fit(times, decimated, dc, reals, pairs)
        if best is None or error < best[0]:
            best = (error, order, coefficients, dc, reals, pairs)
        if error <= fit_tolerance:
            break

    if best is None:
        raise ModalFitError("no admissible mode found in the pencil")
    _, order, coefficients, dc, reals, pairs = best
    modes = _to_modal_sum(coefficients, dc, reals, pairs)
    fit_error = relative_l2_error(samples, modes.evaluate(trace.dt * np.arange(samples.size)))
    modes = ModalSum(modes.amplitudes, modes.eigenvalues, modes.dc_offset, fit_error)
    logger.debug("order %d: %d modes, dc=%s, fit error %.3g", order, len(modes), dc, fit_error)

    if pairs:
        slowest = min(abs(lam.imag) for lam in pairs)
        if 3 * 2 * math.pi / slowest > trace.t_end - trace.t0:
            logger.warning("trace covers fewer than 3 periods of its slowest oscillation (%.4g rad/s)", slowest)
    if fit_error > fit_tolerance:
        message = f"modal fit error {fit_error:.3g} exceeds tolerance {fit_tolerance:.3g} after order {cap}"
        if strict:
            raise ModalFitError(message)
        logger.warning("%s; keeping the best fit", message)
    return modes


# ============================================================================
# MODAL CASCADE
# ============================================================================

@dataclass(frozen=True, eq=False)
class ModalCascadeCoefficients:
    """
    Modal amplitudes a_kj of every stage and the real constants that close
    each stage on its initial value (c1 ... g_out, s_r).
    """

    eigenvalues: np.ndarray
    dc_offset: float
    mode_amplitudes: dict
    constants: dict
    time_constants: dict
    k_ps: float = 1.0

    def constant(self, name):
        return self.constants[name]

    def stage_constant(self, stage):
        if stage in ("v_in", "v1"):
            return self.dc_offset
        if stage == "v_r":
            return self.constants["s_r"]
        if stage == "v_out":
            return self.k_ps * self.constants["s_r"]
        return 0.0

    def stage_sum(self, stage):
        if stage not in STAGE_TERMS:
            raise UnknownStageError(stage, ALL_STAGES)
        amplitudes = list(self.mode_amplitudes[stage])
        rates = list(self.eigenvalues)
        suffix = STAGE_SUFFIX[stage]
        for letter, tau in STAGE_TERMS[stage]:
            amplitudes.append(self.constants[f"{letter}{suffix}"])
            rates.append(-1.0 / self.time_constants[tau])
        return ExponentialSum(amplitudes, rates, self.stage_constant(stage))

    def imaginary_residue(self, stage, times):
        """max |Im| / max |Re| of the stage's complex sum over ``times``."""
        values = self.stage_sum(stage).evaluate_complex(times)
        peak = float(np.max(np.abs(values.real)))
        residue = float(np.max(np.abs(values.imag)))
        return residue / peak if peak > 0.0 else residue


def cascade_modal(modes, pss):
    """Closed-form modal coefficients of every stage."""
    pss.check_pole_separation()
    series = modes.as_sum()
    stages = propagate_cascade(BlockCascade.full(pss), series, series.initial_value())

    count = len(modes)
    mode_amplitudes = {"v_in": modes.amplitudes}
    constants = {}
    for stage, stage_series in stages.items():
        mode_amplitudes[stage] = stage_series.amplitudes[:count]
        suffix = STAGE_SUFFIX[stage]
        for (letter, _), amplitude in zip(STAGE_TERMS[stage], stage_series.amplitudes[count:]):
            constants[f"{letter}{suffix}"] = float(amplitude.real)
    constants["s_r"] = stages["v_r"].constant

    return ModalCascadeCoefficients(
        eigenvalues=modes.eigenvalues,
        dc_offset=modes.dc_offset,
        mode_amplitudes=mode_amplitudes,
        constants=constants,
        time_constants={"T6": pss.t6, "T5": pss.t5, "T2": pss.t2, "T4": pss.t4, "T_S": pss.t_s},
        k_ps=pss.k_ps,
    )


def eval_modal(coeffs, stage, t):
    """Real value of the named stage at t >= 0 (scalar or array)."""
    if np.any(np.asarray(t) < 0):
        raise ParameterError("t", "closed forms hold for t >= 0")
    return coeffs.stage_sum(stage).evaluate(t)


# ============================================================================
# PIPELINES
# ============================================================================

@dataclass(frozen=True, eq=False)
class NonlinearResult:
    input_trace: object
    delta: object
    modes: ModalSum
    coefficients: ModalCascadeCoefficients
    closed_form: dict
    oracle: dict

    @property
    def fit_error(self):
        return self.modes.fit_error


def _default_horizon(beta, horizon):
    if horizon is not None:
        return horizon
    if beta <= 0:
        raise ParameterError("horizon", "beta = 0 never decays; give an explicit horizon")
    return HORIZON_DECAYS / beta


def _modal_pipeline(input_trace, delta, pss, stable, stages, max_order, fit_tolerance):
    modes = extract_modes(
        input_trace,
        max_order=min(max_order, len(input_trace) // 4),
        fit_tolerance=fit_tolerance,
        strict=False,
        stable=stable,
    )
    coefficients = cascade_modal(modes, pss)
    logger.info("modal fit: %d modes, dc=%.6g, fit error %.3g", len(modes), modes.dc_offset, modes.fit_error)

    times = input_trace.times - input_trace.t0
    reconstructed = input_trace.with_samples(modes.evaluate(times))
    oracle = {"v_in": reconstructed}
    oracle.update(simulate_cascade(BlockCascade.full(pss), reconstructed, reconstructed.samples[0]))
    closed_form = {stage: input_trace.with_samples(eval_modal(coefficients, stage, times)) for stage in stages}
    return NonlinearResult(
        input_trace=input_trace,
        delta=delta,
        modes=modes,
        coefficients=coefficients,
        closed_form=closed_form,
        oracle={stage: oracle[stage] for stage in stages},
    )


def nonlinear_response(event, reduced, input_kind, pss, horizon=None, dt=DEFAULT_DT, poles=2, p_max=1.0,
                       stages=ALL_STAGES, max_order=MAX_ORDER, fit_tolerance=FIT_TOLERANCE):
    """
    Modal response of the reduced rotor model to a coupling step.

    The speed input is the generator speed deviation -x/(x+1) delta', the
    frequency input scales it by p/2 and the power input is
    p_max sin(delta).
    """
    if input_kind not in INPUT_KINDS:
        raise ParameterError("input_kind", f"expected one of {', '.join(INPUT_KINDS)}, got {input_kind!r}")
    horizon = _default_horizon(reduced.beta, horizon)
    delta, delta_dot = integrate_rotor(event, reduced, horizon, dt)

    if input_kind == "speed":
        input_trace = delta_dot.with_samples(-speed_weight(reduced.x) * delta_dot.samples)
    elif input_kind == "frequency":
        input_trace = bus_frequency_deviation(delta_dot, poles, reduced.x)
    else:
        input_trace = delta.with_samples(p_max * np.sin(delta.samples))
    return _modal_pipeline(input_trace, delta, pss, reduced.beta > 0, stages, max_order, fit_tolerance)


def two_body_response(event, beta, x, model, input_kind, pss, horizon=None, dt=DEFAULT_DT, damping="combined",
                      omega_base=DEFAULT_OMEGA_BASE, poles=2, p_max=1.0, stages=ALL_STAGES,
                      max_order=MAX_ORDER, fit_tolerance=FIT_TOLERANCE):
    """
    Modal response of the two-body (cage or Kuramoto-like) machine.

    The speed input is read directly as theta_gen' - Omega; for the cage
    model that equals -x/(x+1) delta'.
    """
    if input_kind not in INPUT_KINDS:
        raise ParameterError("input_kind", f"expected one of {', '.join(INPUT_KINDS)}, got {input_kind!r}")
    horizon = _default_horizon(beta, horizon)
    machine = scenario_machine(event, beta, x, damping=damping, omega_base=omega_base, poles=poles, p_max=p_max)
    trajectory = integrate_two_body(machine, Model(model), equilibrium_state(event, omega_base), horizon, dt)
    delta = trajectory.relative_angle()

    speed = trajectory.generator_speed_deviation()
    if input_kind == "speed":
        input_trace = speed
    elif input_kind == "frequency":
        input_trace = speed.with_samples(0.5 * poles * speed.samples)
    else:
        input_trace = delta.with_samples(p_max * np.sin(delta.samples))
    return _modal_pipeline(input_trace, delta, pss, beta > 0, stages, max_order, fit_tolerance)


def inertia_sweep(event, beta, x_values, models, input_kind, pss, horizon=None, dt=DEFAULT_DT,
                  damping="combined", n_jobs=1, **kwargs):
    """
    Two-body responses for every (model, x) pair, in submission order.

    Independent scenarios fan out over ``joblib.Parallel``.
    """
    jobs = [(Model(model).value, x) for model in models for x in x_values]
    logger.info("inertia sweep: %d scenarios on %s worker(s)", len(jobs), n_jobs)
    results = Parallel(n_jobs=n_jobs)(
        delayed(two_body_response)(event, beta, x, model, input_kind, pss, horizon, dt, damping, **kwargs)
        for model, x in jobs
    )
    return list(zip(jobs, results))
