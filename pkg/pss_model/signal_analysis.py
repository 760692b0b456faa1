"""
One-sided Fourier transforms, exponential sums and CSV output.

Every closed-form stage signal in this package is an ``ExponentialSum``:

    V(t) = Re( sum_j a_j exp(r_j t) ) + c

with complex amplitudes a_j, complex rates r_j and a real constant c. Its
one-sided transform V~(s) = integral_0^inf V(t) exp(-st) dt is exact term by
term: a_j / (s - r_j) + c / s. Sampled traces are transformed by trapezoidal
quadrature of the same integral.
"""

from __future__ import annotations

import logging
import math
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid

from .errors import ParameterError, PoleEvaluationError
from .grid_dynamics import SignalTrace, uniform_grid

logger = logging.getLogger(__name__)

DECAY_RATIO = 1e-6          # trace tail / peak accepted before a numeric transform
POLE_TOLERANCE = 1e-12      # |s - r| below this (relative) counts as on the pole
CSV_FLOAT_FORMAT = "%.17g"
SPECTRUM_COMPONENTS = ("real", "imag", "abs")


@dataclass(frozen=True)
class SpectrumSample:
    omega: float
    value: complex


@dataclass(frozen=True, eq=False)
class ExponentialSum:
    """Real signal Re(sum a_j exp(r_j t)) + constant."""

    amplitudes: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    rates: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    constant: float = 0.0

    def __post_init__(self):
        amplitudes = np.atleast_1d(np.asarray(self.amplitudes, dtype=complex))
        rates = np.atleast_1d(np.asarray(self.rates, dtype=complex))
        if amplitudes.shape != rates.shape:
            raise ParameterError("amplitudes", "one amplitude per rate is required")
        if not (np.all(np.isfinite(amplitudes)) and np.all(np.isfinite(rates))):
            raise ParameterError("amplitudes", "terms must be finite")
        if not math.isfinite(self.constant):
            raise ParameterError("constant", "must be finite")
        amplitudes.setflags(write=False)
        rates.setflags(write=False)
        object.__setattr__(self, "amplitudes", amplitudes)
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "constant", float(self.constant))

    @classmethod
    def from_terms(cls, terms, constant=0.0):
        """Build from (amplitude, rate) pairs."""
        terms = list(terms)
        if not terms:
            return cls(constant=constant)
        amplitudes, rates = zip(*terms)
        return cls(np.array(amplitudes, dtype=complex), np.array(rates, dtype=complex), constant)

    def __len__(self):
        return self.rates.size

    def __add__(self, other):
        if not isinstance(other, ExponentialSum):
            return NotImplemented
        return ExponentialSum(
            np.concatenate([self.amplitudes, other.amplitudes]),
            np.concatenate([self.rates, other.rates]),
            self.constant + other.constant,
        )

    def scaled(self, factor):
        return ExponentialSum(self.amplitudes * factor, self.rates, self.constant * factor)

    def evaluate_complex(self, t):
        """Complex sum before the real part is taken (constant included)."""
        t = np.asarray(t, dtype=float)
        total = np.exp(np.multiply.outer(t, self.rates)) @ self.amplitudes if self.rates.size else np.zeros(t.shape, dtype=complex)
        return total + self.constant

    def evaluate(self, t):
        value = self.evaluate_complex(t).real
        return float(value) if np.ndim(value) == 0 else value

    def initial_value(self):
        return float(np.sum(self.amplitudes).real + self.constant)

    def sample(self, horizon, dt, t0=0.0):
        """SignalTrace of the sum on t0, t0 + dt, ..., t0 + horizon."""
        return SignalTrace(t0, dt, self.evaluate(t0 + uniform_grid(horizon, dt)))

    def laplace(self, s, include_constant=True):
        """
        One-sided Laplace transform of the real signal at the complex point s.

        Re(a exp(rt)) transforms to (a / (s - r) + conj(a) / (s - conj(r))) / 2,
        which reduces to a / (s - r) summed over conjugate-paired terms.
        """
        s = complex(s)
        value = 0.0j
        for amplitudes, rates in ((self.amplitudes, self.rates), (self.amplitudes.conj(), self.rates.conj())):
            gaps = s - rates
            hit = np.abs(gaps) <= POLE_TOLERANCE * np.maximum(1.0, np.abs(rates))
            if np.any(hit & (amplitudes != 0)):
                raise PoleEvaluationError(f"transform evaluated on the pole {rates[hit][0]:.6g}")
            value += 0.5 * complex(np.sum(amplitudes[~hit] / gaps[~hit]))
        if include_constant and self.constant != 0.0:
            if abs(s) <= POLE_TOLERANCE:
                raise PoleEvaluationError("constant term has a pole at s = 0")
            value += self.constant / s
        return value

    def spectrum(self, omega_grid, include_constant=True):
        """Transform on s = i*omega for every omega of the grid."""
        omega_grid = np.atleast_1d(np.asarray(omega_grid, dtype=float))
        return np.array([self.laplace(1j * w, include_constant) for w in omega_grid], dtype=complex)


# ============================================================================
# SPECTRA
# ============================================================================

def spectrum_closed_form(coeffs, stage, omega_grid, include_constant=True):
    """
    Exact one-sided Fourier transform of a closed-form stage signal.

    ``coeffs`` is any object with ``stage_sum(stage) -> ExponentialSum``
    (the linear and modal coefficient sets). Constant terms contribute
    c / (i omega); ``include_constant=False`` drops them.
    """
    series = coeffs.stage_sum(stage)
    omega_grid = _check_grid(omega_grid)
    values = series.spectrum(omega_grid, include_constant)
    return [SpectrumSample(float(w), complex(v)) for w, v in zip(omega_grid, values)]


def spectrum_numeric(trace, omega_grid, asymptote=None):
    """
    Trapezoidal one-sided Fourier transform of a sampled trace.

    With ``asymptote`` c the trace is integrated as a deviation from c and the
    constant adds its exact transform c exp(-i omega t0) / (i omega). A tail
    above DECAY_RATIO of the peak is logged as a truncation warning.
    """
    omega_grid = _check_grid(omega_grid)
    samples = np.asarray(trace.samples, dtype=float)
    if asymptote is not None:
        samples = samples - asymptote

    peak = float(np.max(np.abs(samples)))
    if peak > 0.0:
        tail = float(np.max(np.abs(samples[-max(2, samples.size // 100):])))
        if tail > DECAY_RATIO * peak:
            logger.warning(
                "trace has not decayed before t=%.4g s (tail/peak = %.3g); spectrum is truncated",
                trace.t_end, tail / peak,
            )

    times = trace.times
    values = np.empty(omega_grid.size, dtype=complex)
    for k, w in enumerate(omega_grid):
        values[k] = trapezoid(samples * np.exp(-1j * w * times), dx=trace.dt) if peak > 0.0 else 0.0
        if asymptote:
            if w == 0.0:
                raise PoleEvaluationError("constant asymptote has a pole at omega = 0")
            values[k] += asymptote * np.exp(-1j * w * trace.t0) / (1j * w)
    return [SpectrumSample(float(w), complex(v)) for w, v in zip(omega_grid, values)]


def spectrum_values(samples):
    return np.array([sample.value for sample in samples], dtype=complex)


def spectrum_component(values, component):
    if component == "real":
        return np.real(values)
    if component == "imag":
        return np.imag(values)
    if component == "abs":
        return np.abs(values)
    raise ParameterError("spectrum_component", f"expected one of {', '.join(SPECTRUM_COMPONENTS)}, got {component!r}")


def make_omega_grid(start, stop, points, spacing="linear"):
    """Angular-frequency grid (rad/s), linear or log-spaced."""
    if isinstance(points, bool) or int(points) != points or points < 1:
        raise ParameterError("omega_grid.points", f"must be an integer >= 1, got {points!r}")
    if spacing == "linear":
        if not stop >= start:
            raise ParameterError("omega_grid.stop", "must not be below start")
        return np.linspace(start, stop, int(points))
    if spacing == "log":
        if not (0 < start <= stop):
            raise ParameterError("omega_grid.start", "log spacing needs 0 < start <= stop")
        return np.logspace(math.log10(start), math.log10(stop), int(points))
    raise ParameterError("omega_grid.spacing", f"expected 'linear' or 'log', got {spacing!r}")


def _check_grid(omega_grid):
    omega_grid = np.atleast_1d(np.asarray(omega_grid, dtype=float))
    if omega_grid.size == 0:
        raise ParameterError("omega_grid", "frequency grid must not be empty")
    if not np.all(np.isfinite(omega_grid)):
        raise ParameterError("omega_grid", "frequencies must be finite")
    return omega_grid


# ============================================================================
# TRACE COMPARISON
# ============================================================================

def relative_linf_error(reference, candidate):
    """max |candidate - reference| / max |reference| (absolute if the reference is zero)."""
    reference = np.asarray(reference)
    candidate = np.asarray(candidate)
    if reference.shape != candidate.shape:
        raise ParameterError("candidate", f"shape {candidate.shape} does not match {reference.shape}")
    error = float(np.max(np.abs(candidate - reference)))
    peak = float(np.max(np.abs(reference)))
    return error / peak if peak > 0.0 else error


def relative_l2_error(reference, candidate):
    reference = np.asarray(reference)
    candidate = np.asarray(candidate)
    norm = float(np.linalg.norm(reference))
    error = float(np.linalg.norm(candidate - reference))
    return error / norm if norm > 0.0 else error


# ============================================================================
# CSV OUTPUT
# ============================================================================

def write_csv(frame, path):
    """Write a DataFrame with 17-digit floats and LF endings, atomically."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(prefix=".tmp-", suffix=".csv", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            frame.to_csv(handle, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise
    logger.info("wrote %s (%d rows)", path, len(frame))
    return path


def traces_frame(traces, time_column="t"):
    """DataFrame with a time column and one column per trace (shared grid)."""
    if not traces:
        raise ParameterError("traces", "nothing to tabulate")
    first = next(iter(traces.values()))
    columns = {time_column: first.times}
    for name, trace in traces.items():
        if len(trace) != len(first) or trace.dt != first.dt or trace.t0 != first.t0:
            raise ParameterError(name, "traces must share one time grid")
        columns[name] = trace.samples
    return pd.DataFrame(columns)


def spectra_frame(omega_grid, spectra, component):
    """DataFrame with omega and one ``{name}_{component}_spectrum`` column per entry."""
    columns = {"omega": np.asarray(omega_grid, dtype=float)}
    for name, values in spectra.items():
        columns[f"{name}_{component}_spectrum"] = spectrum_component(np.asarray(values), component)
    return pd.DataFrame(columns)
