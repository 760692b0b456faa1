"""
Sine-envelope input for ROCOF-like events.

Oscillations that grow to a peak and then die away are modeled as

    V_in(t) = A sin(w_e t) sin(w0 t),   0 <= t <= pi / w_e,

and zero elsewhere. Its response is computed with the time-domain cascade
and checked in the frequency domain against H(i w) V~_in(i w).
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, PoleEvaluationError
from .grid_dynamics import SignalTrace
from .signal_analysis import make_omega_grid, spectrum_numeric, spectrum_values
from .stabilizer_blocks import ALL_STAGES, BlockCascade, simulate_cascade, transfer_at

logger = logging.getLogger(__name__)

SETTLE_FACTOR = 30.0   # horizon runs this many slow time constants past the support
DEFAULT_OMEGA_GRID = (0.05, 12.0, 240)


@dataclass(frozen=True)
class EnvelopeInput:
    amplitude: float
    omega_e: float
    omega0: float

    def __post_init__(self):
        if not math.isfinite(self.amplitude):
            raise ParameterError("amplitude", "must be finite")
        if not (math.isfinite(self.omega0) and 0 < self.omega_e < self.omega0):
            raise ParameterError("omega_e", f"need 0 < omega_e < omega0, got {self.omega_e!r} and {self.omega0!r}")

    @property
    def support_end(self):
        return math.pi / self.omega_e


def envelope_value(envelope, t):
    """A sin(w_e t) sin(w0 t) on [0, pi/w_e], exactly 0 outside."""
    t = np.asarray(t, dtype=float)
    inside = (t >= 0.0) & (t <= envelope.support_end)
    value = np.where(inside, envelope.amplitude * np.sin(envelope.omega_e * t) * np.sin(envelope.omega0 * t), 0.0)
    return float(value) if value.ndim == 0 else value


def _window(z, width):
    """Integral of exp(-z t) over [0, width]; entire in z."""
    w = -z * width
    if abs(w) < 1e-5:
        return width * (1.0 + w / 2.0 + w * w / 6.0 + w * w * w / 24.0)
    return complex(width * np.expm1(w) / w)


def _cosine_window(k, s, width):
    """Laplace transform of cos(k t) restricted to [0, width]."""
    return 0.5 * (_window(s - 1j * k, width) + _window(s + 1j * k, width))


def envelope_laplace(envelope, s, as_printed=False):
    """
    One-sided Laplace transform of the envelope input.

    With E = exp(-s pi / w_e) and theta = pi w0 / w_e the transform is

        A (2 s w_e w0 (1 + cos(theta) E) + w_e (s^2 + w_e^2 - w0^2) sin(theta) E)
          / ((s^2 + (w0 - w_e)^2) (s^2 + (w0 + w_e)^2)).

    The signal has finite support, so the roots of the denominator are
    removable; the value is taken from A/2 (cos((w0 - w_e) t) - cos((w0 + w_e) t))
    windowed to the support, which stays finite there.

    ``as_printed=True`` applies E to the whole first term,
    2 s w_e w0 (1 + cos(theta)) E; the two agree only at s = 0, and that
    variant raises PoleEvaluationError on the denominator roots.
    """
    s = complex(s)
    a, w_e, w0 = envelope.amplitude, envelope.omega_e, envelope.omega0
    if not as_printed:
        width = envelope.support_end
        return 0.5 * a * (_cosine_window(w0 - w_e, s, width) - _cosine_window(w0 + w_e, s, width))

    denominator = (s * s + (w0 - w_e) ** 2) * (s * s + (w0 + w_e) ** 2)
    if abs(denominator) <= 1e-12 * max(1.0, abs(s)) ** 4:
        raise PoleEvaluationError(f"envelope transform evaluated on a root of its denominator, s = {s:.6g}")
    theta = math.pi * w0 / w_e
    decay = cmath.exp(-s * math.pi / w_e)
    first = 2.0 * s * w_e * w0 * (1.0 + math.cos(theta)) * decay
    second = w_e * (s * s + w_e * w_e - w0 * w0) * math.sin(theta) * decay
    return a * (first + second) / denominator


def envelope_trace(envelope, horizon, dt):
    return SignalTrace.from_function(lambda t: envelope_value(envelope, t), horizon, dt)


@dataclass(frozen=True, eq=False)
class EnvelopeResult:
    omega_grid: np.ndarray
    traces: dict
    spectra: dict
    expected: dict


def default_horizon(envelope, pss):
    return envelope.support_end + SETTLE_FACTOR * max(pss.t2, pss.t5, pss.t6, pss.t4)


def envelope_response(envelope, pss, horizon=None, dt=1e-3, omega_grid=None, stages=ALL_STAGES):
    """
    Stage traces for the envelope input with their numeric one-sided Fourier
    transforms and the products H_stage(i w) V~_in(i w) they should equal.
    """
    horizon = default_horizon(envelope, pss) if horizon is None else horizon
    if omega_grid is None:
        omega_grid = make_omega_grid(*DEFAULT_OMEGA_GRID)
    omega_grid = np.asarray(omega_grid, dtype=float)

    cascade = BlockCascade.full(pss)
    input_trace = envelope_trace(envelope, horizon, dt)
    traces = {"v_in": input_trace}
    traces.update(simulate_cascade(cascade, input_trace, 0.0))
    traces = {stage: traces[stage] for stage in stages}
    logger.info("envelope response: %d samples, horizon %.4g s", len(input_trace), horizon)

    input_spectrum = np.array([envelope_laplace(envelope, 1j * w) for w in omega_grid])
    spectra, expected = {}, {}
    for stage, trace in traces.items():
        # the integrating PI stage settles on a constant once the input is gone
        asymptote = float(trace.samples[-1]) if stage in ("v_r", "v_out") else None
        spectra[stage] = spectrum_values(spectrum_numeric(trace, omega_grid, asymptote))
        if stage == "v_in":
            expected[stage] = input_spectrum
        else:
            prefix = cascade.up_to(stage)
            expected[stage] = np.array([transfer_at(prefix, 1j * w) for w in omega_grid]) * input_spectrum
    return EnvelopeResult(omega_grid, traces, spectra, expected)
