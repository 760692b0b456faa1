"""
Closed-form versus time-domain validation report.

Each check compares two independent computations and records
(check, error, tolerance, passed). Small-signal scenarios are checked on the
linear closed form, large steps on the modal pipeline and envelope scenarios
on the Laplace transform and the frequency-domain product H(i w) V~_in(i w).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.integrate import quad

from .envelope_input import envelope_laplace, envelope_response, envelope_value
from .errors import RegimeError
from .linear_response import is_small_step, linear_mode, linear_response
from .modal_response import nonlinear_response
from .signal_analysis import relative_linf_error
from .stabilizer_blocks import STAGE_NAMES, BlockCascade, transfer_at

logger = logging.getLogger(__name__)

LINEAR_TOLERANCE = 1e-5
MODAL_TOLERANCE = 1e-4
CLOSURE_TOLERANCE = 1e-12
SPECTRUM_TOLERANCE = 1e-8
LAPLACE_TOLERANCE = 1e-8
ENVELOPE_SPECTRUM_TOLERANCE = 1e-3
REALITY_TOLERANCE = 1e-9
LINEAR_HORIZON = 30.0
ENVELOPE_OMEGAS = (1.0, 5.2, 9.0)
LAPLACE_POINTS = np.linspace(0.1, 10.0, 20)


@dataclass(frozen=True)
class ValidationCheck:
    check: str
    error: float
    tolerance: float

    @property
    def passed(self):
        return bool(np.isfinite(self.error) and self.error <= self.tolerance)


def report_frame(checks):
    return pd.DataFrame(
        {
            "check": [c.check for c in checks],
            "error": [c.error for c in checks],
            "tolerance": [c.tolerance for c in checks],
            "passed": [c.passed for c in checks],
        }
    )


def _relative(value, scale):
    return abs(value) / max(1.0, abs(scale))


# ============================================================================
# LINEAR
# ============================================================================

def closure_checks(coeffs):
    """Each stage after the low-pass starts at 0; v1 starts at V_in(0)."""
    c = coeffs
    identities = {
        "closure_c1": (c.c1 - (c.b0 - c.b1), max(abs(c.b0), abs(c.b1))),
        "closure_d2": (c.d2 + c.b2 + c.c2, max(abs(c.b2), abs(c.c2))),
        "closure_e3": (c.e3 + c.b3 + c.c3 + c.d3, max(abs(c.b3), abs(c.c3), abs(c.d3))),
        "closure_f4": (c.f4 + c.b4 + c.c4 + c.d4 + c.e4, max(abs(c.b4), abs(c.c4), abs(c.d4), abs(c.e4))),
        "closure_s_r": (c.s_r + c.b_r + c.c_r + c.d_r + c.e_r + c.f_r,
                        max(abs(c.b_r), abs(c.c_r), abs(c.d_r), abs(c.e_r), abs(c.f_r))),
        "closure_g_out": (c.g_out + c.b_out + c.c_out + c.d_out + c.e_out + c.f_out + c.k_ps * c.s_r,
                          max(abs(c.b_out), abs(c.c_out), abs(c.d_out), abs(c.e_out), abs(c.f_out),
                              abs(c.k_ps * c.s_r))),
    }
    return [ValidationCheck(name, _relative(residual, scale), CLOSURE_TOLERANCE)
            for name, (residual, scale) in identities.items()]


def spectrum_identity_checks(coeffs, pss, omega_grid, pre_level, tolerance=SPECTRUM_TOLERANCE):
    """Closed-form stage spectra against H_stage(i w) (V~_in - V_pre / (i w))."""
    cascade = BlockCascade.full(pss)
    s = 1j * np.asarray(omega_grid, dtype=float)
    deviation = coeffs.stage_sum("v_in").spectrum(omega_grid) - pre_level / s
    checks = []
    for stage in STAGE_NAMES:
        prefix = cascade.up_to(stage)
        expected = np.array([transfer_at(prefix, point) for point in s]) * deviation
        if stage == "v1":
            expected = expected + pre_level / s
        actual = coeffs.stage_sum(stage).spectrum(omega_grid)
        checks.append(ValidationCheck(f"spectrum_identity_{stage}", relative_linf_error(expected, actual), tolerance))
    return checks


def linear_checks(event, reduced, input_kind, pss, machine, dt, omega_grid, tolerance=LINEAR_TOLERANCE,
                  horizon=LINEAR_HORIZON):
    result = linear_response(event, reduced, input_kind, pss, machine, horizon, dt)
    checks = [
        ValidationCheck(f"oracle_{stage}", relative_linf_error(result.oracle[stage].samples,
                                                               result.closed_form[stage].samples), tolerance)
        for stage in STAGE_NAMES
    ]
    checks += closure_checks(result.coefficients)
    for stage in ("v_pss", "v_out"):
        value = result.coefficients.stage_sum(stage).initial_value()
        checks.append(ValidationCheck(f"initial_{stage}", abs(value), CLOSURE_TOLERANCE))
    checks += spectrum_identity_checks(result.coefficients, pss, omega_grid, result.oscillation.pre_level)
    return checks


# ============================================================================
# MODAL
# ============================================================================

def modal_checks(event, reduced, input_kind, pss, machine, horizon, dt, tolerance=MODAL_TOLERANCE):
    result = nonlinear_response(event, reduced, input_kind, pss, horizon, dt, machine.poles, machine.p_max)
    limit = max(tolerance, 3.0 * result.fit_error)
    checks = [ValidationCheck("modal_fit", result.fit_error, math.inf)]
    checks += [
        ValidationCheck(f"oracle_{stage}", relative_linf_error(result.oracle[stage].samples,
                                                               result.closed_form[stage].samples), limit)
        for stage in STAGE_NAMES
    ]
    times = result.input_trace.times
    checks += [
        ValidationCheck(f"reality_{stage}", result.coefficients.imaginary_residue(stage, times), REALITY_TOLERANCE)
        for stage in STAGE_NAMES
    ]
    peak = max(1.0, abs(result.coefficients.stage_sum("v_in").initial_value()))
    for stage in STAGE_NAMES[1:]:
        value = result.coefficients.stage_sum(stage).initial_value()
        checks.append(ValidationCheck(f"initial_{stage}", abs(value) / peak, CLOSURE_TOLERANCE))
    if reduced.beta > 0 and len(result.modes):
        growth = float(np.max(result.modes.eigenvalues.real))
        checks.append(ValidationCheck("stable_modes", max(0.0, growth), 0.0))
    return checks


# ============================================================================
# ENVELOPE
# ============================================================================

def laplace_quadrature(envelope, s):
    """Adaptive quadrature of the one-sided Laplace integral at real s."""
    value, _ = quad(lambda t: envelope_value(envelope, t) * math.exp(-s * t), 0.0, envelope.support_end,
                    limit=400, epsabs=1e-14, epsrel=1e-13)
    return value


def envelope_checks(envelope, pss, horizon, dt, tolerance=ENVELOPE_SPECTRUM_TOLERANCE):
    checks = []
    reference = np.array([laplace_quadrature(envelope, s) for s in LAPLACE_POINTS])
    closed = np.array([envelope_laplace(envelope, s).real for s in LAPLACE_POINTS])
    checks.append(ValidationCheck("laplace_quadrature", relative_linf_error(reference, closed), LAPLACE_TOLERANCE))

    result = envelope_response(envelope, pss, horizon, dt, omega_grid=np.array(ENVELOPE_OMEGAS))
    for stage in result.traces:
        expected = result.expected[stage]
        error = float(np.max(np.abs(result.spectra[stage] - expected) / np.maximum(np.abs(expected), 1e-300)))
        checks.append(ValidationCheck(f"spectrum_identity_{stage}", error, tolerance))
    return checks


# ============================================================================
# SCENARIOS
# ============================================================================

def validate_scenario(scenario, tolerance=None):
    """Run every check that applies to the scenario's input and event size."""
    run = scenario.run
    if scenario.input_kind == "envelope":
        checks = envelope_checks(scenario.envelope, scenario.stabilizer, run.horizon, run.dt,
                                 tolerance or ENVELOPE_SPECTRUM_TOLERANCE)
    else:
        scenario.require("machine", "event")
        reduced = scenario.reduced()
        event = scenario.event
        small = is_small_step(event)
        try:
            linear_mode(reduced, event.delta_final)
            underdamped = True
        except RegimeError:
            underdamped = False
        if small and underdamped:
            logger.info("validating %r on the linear closed form", scenario.name)
            checks = linear_checks(event, reduced, scenario.input_kind, scenario.stabilizer, scenario.machine,
                                   run.dt, run.omegas(), tolerance or LINEAR_TOLERANCE,
                                   run.horizon or LINEAR_HORIZON)
        else:
            logger.info("validating %r on the modal pipeline", scenario.name)
            checks = modal_checks(event, reduced, scenario.input_kind, scenario.stabilizer, scenario.machine,
                                  run.horizon, run.dt, tolerance or MODAL_TOLERANCE)

    failed = [c.check for c in checks if not c.passed]
    if failed:
        logger.warning("%d of %d checks failed: %s", len(failed), len(checks), ", ".join(failed))
    else:
        logger.info("all %d checks passed", len(checks))
    return checks
