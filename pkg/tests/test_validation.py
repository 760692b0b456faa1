"""Validation report: identities, oracle comparisons and path selection."""

import math

import numpy as np
import pytest

from pss_model.envelope_input import EnvelopeInput
from pss_model.linear_response import DampedOscillation, cascade_linear, input_electrical_power
from pss_model.modal_response import ModalSum, cascade_modal
from pss_model.scenario import bundled_scenario_path, load_scenario
from pss_model.stabilizer_blocks import STAGE_NAMES, StabilizerParams
from pss_model.validation import (
    ValidationCheck,
    closure_checks,
    envelope_checks,
    report_frame,
    spectrum_identity_checks,
    validate_scenario,
)
from tests.helpers import machine_for, reduced_for


def test_check_pass_rules():
    assert ValidationCheck("a", 1e-6, 1e-5).passed
    assert not ValidationCheck("b", 1e-4, 1e-5).passed
    assert not ValidationCheck("c", math.nan, 1.0).passed
    assert ValidationCheck("d", 0.3, math.inf).passed


def test_report_frame_columns():
    frame = report_frame([ValidationCheck("a", 0.0, 1.0), ValidationCheck("b", 2.0, 1.0)])
    assert list(frame.columns) == ["check", "error", "tolerance", "passed"]
    assert frame["passed"].tolist() == [True, False]


def _power_coefficients(event, pss):
    oscillation = input_electrical_power(machine_for(event), reduced_for(event), event.delta_initial,
                                         event.delta_final)
    return oscillation, cascade_linear(oscillation, pss)


def test_closure_identities_hold(small_event, pss):
    _, coeffs = _power_coefficients(small_event, pss)
    checks = closure_checks(coeffs)
    assert len(checks) == 6
    assert all(check.passed for check in checks), [(c.check, c.error) for c in checks if not c.passed]


def test_spectrum_identities_hold(small_event, pss):
    oscillation, coeffs = _power_coefficients(small_event, pss)
    checks = spectrum_identity_checks(coeffs, pss, np.linspace(0.1, 12.0, 40), oscillation.pre_level)
    assert [c.check for c in checks][-1] == "spectrum_identity_v_out"
    assert all(check.passed for check in checks), [(c.check, c.error) for c in checks if not c.passed]


def test_envelope_checks(pss):
    envelope = EnvelopeInput(amplitude=1.0, omega_e=0.3, omega0=5.2)
    checks = envelope_checks(envelope, pss, None, 1e-3)
    names = [c.check for c in checks]
    assert names[0] == "laplace_quadrature"
    assert "spectrum_identity_v_out" in names
    assert all(check.passed for check in checks), [(c.check, c.error) for c in checks if not c.passed]


def test_small_step_uses_linear_path():
    checks = validate_scenario(load_scenario(bundled_scenario_path("fig4a_speed")))
    names = {c.check for c in checks}
    assert "closure_g_out" in names and "modal_fit" not in names
    assert all(check.passed for check in checks), [(c.check, c.error) for c in checks if not c.passed]


def test_tight_tolerance_fails_oracle_checks():
    checks = validate_scenario(load_scenario(bundled_scenario_path("fig4b_power")), tolerance=1e-15)
    failed = {c.check for c in checks if not c.passed}
    assert "oracle_v_out" in failed
    assert "closure_c1" not in failed


@pytest.mark.slow
def test_large_step_uses_modal_path():
    checks = validate_scenario(load_scenario(bundled_scenario_path("fig5a_speed")))
    names = {c.check for c in checks}
    assert "modal_fit" in names and "closure_c1" not in names
    assert all(check.passed for check in checks), [(c.check, c.error) for c in checks if not c.passed]


def _random_stabilizer(rng):
    while True:
        t = 10.0 ** rng.uniform(-3.0, 1.0, size=8)
        params = StabilizerParams(t1=t[0], t2=t[1], t3=t[2], t4=t[3], t5=t[4], t6=t[5], t_n=t[6], t_s=t[7],
                                  k_s=rng.uniform(0.0, 5.0), k_pr=rng.uniform(0.1, 3.0),
                                  k_ps=rng.uniform(0.1, 3.0))
        poles = np.log(list(params.closed_form_poles().values()))
        if np.min(np.abs(poles[:, None] - poles[None, :]) + np.eye(poles.size)) > 0.05:
            return params


def test_closure_identities_on_random_draws():
    rng = np.random.default_rng(20260117)
    for _ in range(1000):
        pss = _random_stabilizer(rng)
        oscillation = DampedOscillation(a0=rng.uniform(-2.0, 2.0), b0=rng.uniform(-2.0, 2.0),
                                        v_inf=rng.uniform(-1.0, 1.0), lam=rng.uniform(0.01, 2.0),
                                        omega0=rng.uniform(0.1, 10.0))
        checks = closure_checks(cascade_linear(oscillation, pss))
        failed = [(c.check, c.error) for c in checks if not c.passed]
        assert not failed, (pss, oscillation, failed)


def test_modal_closures_on_random_draws():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        pss = _random_stabilizer(rng)
        pairs = [(complex(*rng.uniform(-1.0, 1.0, 2)), complex(-rng.uniform(0.01, 2.0), rng.uniform(0.1, 10.0)))
                 for _ in range(2)]
        modes = ModalSum.from_pairs(pairs, reals=[(rng.uniform(-1.0, 1.0), -rng.uniform(0.05, 3.0))],
                                    dc_offset=rng.uniform(-1.0, 1.0))
        coeffs = cascade_modal(modes, pss)
        for stage in STAGE_NAMES:
            series = coeffs.stage_sum(stage)
            scale = max(1.0, float(np.max(np.abs(series.amplitudes))), abs(series.constant))
            expected = modes.evaluate(0.0) if stage == "v1" else 0.0
            assert abs(series.initial_value() - expected) <= 1e-12 * scale, (stage, pss)
