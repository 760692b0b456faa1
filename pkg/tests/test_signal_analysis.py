"""Exponential sums, one-sided transforms, frequency grids and CSV output."""

import logging
import math
import os

import numpy as np
import pandas as pd
import pytest

from pss_model.errors import ParameterError, PoleEvaluationError
from pss_model.grid_dynamics import SignalTrace
from pss_model.signal_analysis import (
    ExponentialSum,
    make_omega_grid,
    relative_l2_error,
    relative_linf_error,
    spectra_frame,
    spectrum_component,
    spectrum_numeric,
    spectrum_values,
    traces_frame,
    write_csv,
)


def test_conjugate_pair_evaluates_to_real_signal():
    rate = complex(-0.5, 2.0)
    paired = ExponentialSum([0.5, 0.5], [rate, rate.conjugate()])
    single = ExponentialSum([1.0], [rate])
    t = np.linspace(0.0, 5.0, 11)
    expected = np.exp(-0.5 * t) * np.cos(2.0 * t)
    assert np.allclose(paired.evaluate(t), expected, atol=1e-14)
    assert np.allclose(single.evaluate(t), expected, atol=1e-14)
    assert paired.initial_value() == pytest.approx(1.0)


def test_laplace_of_real_and_unpaired_terms():
    decay = ExponentialSum([1.0], [-1.0])
    assert decay.laplace(1.0) == pytest.approx(0.5)

    rate = complex(-0.5, 2.0)
    s = 1j
    expected = (s + 0.5) / ((s + 0.5) ** 2 + 4.0)
    assert ExponentialSum([1.0], [rate]).laplace(s) == pytest.approx(expected, abs=1e-14)
    paired = ExponentialSum([0.5, 0.5], [rate, rate.conjugate()])
    assert paired.laplace(s) == pytest.approx(expected, abs=1e-14)


def test_constant_transform_and_its_pole():
    series = ExponentialSum(constant=2.0)
    assert series.laplace(0.5j) == pytest.approx(2.0 / 0.5j)
    assert series.laplace(0.5j, include_constant=False) == 0
    with pytest.raises(PoleEvaluationError):
        series.laplace(0.0)


def test_transform_on_a_pole():
    with pytest.raises(PoleEvaluationError):
        ExponentialSum([1.0], [complex(-0.5, 2.0)]).laplace(complex(-0.5, 2.0))


def test_sum_arithmetic():
    a = ExponentialSum([1.0], [-1.0], 0.5)
    b = ExponentialSum([2.0], [-2.0], 0.25)
    total = a + b
    assert len(total) == 2
    assert total.constant == 0.75
    assert total.scaled(2.0).evaluate(0.0) == pytest.approx(2.0 * (1.0 + 2.0 + 0.75))
    with pytest.raises(ParameterError):
        ExponentialSum([1.0, 2.0], [-1.0])


def test_numeric_spectrum_of_decaying_sine():
    omegas = np.linspace(0.1, 10.0, 25)
    trace = SignalTrace.from_function(lambda t: np.exp(-0.5 * t) * np.sin(2.0 * t), 120.0, 1e-3)
    numeric = spectrum_values(spectrum_numeric(trace, omegas))
    s = 1j * omegas
    exact = 2.0 / ((s + 0.5) ** 2 + 4.0)
    assert relative_linf_error(exact, numeric) < 1e-5


def test_numeric_spectrum_with_asymptote():
    omegas = np.array([0.5, 1.0, 2.0])
    trace = SignalTrace(0.0, 1e-2, np.ones(1001))
    values = spectrum_values(spectrum_numeric(trace, omegas, asymptote=1.0))
    assert np.allclose(values, 1.0 / (1j * omegas), atol=1e-14)


def test_truncated_trace_is_reported(caplog):
    trace = SignalTrace.from_function(lambda t: np.sin(t), 10.0, 1e-2)
    with caplog.at_level(logging.WARNING, logger="pss_model.signal_analysis"):
        spectrum_numeric(trace, [1.0])
    assert "has not decayed" in caplog.text


def test_spectrum_components():
    values = np.array([3.0 + 4.0j])
    assert spectrum_component(values, "real")[0] == 3.0
    assert spectrum_component(values, "imag")[0] == 4.0
    assert spectrum_component(values, "abs")[0] == 5.0
    with pytest.raises(ParameterError):
        spectrum_component(values, "phase")


def test_omega_grids():
    linear = make_omega_grid(0.05, 12.0, 240)
    assert linear.size == 240 and linear[0] == 0.05 and linear[-1] == 12.0
    log = make_omega_grid(1e-3, 1e3, 7, "log")
    assert np.allclose(log, [1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3])
    with pytest.raises(ParameterError):
        make_omega_grid(0.0, 1.0, 10, "log")
    with pytest.raises(ParameterError):
        make_omega_grid(2.0, 1.0, 10)
    with pytest.raises(ParameterError):
        make_omega_grid(0.0, 1.0, 0)


def test_relative_errors():
    reference = np.array([1.0, -2.0, 0.5])
    assert relative_linf_error(reference, reference + 0.02) == pytest.approx(0.01)
    assert relative_linf_error(np.zeros(3), np.full(3, 0.1)) == pytest.approx(0.1)
    assert relative_l2_error(reference, reference) == 0.0
    with pytest.raises(ParameterError):
        relative_linf_error(reference, reference[:2])


def test_write_csv_is_exact_and_atomic(tmp_path):
    frame = pd.DataFrame({"t": [0.0, 0.1], "v": [1.0 / 3.0, math.pi]})
    path = write_csv(frame, tmp_path / "out" / "traces.csv")
    with open(path, "rb") as handle:
        raw = handle.read()
    assert b"\r\n" not in raw
    assert raw.splitlines()[0] == b"t,v"
    back = pd.read_csv(path, float_precision="round_trip")
    assert back["v"].tolist() == [1.0 / 3.0, math.pi]
    assert [name for name in os.listdir(tmp_path / "out")] == ["traces.csv"]


def test_frames():
    a = SignalTrace(0.0, 0.5, [1.0, 2.0, 3.0])
    b = a.with_samples([0.0, 0.0, 1.0])
    frame = traces_frame({"v_in": a, "v_out": b})
    assert list(frame.columns) == ["t", "v_in", "v_out"]
    assert frame["t"].tolist() == [0.0, 0.5, 1.0]
    with pytest.raises(ParameterError):
        traces_frame({"v_in": a, "short": SignalTrace(0.0, 0.5, [1.0])})

    spectra = spectra_frame([1.0, 2.0], {"v_in": [1j, 2j]}, "imag")
    assert list(spectra.columns) == ["omega", "v_in_imag_spectrum"]
    assert spectra["v_in_imag_spectrum"].tolist() == [1.0, 2.0]
