"""Shared fixtures: reference stabilizer tuning and the figure events."""

import math

import pytest

from pss_model.grid_dynamics import TransientEvent
from pss_model.stabilizer_blocks import StabilizerParams


@pytest.fixture
def pss():
    return StabilizerParams()


@pytest.fixture
def small_event():
    """Coupling 1, equilibrium angle pi/4 -> pi/5 (a step of pi/20)."""
    return TransientEvent.from_angles(xi_final=1.0, delta_initial=math.pi / 4, delta_final=math.pi / 5)


@pytest.fixture
def large_event():
    """Coupling 1 -> 5 from the pi/3 equilibrium."""
    return TransientEvent(xi_initial=1.0, xi_final=5.0, delta_initial=math.pi / 3)


@pytest.fixture
def small_signal_event():
    """A pi/200 step around the coupling-5 equilibrium."""
    delta_final = math.asin(math.sin(math.pi / 3) / 5.0)
    return TransientEvent.from_angles(xi_final=5.0, delta_initial=delta_final + math.pi / 200,
                                      delta_final=delta_final)
