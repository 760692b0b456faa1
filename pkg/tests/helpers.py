import math

import numpy as np

from pss_model.grid_dynamics import Model, SignalTrace, reduce_params, scenario_machine

BETA = 0.3


def machine_for(event, x=math.inf, beta=BETA):
    return scenario_machine(event, beta, x)


def reduced_for(event, x=math.inf, beta=BETA, model=Model.CAGE):
    return event.post_event(reduce_params(machine_for(event, x, beta), model))


def sinusoid_trace(omega, horizon, dt, amplitude=1.0):
    """amplitude * sin(omega t) sampled from t = 0."""
    return SignalTrace.from_function(lambda t: amplitude * np.sin(omega * t), horizon, dt)
