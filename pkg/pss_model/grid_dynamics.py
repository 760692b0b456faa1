"""
Two-body generator/grid dynamics.

Houses the cage and Kuramoto-like two-body models of a synchronous generator
coupled to a grid of finite (or infinite) rotational inertia, the reduced
rotor-angle equation

    delta'' + beta * delta' + xi * sin(delta) = tau_r

and the numerical integration of both. Trajectories come back as uniform-grid
``SignalTrace`` objects, the carrier used by every other module.

Conventions:
    - delta = theta_grid - theta_gen (rad)
    - x = J_grid / J_gen; infinite grid inertia is an explicit flag on
      ``MachineParams`` and ``math.inf`` for x, and every (x+1)/x factor is
      exactly 1 in that case.
    - The two-body integrator runs in the frame co-rotating at the base speed
      Omega, so relative angles do not drown in Omega * t.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy.integrate import solve_ivp

from .errors import IntegrationError, ParameterError, SynchronismError

logger = logging.getLogger(__name__)

DEFAULT_OMEGA_BASE = 2.0 * math.pi * 50.0  # rad/s, 50 Hz grid
INTEGRATOR_TOLERANCE = 1e-9
INTEGRATOR_METHOD = "RK45"


class Model(str, Enum):
    CAGE = "cage"
    KURAMOTO = "kuramoto"


def inertia_factor(x):
    """(x+1)/x scaling of the reduced coefficients; exactly 1 for infinite grid inertia."""
    if math.isinf(x):
        return 1.0
    return (x + 1.0) / x


def speed_weight(x):
    """x/(x+1) share of delta' seen by the generator; exactly 1 for infinite grid inertia."""
    if math.isinf(x):
        return 1.0
    return x / (x + 1.0)


def _check_ratio(x, name="x"):
    if not (x > 0):
        raise ParameterError(name, f"inertia ratio must be > 0 or inf, got {x!r}")


# ============================================================================
# PARAMETER TYPES
# ============================================================================

@dataclass(frozen=True)
class MachineParams:
    """Physical generator/grid constants (SI units)."""

    j_gen: float                         # generator inertia (kg m^2)
    tau_elmax: float                     # max air-gap torque (N m)
    j_grid: float = 1.0                  # grid inertia (kg m^2), ignored when infinite_grid
    infinite_grid: bool = False
    k_d: float | None = None             # cage damping (N m s)
    k_gen_kuramoto: float | None = None  # Kuramoto-like damping, generator (N m s)
    k_grid_kuramoto: float | None = None # Kuramoto-like damping, grid (N m s)
    tau_gen: float = 0.0                 # turbine torque on the generator (N m)
    tau_grid: float = 0.0                # net torque on the grid (N m)
    omega_base: float = DEFAULT_OMEGA_BASE
    poles: int = 2
    p_max: float = 1.0                   # max electrical output power (W)

    def __post_init__(self):
        if not (self.j_gen > 0 and math.isfinite(self.j_gen)):
            raise ParameterError("j_gen", f"must be a finite value > 0, got {self.j_gen!r}")
        if not self.infinite_grid and not (self.j_grid > 0 and math.isfinite(self.j_grid)):
            raise ParameterError("j_grid", f"must be a finite value > 0 (or set infinite_grid), got {self.j_grid!r}")
        if not (self.tau_elmax > 0 and math.isfinite(self.tau_elmax)):
            raise ParameterError("tau_elmax", f"must be a finite value > 0, got {self.tau_elmax!r}")
        for name in ("k_d", "k_gen_kuramoto", "k_grid_kuramoto"):
            value = getattr(self, name)
            if value is not None and not (value >= 0 and math.isfinite(value)):
                raise ParameterError(name, f"damping must be finite and >= 0, got {value!r}")
        if isinstance(self.poles, bool) or int(self.poles) != self.poles or self.poles < 2 or self.poles % 2:
            raise ParameterError("poles", f"pole count must be an even integer >= 2, got {self.poles!r}")
        for name in ("tau_gen", "tau_grid", "omega_base", "p_max"):
            if not math.isfinite(getattr(self, name)):
                raise ParameterError(name, "must be finite")

    @property
    def x(self):
        """Grid to generator inertia ratio J_grid / J_gen."""
        if self.infinite_grid:
            return math.inf
        return self.j_grid / self.j_gen


@dataclass(frozen=True)
class ReducedParams:
    """Coefficients of the reduced pendulum and their per-body parts."""

    beta: float
    xi: float
    tau_r: float = 0.0
    x: float = math.inf
    beta_gen: float = 0.0
    beta_grid: float = 0.0
    xi_gen: float = 0.0
    xi_grid: float = 0.0
    tau_bar_gen: float = 0.0
    tau_bar_grid: float = 0.0

    def __post_init__(self):
        if not (self.beta >= 0 and math.isfinite(self.beta)):
            raise ParameterError("beta", f"must be finite and >= 0, got {self.beta!r}")
        if not (self.xi > 0 and math.isfinite(self.xi)):
            raise ParameterError("xi", f"must be finite and > 0, got {self.xi!r}")
        if not math.isfinite(self.tau_r):
            raise ParameterError("tau_r", "must be finite")
        _check_ratio(self.x)


@dataclass(frozen=True)
class TwoBodyState:
    theta_gen: float
    theta_grid: float
    theta_gen_dot: float
    theta_grid_dot: float
    t: float = 0.0

    def __post_init__(self):
        for name in ("theta_gen", "theta_grid", "theta_gen_dot", "theta_grid_dot", "t"):
            if not math.isfinite(getattr(self, name)):
                raise ParameterError(name, "must be finite")


@dataclass(frozen=True)
class TransientEvent:
    """Abrupt step of the coupling xi_I -> xi_II from the pre-event equilibrium."""

    xi_initial: float
    xi_final: float
    delta_initial: float
    event_time: float = 0.0

    def __post_init__(self):
        for name in ("xi_initial", "xi_final"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ParameterError(name, f"coupling must be finite and > 0, got {value!r}")
        if not math.isfinite(self.delta_initial):
            raise ParameterError("delta_initial", "must be finite")
        if not (self.event_time >= 0 and math.isfinite(self.event_time)):
            raise ParameterError("event_time", f"must be finite and >= 0, got {self.event_time!r}")
        if abs(self.torque) >= self.xi_final:
            raise SynchronismError(
                f"|tau_r| = {abs(self.torque):.6g} >= xi_final = {self.xi_final:.6g}: "
                "synchronism is lost after the event"
            )

    @classmethod
    def from_angles(cls, xi_final, delta_initial, delta_final, event_time=0.0):
        """Event given by the final coupling and both equilibrium angles."""
        if math.sin(delta_initial) == 0.0:
            if math.sin(delta_final) != 0.0:
                raise ParameterError("delta_initial", "sin(delta_initial) = 0 cannot reach a non-zero delta_final")
            return cls(xi_final, xi_final, delta_initial, event_time)
        xi_initial = xi_final * math.sin(delta_final) / math.sin(delta_initial)
        return cls(xi_initial, xi_final, delta_initial, event_time)

    @property
    def torque(self):
        """tau_r held by the pre-event equilibrium: xi_I sin(delta_I)."""
        return self.xi_initial * math.sin(self.delta_initial)

    @property
    def delta_final(self):
        return math.asin(self.torque / self.xi_final)

    def post_event(self, reduced):
        """Reduced parameters after the step: xi_II and the pre-event torque."""
        return replace(reduced, xi=self.xi_final, tau_r=self.torque)


@dataclass(frozen=True, eq=False)
class SignalTrace:
    """Uniformly sampled real signal starting at t0."""

    t0: float
    dt: float
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ParameterError("dt", f"step must be finite and > 0, got {self.dt!r}")
        if not math.isfinite(self.t0):
            raise ParameterError("t0", "must be finite")
        samples = np.array(self.samples, dtype=float).ravel()
        if samples.size == 0:
            raise ParameterError("samples", "trace must not be empty")
        if not np.all(np.isfinite(samples)):
            raise ParameterError("samples", "trace contains non-finite values")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @classmethod
    def from_function(cls, func, horizon, dt, t0=0.0):
        times = t0 + uniform_grid(horizon, dt)
        return cls(t0, dt, func(times))

    def __len__(self):
        return self.samples.size

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(self.samples.size)

    @property
    def t_end(self):
        return self.t0 + self.dt * (self.samples.size - 1)

    @property
    def peak(self):
        return float(np.max(np.abs(self.samples)))

    def with_samples(self, samples):
        return SignalTrace(self.t0, self.dt, samples)


def uniform_grid(horizon, dt):
    """Sample times 0, dt, 2dt, ... not exceeding horizon."""
    if not (dt > 0 and math.isfinite(dt)):
        raise ParameterError("dt", f"step must be finite and > 0, got {dt!r}")
    if not (horizon > 0 and math.isfinite(horizon)):
        raise ParameterError("horizon", f"must be finite and > 0, got {horizon!r}")
    count = int(math.floor(horizon / dt + 1e-9)) + 1
    return dt * np.arange(count)


# ============================================================================
# REDUCED MODEL
# ============================================================================

def reduce_params(machine, model=Model.CAGE):
    """Per-body and reduced pendulum coefficients of a two-body machine."""
    model = Model(model)
    x = machine.x
    factor = inertia_factor(x)

    if model is Model.CAGE:
        if machine.k_d is None:
            raise ParameterError("k_d", "the cage model needs the damping coefficient k_d")
        k_gen = k_grid = machine.k_d
    else:
        if machine.k_gen_kuramoto is None or machine.k_grid_kuramoto is None:
            raise ParameterError(
                "k_gen_kuramoto", "the Kuramoto-like model needs k_gen_kuramoto and k_grid_kuramoto"
            )
        k_gen, k_grid = machine.k_gen_kuramoto, machine.k_grid_kuramoto

    beta_gen = k_gen / machine.j_gen
    xi_gen = machine.tau_elmax / machine.j_gen
    tau_bar_gen = machine.tau_gen / machine.j_gen
    if machine.infinite_grid:
        beta_grid = xi_grid = tau_bar_grid = 0.0
    else:
        beta_grid = k_grid / machine.j_grid
        xi_grid = machine.tau_elmax / machine.j_grid
        tau_bar_grid = machine.tau_grid / machine.j_grid

    if model is Model.CAGE:
        beta = k_gen / machine.j_gen * factor
    else:
        beta = beta_gen + beta_grid

    return ReducedParams(
        beta=beta,
        xi=xi_gen * factor,
        tau_r=tau_bar_grid - tau_bar_gen,
        x=x,
        beta_gen=beta_gen,
        beta_grid=beta_grid,
        xi_gen=xi_gen,
        xi_grid=xi_grid,
        tau_bar_gen=tau_bar_gen,
        tau_bar_grid=tau_bar_grid,
    )


def equilibrium_angle(reduced):
    """Stable equilibrium of the reduced pendulum: the principal branch of arcsin(tau_r / xi)."""
    if abs(reduced.tau_r) >= reduced.xi:
        raise SynchronismError(
            f"|tau_r| = {abs(reduced.tau_r):.6g} >= xi = {reduced.xi:.6g}: no stable equilibrium"
        )
    return math.asin(reduced.tau_r / reduced.xi)


def rotor_angle_rhs(delta, delta_dot, reduced):
    """Angular acceleration of the reduced pendulum: tau_r - beta delta' - xi sin(delta)."""
    return reduced.tau_r - reduced.beta * delta_dot - reduced.xi * np.sin(delta)


def _check_solution(sol, what):
    if sol.status < 0:
        raise IntegrationError(f"{what}: integrator failed ({sol.message})")
    if not np.all(np.isfinite(sol.y)):
        raise IntegrationError(f"{what}: trajectory diverged (non-finite state)")


def integrate_rotor(event, reduced, horizon, dt):
    """
    Integrate the reduced pendulum through the coupling step of ``event``.

    The rotor starts at rest at delta_I (the pre-event equilibrium) and the
    post-event equation uses xi_II and the pre-event torque. Returns the
    (delta, delta_dot) traces on the uniform grid 0, dt, ..., horizon.
    """
    times = uniform_grid(horizon, dt)
    post = event.post_event(reduced)
    delta = np.full(times.size, float(event.delta_initial))
    delta_dot = np.zeros(times.size)

    after = times >= event.event_time
    if np.any(after):
        t_eval = times[after]

        def rhs(t, y):
            return (y[1], rotor_angle_rhs(y[0], y[1], post))

        sol = solve_ivp(
            rhs,
            (float(event.event_time), float(t_eval[-1])),
            (float(event.delta_initial), 0.0),
            method=INTEGRATOR_METHOD,
            t_eval=t_eval,
            rtol=INTEGRATOR_TOLERANCE,
            atol=INTEGRATOR_TOLERANCE,
        )
        _check_solution(sol, "rotor angle")
        delta[after] = sol.y[0]
        delta_dot[after] = sol.y[1]
        logger.debug("rotor angle: %d samples, %d rhs evaluations", t_eval.size, sol.nfev)

    return SignalTrace(0.0, dt, delta), SignalTrace(0.0, dt, delta_dot)


# ============================================================================
# TWO-BODY MODELS
# ============================================================================

class TwoBodyTrajectory(Sequence):
    """Integrated two-body trajectory; indexing yields ``TwoBodyState`` values."""

    def __init__(self, t0, dt, phi_grid, phi_gen, phi_grid_dot, phi_gen_dot, omega_base):
        self.t0 = t0
        self.dt = dt
        self.omega_base = omega_base
        # angles and speeds relative to the frame rotating at omega_base
        self._phi_grid = phi_grid
        self._phi_gen = phi_gen
        self._phi_grid_dot = phi_grid_dot
        self._phi_gen_dot = phi_gen_dot

    def __len__(self):
        return self._phi_gen.size

    def __getitem__(self, index):
        if isinstance(index, slice):
            return [self[i] for i in range(*index.indices(len(self)))]
        if index < 0:
            index += len(self)
        if not 0 <= index < len(self):
            raise IndexError("trajectory index out of range")
        elapsed = self.dt * index
        rotation = self.omega_base * elapsed
        return TwoBodyState(
            theta_gen=float(self._phi_gen[index] + rotation),
            theta_grid=float(self._phi_grid[index] + rotation),
            theta_gen_dot=float(self._phi_gen_dot[index] + self.omega_base),
            theta_grid_dot=float(self._phi_grid_dot[index] + self.omega_base),
            t=self.t0 + elapsed,
        )

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(len(self))

    def theta_gen_dot(self):
        return SignalTrace(self.t0, self.dt, self._phi_gen_dot + self.omega_base)

    def theta_grid_dot(self):
        return SignalTrace(self.t0, self.dt, self._phi_grid_dot + self.omega_base)

    def relative_angle(self):
        """delta(t) = theta_grid - theta_gen."""
        return SignalTrace(self.t0, self.dt, self._phi_grid - self._phi_gen)

    def relative_speed(self):
        return SignalTrace(self.t0, self.dt, self._phi_grid_dot - self._phi_gen_dot)

    def generator_speed_deviation(self):
        """theta_gen' - Omega."""
        return SignalTrace(self.t0, self.dt, self._phi_gen_dot)

    def momentum(self, machine):
        """J_grid theta_grid' + J_gen theta_gen' (finite grid inertia only)."""
        if machine.infinite_grid:
            raise ParameterError("j_grid", "momentum is undefined for infinite grid inertia")
        return SignalTrace(
            self.t0,
            self.dt,
            machine.j_grid * (self._phi_grid_dot + self.omega_base)
            + machine.j_gen * (self._phi_gen_dot + self.omega_base),
        )


def _two_body_rhs(machine, model):
    """Right-hand side of the cage or Kuramoto-like model in the co-rotating frame."""
    tau_el = machine.tau_elmax
    j_gen = machine.j_gen
    infinite = machine.infinite_grid
    j_grid = machine.j_grid

    if model is Model.CAGE:
        if machine.k_d is None:
            raise ParameterError("k_d", "the cage model needs the damping coefficient k_d")
        k_d = machine.k_d

        def rhs(t, y):
            rel = y[0] - y[1]
            rel_dot = y[2] - y[3]
            coupling = k_d * rel_dot + tau_el * np.sin(rel)
            acc_grid = 0.0 if infinite else (machine.tau_grid - coupling) / j_grid
            acc_gen = (machine.tau_gen + coupling) / j_gen
            return (y[2], y[3], acc_grid, acc_gen)

        return rhs

    if machine.k_gen_kuramoto is None or machine.k_grid_kuramoto is None:
        raise ParameterError("k_gen_kuramoto", "the Kuramoto-like model needs k_gen_kuramoto and k_grid_kuramoto")
    k_gen, k_grid = machine.k_gen_kuramoto, machine.k_grid_kuramoto

    def rhs(t, y):
        torque = tau_el * np.sin(y[0] - y[1])
        acc_grid = 0.0 if infinite else (machine.tau_grid - k_grid * y[2] - torque) / j_grid
        acc_gen = (machine.tau_gen - k_gen * y[3] + torque) / j_gen
        return (y[2], y[3], acc_grid, acc_gen)

    return rhs


def integrate_two_body(machine, model, initial, horizon, dt):
    """Integrate the cage or Kuramoto-like two-body model."""
    model = Model(model)
    times = uniform_grid(horizon, dt)
    omega = machine.omega_base
    y0 = (
        initial.theta_grid,
        initial.theta_gen,
        initial.theta_grid_dot - omega,
        initial.theta_gen_dot - omega,
    )
    sol = solve_ivp(
        _two_body_rhs(machine, model),
        (0.0, float(times[-1])),
        y0,
        method=INTEGRATOR_METHOD,
        t_eval=times,
        rtol=INTEGRATOR_TOLERANCE,
        atol=INTEGRATOR_TOLERANCE,
    )
    _check_solution(sol, f"{model.value} two-body model")
    logger.debug("%s two-body: %d samples, %d rhs evaluations", model.value, times.size, sol.nfev)
    return TwoBodyTrajectory(initial.t, dt, sol.y[0], sol.y[1], sol.y[2], sol.y[3], omega)


def equilibrium_state(event, omega_base=DEFAULT_OMEGA_BASE, t=0.0):
    """Pre-event steady rotation: delta = delta_I, both bodies at Omega."""
    return TwoBodyState(
        theta_gen=0.0,
        theta_grid=float(event.delta_initial),
        theta_gen_dot=omega_base,
        theta_grid_dot=omega_base,
        t=t,
    )


def scenario_machine(event, beta, x, *, damping="combined", j_gen=1.0,
                     omega_base=DEFAULT_OMEGA_BASE, poles=2, p_max=1.0):
    """
    Post-event machine whose cage reduction gives (xi_II, beta, tau_r) at ratio x.

    ``damping="combined"`` reads beta as the reduced pendulum damping;
    ``damping="generator"`` reads it as beta_gen = K_D / J_gen. The
    Kuramoto-like damping constants are set equal to K_D.
    """
    _check_ratio(x)
    if damping not in ("combined", "generator"):
        raise ParameterError("damping", f"expected 'combined' or 'generator', got {damping!r}")
    factor = inertia_factor(x)
    k_d = beta * j_gen / factor if damping == "combined" else beta * j_gen
    tau_gen = -event.torque * j_gen / factor
    infinite = math.isinf(x)
    return MachineParams(
        j_gen=j_gen,
        tau_elmax=event.xi_final * j_gen / factor,
        j_grid=j_gen if infinite else x * j_gen,
        infinite_grid=infinite,
        k_d=k_d,
        k_gen_kuramoto=k_d,
        k_grid_kuramoto=k_d,
        tau_gen=tau_gen,
        tau_grid=0.0 if infinite else -tau_gen,
        omega_base=omega_base,
        poles=poles,
        p_max=p_max,
    )


# ============================================================================
# DERIVED SIGNALS
# ============================================================================

def rotor_velocity(delta_dot_trace, x, omega_base=DEFAULT_OMEGA_BASE):
    """Generator speed: Omega - x/(x+1) delta'."""
    _check_ratio(x)
    return delta_dot_trace.with_samples(omega_base - speed_weight(x) * delta_dot_trace.samples)


def bus_frequency_deviation(delta_dot_trace, poles, x=math.inf):
    """Bus frequency deviation -p/2 x/(x+1) delta', no 2 pi factor."""
    if isinstance(poles, bool) or int(poles) != poles or poles < 2:
        raise ParameterError("poles", f"pole count must be an integer >= 2, got {poles!r}")
    _check_ratio(x)
    return delta_dot_trace.with_samples(-0.5 * poles * speed_weight(x) * delta_dot_trace.samples)
