"""Exception hierarchy shared by every module and mapped to CLI exit codes."""


class PssModelError(Exception):
    """Base class for all errors raised by pss_model."""

    exit_code = 2


class ConfigError(PssModelError, ValueError):
    """Invalid user input: scenario files, flags or parameter values."""

    exit_code = 1


class ParameterError(ConfigError):
    """A parameter violates an invariant of its type."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message


class UnknownStageError(ConfigError, KeyError):
    """A stage name that the coefficient set or cascade does not have."""

    def __init__(self, stage, known):
        super().__init__(f"unknown stage {stage!r}; expected one of {', '.join(known)}")
        self.stage = stage

    def __str__(self):
        return self.args[0]


class NumericalError(PssModelError, ArithmeticError):
    """A computation that cannot proceed for the given numbers."""

    exit_code = 2


class SynchronismError(NumericalError):
    """|tau_r| >= xi: no stable equilibrium exists."""


class RegimeError(NumericalError):
    """The post-event pendulum is not underdamped."""


class PoleCollisionError(NumericalError):
    """Two poles coincide where the closed forms assume simple poles."""


class PoleEvaluationError(NumericalError):
    """A transfer function or transform was evaluated on one of its poles."""


class IntegrationError(NumericalError):
    """The ODE integrator failed or produced non-finite values."""


class ResolutionError(NumericalError):
    """The simulation step is too coarse for the fastest time constant."""


class ModalFitError(NumericalError):
    """Mode extraction could not produce an acceptable exponential fit."""


class ValidationFailure(NumericalError):
    """At least one validation check exceeded its tolerance."""
