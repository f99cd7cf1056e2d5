"""Exception hierarchy shared by every levisim module.

The CLI maps :class:`ConfigError` to exit code 2, :class:`ModelError`
subclasses to exit code 3 and I/O failures to exit code 4.
"""


class LevisimError(Exception):
    """Base class for all package errors."""


class ConfigError(LevisimError):
    def __init__(self, message, line=None, key=None):
        self.line = line
        self.key = key
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{where}")


class ModelError(LevisimError):
    """A physics or numerical model could not produce a result."""


class InvalidBeam(ModelError):
    pass


class NoSurface(ModelError):
    pass


class CouplingDivergence(ModelError):
    pass


class NoWellFound(ModelError):
    pass


class UnstableWell(ModelError):
    pass


class QuadratureNonConvergence(ModelError):
    pass


class ParticleLost(ModelError):
    def __init__(self, message, step=None):
        self.step = step
        super().__init__(message if step is None else f"{message} at step {step}")


class NonFinite(ModelError):
    def __init__(self, message, step=None):
        self.step = step
        super().__init__(message if step is None else f"{message} at step {step}")


class TooShort(ModelError):
    pass


class NoConvergence(ModelError):
    def __init__(self, message, residual=None, nfev=None):
        self.residual = residual
        self.nfev = nfev
        super().__init__(message)


class NoPeak(ModelError):
    pass


class PropagatingOrder(ModelError):
    pass


class MeshNotConverged(ModelError):
    pass


class Interpenetration(ModelError):
    pass


class RegimeViolation(UserWarning):
    """Gas is not in the free-molecular regime; damping formulas are extrapolated."""
