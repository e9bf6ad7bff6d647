"""Exception types shared across the package."""


class GeometryError(ValueError):
    """Invalid or degenerate geometry request (self-intersection, bad angles)."""


class ConfigError(ValueError):
    """Invalid configuration value or file."""


class ShapeError(ValueError):
    """Array dimensions do not match the mesh/space they claim to live on."""


class DomainError(ValueError):
    """Scalar argument outside its admissible range."""


class PreconditionError(ValueError):
    """Input data violates a documented precondition (e.g. nonzero initial trace)."""


class AssemblyError(RuntimeError):
    """Singular or inconsistent discrete system."""


class CertificationError(RuntimeError):
    """A material law failed its monotonicity/Lipschitz certification."""


class NonlinearDivergenceError(RuntimeError):
    """The per-step monotone iteration exceeded its iteration budget."""

    def __init__(self, msg, last_residual=None):
        super().__init__(msg)
        self.last_residual = last_residual


class IterationFailureError(RuntimeError):
    """The outer coupling iteration failed to converge; carries the history."""

    def __init__(self, msg, history=None):
        super().__init__(msg)
        self.history = history if history is not None else []


class NumericalFailureError(RuntimeError):
    """NaN or infinity encountered in a norm or residual."""
