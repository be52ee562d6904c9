"""Exception taxonomy shared by the compute modules and the CLI."""

from __future__ import annotations


class FracpError(Exception):
    """Base class for every error raised by :mod:`fracp`."""


class DomainError(FracpError, ValueError):
    """An argument lies outside the admissible range."""


class PointwiseUnsupported(FracpError):
    """The symmetrized pointwise representation is not valid for these parameters."""


class QuadratureError(FracpError):
    """A quadrature refinement check failed."""


class KernelMismatch(FracpError, ValueError):
    """A precomputed kernel was built for a different node set or parameter triple."""


class ConstraintError(FracpError):
    """The iterate left the region ``b(u) > 0`` where the constraint can be restored."""

    def __init__(self, b_value: float, message: str | None = None):
        self.b_value = float(b_value)
        super().__init__(message or f"cannot project onto b(u) = 1: b(u) = {self.b_value!r} <= 0")


class StepFailure(FracpError):
    """Backtracking line search underflowed."""

    def __init__(self, grad_norm: float, backtracks: int):
        self.grad_norm = float(grad_norm)
        self.backtracks = int(backtracks)
        super().__init__(
            f"no descent after {backtracks} backtracks (projected gradient norm {grad_norm:.3e})"
        )


class SolverDiverged(FracpError):
    """The descent loop hit ``max_iters`` while the energy was still moving."""


class InfeasibleStart(FracpError):
    """No initializer in the radius schedule has ``b(w_R) > 0``."""


class ConfigError(FracpError, ValueError):
    """A run configuration is malformed; the message names the offending field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class ParseError(FracpError, ValueError):
    """A data file could not be parsed; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class SchemaError(FracpError, ValueError):
    """A data file has the wrong header."""
