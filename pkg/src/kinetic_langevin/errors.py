"""Exception types shared across the package."""


class KineticLangevinError(Exception):
    """Base class for all package errors."""


class UsageError(KineticLangevinError, ValueError):
    """Invalid arguments: wrong shapes, non-finite inputs, out-of-range parameters."""


class PlanningError(KineticLangevinError, ValueError):
    """The requested accuracy cannot be met with a step size below 1."""


class DivergenceError(KineticLangevinError, FloatingPointError):
    """A chain produced a non-finite coordinate."""

    def __init__(self, chain: int, iteration: int, message: str | None = None):
        self.chain = chain
        self.iteration = iteration
        super().__init__(
            message or f"chain {chain} produced a non-finite state at iteration {iteration}"
        )


class InternalError(KineticLangevinError, RuntimeError):
    """An analytically impossible condition was hit (e.g. indefinite kernel covariance)."""
