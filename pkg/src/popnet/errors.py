"""Exception types shared across the package."""


class PopnetError(Exception):
    """Base class for all package-specific errors."""


class DomainError(PopnetError, ValueError):
    """An argument left the mathematical domain of an operation."""


class IntegrationFault(PopnetError, RuntimeError):
    """A simulation produced a non-finite state.

    Carries the first time at which the state went bad.
    """

    def __init__(self, time: float, detail: str = ""):
        self.time = time
        msg = f"non-finite state at t={time:g}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class StiffnessError(PopnetError, RuntimeError):
    """Adaptive integrator step size underflowed.

    Carries the time at which the step-size floor was hit.
    """

    def __init__(self, time: float, step: float):
        self.time = time
        self.step = step
        super().__init__(f"step size underflow ({step:.3e}) at t={time:g}; system too stiff")


class BranchLostError(PopnetError, RuntimeError):
    """Fixed-point continuation lost its branch (fold or Newton failure).

    Carries the last parameter value at which the branch was still tracked.
    """

    def __init__(self, last_good: float, detail: str = ""):
        self.last_good = last_good
        msg = f"continuation branch lost after parameter={last_good:g}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class SchemaError(PopnetError, ValueError):
    """A configuration document violated the published schema."""

    def __init__(self, path: str, reason: str):
        self.path = path
        self.reason = reason
        super().__init__(f"{path}: {reason}")
