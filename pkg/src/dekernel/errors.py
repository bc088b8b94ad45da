"""Exception types shared across the package."""


class DekernelError(Exception):
    """Base class for all package errors."""


class UndefinedAtPoint(DekernelError):
    """A local fit has no usable neighbourhood at the requested point."""

    def __init__(self, x0, reason="insufficient kernel weight"):
        self.x0 = x0
        self.reason = reason
        super().__init__(f"estimate undefined at x0={x0!r}: {reason}")


class QuadratureError(DekernelError):
    pass


class NonConvergence(DekernelError):
    """An iterative solver ran out of iterations.

    ``diagnostics`` holds whatever the solver knew when it gave up.
    """

    def __init__(self, message, **diagnostics):
        self.diagnostics = diagnostics
        super().__init__(message)


class EstimationError(DekernelError):
    pass


class DomainError(DekernelError, ValueError):
    pass


class SelectionError(DekernelError):
    pass
