"""Exception types shared across the package."""


class PreconditionError(ValueError):
    """A documented precondition failed; ``condition`` names which one."""

    def __init__(self, condition: str, message: str = "") -> None:
        self.condition = condition
        super().__init__(f"[{condition}] {message}" if message else condition)


class IndeterminateError(ArithmeticError):
    """An interval comparison could not be decided at the working precision."""


class QuadratureError(RuntimeError):
    """Requested quadrature tolerance could not be reached."""
