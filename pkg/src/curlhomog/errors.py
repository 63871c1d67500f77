"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """A precondition on an argument was violated."""


class GridMismatch(ValueError):
    """Fields defined on different grids (or strata) were combined."""


class NumericalDegeneracy(ArithmeticError):
    """A coefficient sample is singular or too badly conditioned to invert."""


class SolverFailure(RuntimeError):
    """A Krylov solve did not reach its tolerance.

    The final relative residual and the iteration count are attached so
    callers can report them.
    """

    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(f"{message} (residual={residual:.3e}, iterations={iterations})")
        self.residual = residual
        self.iterations = iterations
