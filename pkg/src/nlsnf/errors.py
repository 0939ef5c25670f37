"""Exception types shared across the package."""


class CapacityError(ValueError):
    """A requested size exceeds a configured desk-scale cap."""


class DegenerateInputError(ValueError):
    """The input sits on a degenerate locus where a closed form is undefined."""


class InconsistencyError(ArithmeticError):
    """A live indicator met a zero denominator.

    This would contradict the structure of the coefficient formulas, so it is
    raised loudly instead of being skipped.
    """


class NumericalFailure(RuntimeError):
    """The integrator lost conservation beyond tolerance or refused an unresolved step."""

    def __init__(self, message: str, diagnostics: dict | None = None) -> None:
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})

    def __reduce__(self):
        # keep diagnostics when raised inside a worker process
        return (type(self), (str(self), self.diagnostics))
