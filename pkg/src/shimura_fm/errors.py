class DomainError(ValueError):
    """Input is well-formed but outside the mathematical domain of an operation."""


class ConvergenceError(RuntimeError):
    """A numerical refinement loop ran out of budget."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
