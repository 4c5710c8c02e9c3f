"""Exception types shared across the package."""


class StrandsimError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(StrandsimError):
    """Input violates a documented precondition or invariant."""


class ParseError(ValidationError):
    """A file could not be parsed; carries the offending line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigError(ValidationError):
    """Degenerate or inconsistent configuration parameters."""


class InfeasibleError(ValidationError):
    """A requested target lies outside the feasible region."""


class UndefinedValueError(StrandsimError):
    """A quantity is undefined for the given input (e.g. mean over nothing)."""


class CalibrationError(StrandsimError):
    """Bounded search failed to reach the target; reports the best attempt."""

    def __init__(self, message, best_achieved=None, best_config=None):
        if best_achieved is not None:
            message = f"{message} (best achieved: {best_achieved:.4f})"
        super().__init__(message)
        self.best_achieved = best_achieved
        self.best_config = best_config
