class FragstochError(Exception):
    """Base class for library errors."""


class ParameterError(FragstochError, ValueError):
    pass


class UnsupportedParameterError(ParameterError):
    pass


class DomainError(FragstochError, ValueError):
    pass


class StateError(FragstochError, RuntimeError):
    pass


class NumericError(FragstochError, ArithmeticError):
    """A numerical routine could not reach its requested tolerance."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics
