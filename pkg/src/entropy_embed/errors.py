"""Exception types shared across the package."""


class GraphFormatError(ValueError):
    """Malformed edge-list or snapshot input."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class EmptyGraphError(ValueError):
    pass


class SamplingError(RuntimeError):
    """Raised when a non-edge partner cannot be found within the retry budget."""


class DivergenceError(FloatingPointError):
    def __init__(self, iteration):
        super().__init__(f"non-finite coordinate after iteration {iteration}")
        self.iteration = iteration


class ConfigurationError(ValueError):
    pass


class CapabilityError(ValueError):
    pass
