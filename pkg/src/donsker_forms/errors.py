"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Bad experiment configuration or an unusable random stream."""


class ValidationError(ValueError):
    """A user-supplied object violates its contract (e.g. negative gamma)."""


class NonFiniteSampleError(ArithmeticError):
    """A Monte Carlo sample evaluated to NaN or infinity."""

    def __init__(self, index, stream_id, value):
        self.index = index
        self.stream_id = stream_id
        self.value = value
        super().__init__(
            f"non-finite sample {value!r} at index {index} (stream {stream_id})"
        )
