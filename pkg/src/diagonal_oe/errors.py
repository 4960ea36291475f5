"""Exception types shared across the package."""


class HypothesisError(ValueError):
    """A structural hypothesis on the lamp groups or the schedule is violated."""


class CapExceeded(RuntimeError):
    """A materialized set would exceed the configured element cap."""


class InvariantError(AssertionError):
    """A verification step found a mismatch (indicates an implementation bug)."""


class ConfigError(ValueError):
    """The run configuration could not be parsed."""
