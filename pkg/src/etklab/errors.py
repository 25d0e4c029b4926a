"""Exception types shared across the package."""


class StructuralError(ValueError):
    """Shapes or index structures of tensors do not fit together."""


class ValidationError(ValueError):
    """Input values violate a documented precondition."""


class ResourceCapError(RuntimeError):
    """A dense materialization or simulation would exceed the configured cap."""
