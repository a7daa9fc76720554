"""Exception types raised across the package."""


class CartanLabError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(CartanLabError, ValueError):
    pass


class InvalidAlgebra(CartanLabError, ValueError):
    pass


class InvalidRepresentation(CartanLabError, ValueError):
    pass


class NotInAlgebra(CartanLabError, ValueError):
    pass


class OutOfBranch(CartanLabError, ValueError):
    pass


class TargetMismatch(CartanLabError, ValueError):
    pass


class SingularCoframe(CartanLabError, ValueError):
    pass


class BackendUnsupported(CartanLabError, ValueError):
    pass


class NotHorizontal(CartanLabError, ValueError):
    pass


class NotReductive(CartanLabError, ValueError):
    pass


class NotInvariant(CartanLabError, ValueError):
    pass


class ModelMismatch(CartanLabError, ValueError):
    pass


class SubgroupViolation(CartanLabError, ValueError):
    pass


class StepUnstable(CartanLabError, RuntimeError):
    pass


class NotGInvariant(CartanLabError, ValueError):
    pass


class NoSolution(CartanLabError, ValueError):
    pass


class NotType1(CartanLabError, ValueError):
    pass


class NotType2(CartanLabError, ValueError):
    pass


class UnsupportedCurvedBase(CartanLabError, ValueError):
    pass


class SingularFrame(CartanLabError, ValueError):
    pass


class SingularLinearPart(CartanLabError, ValueError):
    pass


class DimensionOverflow(CartanLabError, ValueError):
    pass


class ConfigError(CartanLabError, ValueError):
    """Malformed configuration; carries a field path for diagnostics."""

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field and not message.startswith(field) else message)
