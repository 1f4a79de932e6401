"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An input violates a documented precondition (bad prime, odd nbits, ...)."""


class ConstructionError(RuntimeError):
    """A builder produced an object that fails its own structural checks."""


class DisconnectedGraphError(ValueError):
    """The operation needs a connected graph."""


class RoutingError(RuntimeError):
    """A route exceeded its virtual-channel budget. Indicates a bug."""


class DeadlockError(RuntimeError):
    """The simulator stopped making progress with packets still in flight."""
