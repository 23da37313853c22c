"""Exception types raised across the simulator."""


class MecsfcError(Exception):
    pass


class ConfigurationError(MecsfcError, ValueError):
    pass


class RoutingError(MecsfcError):
    pass


class UsageError(MecsfcError, RuntimeError):
    """API misuse: wrong call order, double release, dimension mismatch."""


class ConstraintViolation(MecsfcError, ValueError):
    """A hard model constraint (C1..C7) is violated where it cannot be flagged."""

    def __init__(self, constraint, message):
        super().__init__(f"{constraint}: {message}")
        self.constraint = constraint


class InfeasibleReservation(ConstraintViolation):
    pass
