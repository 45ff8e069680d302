"""
Error types raised across the recurrence lab
"""


class RecurrenceLabError(ValueError):
    """Base class for every error raised by this package"""


class InvalidSpec(RecurrenceLabError):
    def __init__(self, field, message):
        self.field = field
        self.message = message
        super().__init__(f"{field}: {message}")

    def __reduce__(self):
        # Survives the trip back from worker processes
        return type(self), (self.field, self.message)


class DegenerateState(RecurrenceLabError):
    """Orbit reached a point where the map is undefined (Gauss map at 0)"""


class IncompatibleTarget(RecurrenceLabError):
    """Interval target on a symbolic system, or a word on an interval map"""


class ZeroMeasure(RecurrenceLabError):
    """Target set carries no mass under the invariant measure"""


class BlockCapExceeded(RecurrenceLabError):
    """No return to the inducing set within the per-block step cap"""


class NotASubset(RecurrenceLabError):
    """Target of an induced-system trial is not contained in the inducing set"""


class GridMismatch(RecurrenceLabError):
    pass


class GridBeyondHorizon(RecurrenceLabError):
    pass


class UnknownCheck(RecurrenceLabError):
    pass


class ConfigError(RecurrenceLabError):
    pass


class DecompositionMismatch(RecurrenceLabError):
    """Induced block sum disagrees with the full-orbit entry time"""
