"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: input problems (2), resource guards (3).
A failed mathematical check is not an exception; it is reported and maps to 1.
"""


class BDGraphError(Exception):
    """Base class for all library errors."""


class GraphStructureError(BDGraphError, ValueError):
    """Malformed graph input (unknown endpoint, duplicate id, bad identifier)."""


class AdmissibilityError(BDGraphError, ValueError):
    """Graph has sinks or sources where an admissible graph is required."""


class LevelError(BDGraphError, ValueError):
    """A divisibility sequence prefix is too short and extension is disabled."""


class DomainError(BDGraphError, ValueError):
    """An odometer map or shift was applied outside its domain."""


class GuardError(BDGraphError, RuntimeError):
    """A configurable size guard was exceeded."""

    def __init__(self, what, size, bound):
        super().__init__(f"{what}: size {size} exceeds guard {bound}")
        self.what = what
        self.size = size
        self.bound = bound


class ConsistencyError(BDGraphError, RuntimeError):
    """An internal identity failed; this signals a bug, not bad input."""


class InputError(BDGraphError, ValueError):
    """Missing or malformed user data (weights, sequences, files)."""


class PreconditionError(BDGraphError, ValueError):
    """An operation was called on data that violates its stated precondition."""
