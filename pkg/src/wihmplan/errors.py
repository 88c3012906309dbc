"""Exception hierarchy shared by all wihmplan modules."""


class WihmplanError(Exception):
    """Base class for all errors raised by this package."""


class InvalidGeometryError(WihmplanError):
    """A polygon or transform violates its geometric invariants."""


class UngraspableObjectError(WihmplanError):
    """The object has no parallel lateral face pair to grip."""


class InvalidModelError(WihmplanError):
    """An object model is inconsistent (e.g. disconnected adjacency)."""


class InvalidStateError(WihmplanError):
    """A grasp state violates its invariants."""


class InvalidStartError(WihmplanError):
    """The planner start state is infeasible."""


class InvalidInputError(WihmplanError):
    """A user-supplied input (goal set, config, file) is unusable."""


class InfeasibleActionError(WihmplanError):
    """An action was applied to a state where its preconditions fail."""


class CorruptedPlanError(WihmplanError):
    """Replaying a plan did not reproduce its recorded states."""
