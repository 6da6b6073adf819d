"""Exception hierarchy shared by every module."""


class GSLError(ValueError):
    """Base class for all library errors."""


class AllZeroError(GSLError):
    """Every weight vanished; the evidence is contradictory."""


class InvalidWeightError(GSLError):
    """A weight was negative, NaN or infinite."""


class OutOfBoundsError(GSLError, IndexError):
    """An index (cell, voxel, class, gas) is outside its enumeration."""


class DomainMismatchError(GSLError):
    """Two distributions or a distribution and a grid disagree on their domain."""


class UnknownRoomError(GSLError):
    """A room id has no entry in the ontology's room table."""


class OntologyError(GSLError):
    """An ontology document failed validation."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid ontology: " + "; ".join(self.violations))


class ScenarioError(GSLError):
    """A scenario document is malformed or violates its invariants."""


class TooLargeError(GSLError):
    """Brute-force enumeration would exceed the configured size bound."""


class EmptyCandidatesError(GSLError):
    """The planner was given no candidate poses."""


class ConfigError(GSLError):
    """An experiment configuration names a missing file or an invalid option."""


class InvariantError(GSLError):
    """A finished run violated a metric invariant (negative or non-finite error)."""
