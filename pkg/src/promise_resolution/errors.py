"""Exception hierarchy shared by all modules."""


class PresError(Exception):
    """Base class for every error raised by the package."""


class ParseError(PresError, ValueError):
    """Malformed DIMACS / PRES / CIRC / FAM input."""


class GuardExceeded(PresError):
    """An exhaustive oracle was asked to enumerate beyond the configured guard."""


class PartialAssignment(PresError, ValueError):
    pass


class ResolutionError(PresError, ValueError):
    """Illegal application of the resolution rule."""


class SatisfiableInput(PresError):
    """A refuter was handed a satisfiable formula.

    ``model_count`` is filled in when it is known.
    """

    def __init__(self, message: str, model_count: int | None = None):
        super().__init__(message)
        self.model_count = model_count


class CircuitError(PresError, ValueError):
    pass


class ArityError(PresError, ValueError):
    """Circuit or promise parameters do not have the required number of bits."""


class StructureError(PresError, ValueError):
    """A CNF does not decode to a well-formed promise axiom."""


class InfeasibleConstruction(PresError):
    """The requested construction exceeds what can be built at desk scale."""
