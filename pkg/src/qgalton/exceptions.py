class GaltonError(Exception):
    """Base class for errors raised by qgalton."""


class InfeasibleTargetError(GaltonError, ValueError):
    """The requested variance is below what the qubit-scaling cascade produces.

    ``minimal_variance`` holds the smallest grid-unit variance reachable with
    the given qubit counts (all iteration counts set to zero).
    """

    def __init__(self, message, minimal_variance):
        super().__init__(message)
        self.minimal_variance = minimal_variance


class CapacityError(GaltonError, ValueError):
    """A simulation would need more qubits than the configured cap."""


class ProjectionError(GaltonError, ValueError):
    """Projection onto a measurement outcome with zero probability."""
