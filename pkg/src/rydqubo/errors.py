"""Shared exception types."""


class RydquboError(Exception):
    """Base class for every error raised by this package."""


class InputError(RydquboError):
    """Malformed, inconsistent, or out-of-range input data."""


class GraphError(InputError):
    """An atom graph violates one of its structural invariants."""


class CapExceeded(RydquboError):
    """A resource guard was hit (enumeration size, coefficient range, atom budget)."""


class SimulationError(RydquboError):
    """State-vector propagation failed an accuracy guard."""


class EmptySelection(RydquboError):
    """Post-selection removed every measurement outcome."""
