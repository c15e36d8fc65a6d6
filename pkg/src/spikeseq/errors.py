"""Exception hierarchy shared by every module."""


class SpikeseqError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SpikeseqError, ValueError):
    """Inconsistent parameters or mismatched shapes (CLI exit code 2)."""


class DomainError(SpikeseqError, ValueError):
    """An argument lies outside the domain of an operation."""


class NumericOverflowError(SpikeseqError, ArithmeticError):
    def __init__(self, neuron, timestep):
        super().__init__(f"non-finite state in neuron {neuron} at timestep {timestep}")
        self.neuron = neuron
        self.timestep = timestep


class TrainingError(SpikeseqError):
    """A layer failed to train (CLI exit code 1)."""

    def __init__(self, message, layer=None, residuals=None):
        super().__init__(message)
        self.layer = layer
        self.residuals = residuals if residuals is not None else {}


class IngestionError(SpikeseqError):
    """A dataset container is malformed."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
