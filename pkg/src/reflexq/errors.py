"""Exception types shared across the package."""


class ReflexQError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(ReflexQError):
    """A physical or algorithmic parameter is out of its valid domain."""


class SimulationDivergedError(ReflexQError):
    """The simulated state became non-finite."""

    def __init__(self, message, step_index=None):
        if step_index is not None:
            message = f"{message} (step {step_index})"
        super().__init__(message)
        self.step_index = step_index


class RecordFormatError(ReflexQError):
    """A ground-motion record file could not be parsed."""


class DegeneratePeaksError(ReflexQError):
    """Uncontrolled peak responses are all zero; rewards would divide by zero."""


class ProbeFailedError(ReflexQError):
    """The impulse probe never decayed to the filter cutoff."""


class FilterBuildError(ReflexQError):
    """A reward response filter could not be built from the probe response."""


class TrainingDivergedError(ReflexQError):
    """A gradient or parameter became non-finite during training."""


class IncompatibleRunsError(ReflexQError):
    """Run artifacts cannot be aggregated into one report."""
