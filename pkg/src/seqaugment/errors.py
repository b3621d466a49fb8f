"""Exception hierarchy shared across the toolkit.

Exit-code mapping used by the CLI: config errors -> 2, data errors -> 3,
training divergence -> 4, missing upstream artifacts -> 5.
"""


class SeqAugmentError(Exception):
    """Base class for all toolkit errors."""


class ConfigInvalid(SeqAugmentError):
    """Configuration file or override is malformed or inconsistent."""


class DataError(SeqAugmentError):
    """Base class for problems with input data."""


class SchemaMismatch(DataError):
    """CSV header or schema file does not match the expected schema."""


class DomainViolation(DataError):
    """A cell value falls outside its variable's domain."""

    def __init__(self, message, patient_id=None, hour=None, variable=None):
        super().__init__(message)
        self.patient_id = patient_id
        self.hour = hour
        self.variable = variable


class RaggedSeries(DataError):
    """A patient does not contribute exactly one row per expected hour."""

    def __init__(self, message, patient_id=None):
        super().__init__(message)
        self.patient_id = patient_id


class ClassInversion(DataError):
    """Minority class outnumbers the majority class (labels likely swapped)."""


class PoolTooSmall(DataError):
    """Not enough samples to satisfy a k-nearest-neighbour request."""


class SingleClassConditional(DataError):
    """Conditional training requested on a cohort with only one class."""


class WindowTooLong(DataError):
    """Requested forecasting window does not fit in the series length."""


class TrainingError(SeqAugmentError):
    """Base class for failures inside a training loop."""


class Diverged(TrainingError):
    """A loss became non-finite during training."""


class MissingArtifact(SeqAugmentError):
    """A required upstream output file is absent."""

    def __init__(self, message, produced_by=None):
        super().__init__(message)
        self.produced_by = produced_by


class BackendUnavailable(SeqAugmentError):
    """An optional projection backend is not installed."""


class DegenerateVariable(UserWarning):
    """A numeric variable is constant over the fitting data; encoded as 0."""
