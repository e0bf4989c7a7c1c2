"""Exception hierarchy shared by every module and mapped to CLI exit codes."""


class FairForestError(Exception):
    """Base class for all package errors."""


class UsageError(FairForestError):
    """Bad arguments or configuration (CLI exit code 2)."""


class SchemaError(FairForestError):
    """Schema sidecar is malformed or an attribute has the wrong kind."""


class DataError(FairForestError):
    """A data file could not be loaded or does not match its schema."""


class DomainError(FairForestError, ValueError):
    """A quantity is undefined for the given input (e.g. moments of no rows)."""


class MetricError(DomainError):
    """A fairness metric is undefined, e.g. one protected group is empty."""


class PredictionError(FairForestError):
    """A row cannot be routed through a model (unseen category, wrong schema)."""


class ModelFileError(FairForestError):
    """A model file is unreadable, of the wrong version or schema."""
