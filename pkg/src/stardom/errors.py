"""Exception hierarchy shared by all platform modules."""


class StardomError(Exception):
    """Base class for all platform errors."""


class UsageError(StardomError):
    """Caller violated an operation's contract (bad arguments, bad state)."""


class DataValidationError(StardomError):
    """A value fails domain validation (negative demand, rating out of range)."""


class IntegrityError(StardomError):
    """A store invariant would be broken (dangling reference, kind change)."""


class IngestionError(StardomError):
    """A tabular ingest cannot be applied (missing column, malformed row)."""


class HistoryError(StardomError):
    """Not enough series history for the requested operation."""


class NumericalError(StardomError):
    """A numerical solve failed (singular system, non-finite result)."""


class StateError(StardomError):
    """An illegal state transition was attempted."""


class NotExplainableError(StardomError):
    """The model family exposes no feature interface to explain."""


class DegenerateLocalityError(StardomError):
    """All perturbation samples received zero kernel weight."""


class EligibilityError(StardomError):
    """A scenario that does not meet the augmentation gate was passed explicitly."""


class DetectorUnavailableError(StardomError):
    """Detector statistics share no features with the instance under test."""


class ConfigError(StardomError):
    """Platform configuration is malformed or contains unknown keys."""


class StorageError(StardomError):
    """A durable write or read failed."""


class AuthorizationError(StardomError):
    """Request denied by the role matrix."""
