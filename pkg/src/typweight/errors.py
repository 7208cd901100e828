"""Exception types shared across the package."""


class TypweightError(Exception):
    """Base class for all package errors."""


class DataFormatError(TypweightError, ValueError):
    """Malformed or inconsistent dataset file (names the offending row)."""


class LabelRangeError(DataFormatError):
    """A class label falls outside [0, num_classes)."""


class ParameterError(TypweightError, ValueError):
    """A parameter violates its documented constraints."""


class InsufficientDataError(TypweightError, ValueError):
    """Too few samples for the requested operation."""


class FlatScoresError(TypweightError):
    """All decision scores identical; no monotone calibration exists.

    Callers should fall back to a uniform probability of 0.5.
    """


class ConfigError(TypweightError, ValueError):
    """An experiment or weighting configuration is incomplete or contradictory."""


class GenerationError(TypweightError, RuntimeError):
    """Synthetic data generation could not satisfy its constraints."""


class TrainingDivergedError(TypweightError, RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int, batch_index: int, message: str = ""):
        self.epoch = epoch
        self.batch_index = batch_index
        detail = message or "non-finite loss"
        super().__init__(f"training diverged at epoch {epoch}, batch {batch_index}: {detail}")
