"""
Exception hierarchy for outfitgen

Every error raised on purpose by the package derives from OutfitGenError so the
CLI and the API can map it to an exit code or HTTP status.
"""
from typing import Any, Dict, Optional


class OutfitGenError(Exception):
    """Base class for all package errors"""


class ConfigurationError(OutfitGenError):
    """Invalid hyperparameters, shapes, splits or vocabularies"""


class InputError(OutfitGenError):
    """Invalid input values (targets, attribute codes, sequences)"""


class UsageError(OutfitGenError):
    """An API was called in the wrong order or on the wrong object"""


class DataError(OutfitGenError):
    """Dataset files that do not match the expected schema"""


class GenerationError(OutfitGenError):
    """Generation could not produce a candidate"""


class RankingError(OutfitGenError):
    """Ranking could not be computed"""


class AnchorNotFoundError(OutfitGenError, LookupError):
    """Anchor item missing from a candidate index"""


class MetricError(OutfitGenError):
    """A metric was requested on too little data"""


class ComparisonError(OutfitGenError):
    """Reports that cannot be compared with each other"""


class CheckpointError(OutfitGenError):
    """Unreadable, incompatible or locked checkpoints"""


class TrainingDivergedError(OutfitGenError):
    """Training produced a non-finite loss"""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3


def exit_code_for(error: BaseException) -> int:
    """Map an exception to the CLI exit code"""
    if isinstance(error, (ConfigurationError, UsageError)):
        return EXIT_USAGE
    if isinstance(error, (DataError, InputError, AnchorNotFoundError)):
        return EXIT_DATA
    return EXIT_RUNTIME
