"""Exception to exit status mapping for the command-line interface."""

import logging
import sys

from src.services.exceptions import (
    CorpusFormatError,
    DimensionMismatch,
    EmptyInput,
    EmptyTransformSet,
    InsufficientSamples,
    InvalidAnnotation,
    InvalidConfiguration,
    ModelFormatError,
    NoSplittableFeature,
    NonMonotoneFrames,
    TrainingDiverged,
    TrajnormError,
    UnknownTransform,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_INPUT = 3
EXIT_MODEL_FILE = 4
EXIT_TRAINING = 5

EXIT_CODES: list[tuple[type[TrajnormError], int]] = [
    (InvalidConfiguration, EXIT_CONFIG),
    (UnknownTransform, EXIT_CONFIG),
    (EmptyTransformSet, EXIT_CONFIG),
    (InvalidAnnotation, EXIT_INPUT),
    (NonMonotoneFrames, EXIT_INPUT),
    (EmptyInput, EXIT_INPUT),
    (CorpusFormatError, EXIT_INPUT),
    (DimensionMismatch, EXIT_INPUT),
    (ModelFormatError, EXIT_MODEL_FILE),
    (TrainingDiverged, EXIT_TRAINING),
    (InsufficientSamples, EXIT_TRAINING),
    (NoSplittableFeature, EXIT_TRAINING),
]


def exit_code_for(error: TrajnormError) -> int:
    for family, code in EXIT_CODES:
        if isinstance(error, family):
            return code
    return EXIT_FAILURE


def handle_error(error: TrajnormError) -> int:
    """Report a domain error on stderr and return its exit status."""
    code = exit_code_for(error)
    logger.debug("Command failed", exc_info=error)
    print(f"error: {error}", file=sys.stderr)
    return code
