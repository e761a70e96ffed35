"""Custom exceptions for the trajectory normality toolkit."""


class TrajnormError(Exception):
    """Base class for all toolkit exceptions."""


class InvalidConfiguration(TrajnormError):
    """Raised when a run configuration or a parameter object is invalid."""

    def __init__(self, message="Invalid configuration"):
        super().__init__(message)


class InvalidAnnotation(TrajnormError):
    """Raised when an annotation record or annotation file line is invalid."""

    def __init__(self, message="Invalid annotation", line_number=None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class EmptyInput(TrajnormError):
    """Raised when an operation receives an empty collection it cannot work with."""

    def __init__(self, what="input"):
        self.what = what
        super().__init__(f"Empty {what}")


class NonMonotoneFrames(TrajnormError):
    """Raised when the frames of one object are not strictly increasing."""

    def __init__(self, object_id=None, frame_index=None):
        self.object_id = object_id
        self.frame_index = frame_index
        message = "Frame indices must be strictly increasing"
        if object_id is not None:
            message = f"Object {object_id}: frame {frame_index} breaks strictly increasing order"
        super().__init__(message)


class TrackTooShort(TrajnormError):
    """Raised when a track has fewer points than an operation needs."""

    def __init__(self, length=None, required=2):
        self.length = length
        self.required = required
        super().__init__(f"Track has {length} points, at least {required} required")


class NotDecomposable(TrajnormError):
    """Raised when a track length does not fit the window/stride scheme."""

    def __init__(self, length, window, stride):
        self.length = length
        super().__init__(
            f"Track of length {length} is not decomposable with window {window} and "
            f"stride {stride}; stretch it first"
        )


class EmptyTransformSet(TrajnormError):
    """Raised when realistic abnormal generation gets no transform."""

    def __init__(self, message="At least one abnormal transform is required"):
        super().__init__(message)


class UnknownTransform(TrajnormError):
    """Raised when an abnormal transform name is not recognised."""

    def __init__(self, name):
        self.name = name
        super().__init__(f"Unknown abnormal transform '{name}'")


class DimensionMismatch(TrajnormError):
    """Raised when array widths do not match what a model or scaler expects."""

    def __init__(self, expected, actual, what="feature count"):
        self.expected = expected
        self.actual = actual
        super().__init__(f"{what} mismatch: expected {expected}, got {actual}")


class TrainingDiverged(TrajnormError):
    """Raised when the training loss stops being finite."""

    def __init__(self, epoch, train_loss, cv_loss):
        self.epoch = epoch
        super().__init__(
            f"Training diverged at epoch {epoch}: train loss {train_loss}, cv loss {cv_loss}"
        )


class InsufficientSamples(TrajnormError):
    """Raised when a corpus is too small for training."""

    def __init__(self, count, required):
        self.count = count
        self.required = required
        super().__init__(f"{count} samples given, at least {required} required")


class NoSplittableFeature(TrajnormError):
    """Raised when isolation trees cannot split because every feature is constant."""

    def __init__(self, message="All features are constant, no split is possible"):
        super().__init__(message)


class ModelFormatError(TrajnormError):
    """Raised when a model file is corrupt or truncated."""

    def __init__(self, message="Corrupt model file", line_number=None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class ModelVersionMismatch(ModelFormatError):
    """Raised when a model file has an unsupported magic or version."""

    def __init__(self, found):
        self.found = found
        super().__init__(f"Unsupported model header '{found}'", line_number=1)


class CorpusFormatError(TrajnormError):
    """Raised when a corpus file does not have the packed-sample layout."""

    def __init__(self, message="Invalid corpus file"):
        super().__init__(message)
