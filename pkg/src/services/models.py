"""Data models for trajectory extraction, packing and training configuration."""

import enum
import math
from collections import Counter
from collections.abc import Iterator
from dataclasses import dataclass, field

import numpy as np

from src.services.exceptions import (
    EmptyInput,
    InvalidAnnotation,
    InvalidConfiguration,
    TrackTooShort,
)

WINDOW_LENGTH = 31
WINDOW_STRIDE = 10
POINT_FEATURES = 4  # x, y, vx, vy
PACKED_LENGTH = 1 + WINDOW_LENGTH * POINT_FEATURES


class ObjectClass(enum.IntEnum):
    """Road user classes, valued as in the packed label column."""

    PEDESTRIAN = 0
    CAR = 1
    BIKE = 2


class Decision(enum.Enum):
    """Classification outcome for one sample."""

    NORMAL = "normal"
    ABNORMAL = "abnormal"


@dataclass(frozen=True)
class BoundingBoxRecord:
    """One annotated bounding box of one object in one frame."""

    frame_index: int
    object_id: int
    class_label: ObjectClass
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self) -> None:
        if self.frame_index < 0:
            raise InvalidAnnotation(f"negative frame index {self.frame_index}")
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise InvalidAnnotation(
                f"inverted box ({self.x_min}, {self.y_min}, {self.x_max}, {self.y_max})"
            )
        coords = (self.x_min, self.y_min, self.x_max, self.y_max)
        if not all(math.isfinite(value) for value in coords):
            raise InvalidAnnotation("non-finite box coordinate")

    @property
    def center(self) -> tuple[float, float]:
        """Center of the box in pixels."""
        return (self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0


@dataclass
class ObjectTrack:
    """Full path of one road user: rows of (x, y, vx, vy) ordered by frame."""

    object_id: int
    class_label: ObjectClass
    points: np.ndarray
    frames: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[1] != POINT_FEATURES:
            raise InvalidConfiguration(
                f"track points must have shape (n, {POINT_FEATURES}), got {self.points.shape}"
            )
        if len(self.points) < 2:
            raise TrackTooShort(length=len(self.points), required=2)
        if not np.all(np.isfinite(self.points)):
            raise InvalidConfiguration(f"track {self.object_id} has non-finite points")
        self.class_label = ObjectClass(self.class_label)
        if self.frames is not None:
            self.frames = np.asarray(self.frames, dtype=np.int64)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def positions(self) -> np.ndarray:
        """View on the (x, y) columns."""
        return self.points[:, :2]

    @property
    def velocities(self) -> np.ndarray:
        """View on the (vx, vy) columns."""
        return self.points[:, 2:]


@dataclass
class TrajectoryWindow:
    """Contiguous slice of a track, 31 points with the default window."""

    class_label: ObjectClass
    points: np.ndarray

    def __post_init__(self) -> None:
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[1] != POINT_FEATURES or not len(self.points):
            raise InvalidConfiguration(f"invalid window shape {self.points.shape}")
        self.class_label = ObjectClass(self.class_label)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TrajectoryWindow):
            return NotImplemented
        return self.class_label == other.class_label and np.array_equal(
            self.points, other.points
        )


@dataclass
class PackedSample:
    """Flat record [label, x1, y1, vx1, vy1, ..., xn, yn, vxn, vyn]."""

    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1 or (len(self.values) - 1) % POINT_FEATURES or len(self.values) < 5:
            raise InvalidConfiguration(f"invalid packed sample length {self.values.shape}")

    def __len__(self) -> int:
        return len(self.values)

    @property
    def label(self) -> float:
        return float(self.values[0])


@dataclass
class Corpus:
    """A matrix of packed samples, optionally tagged with where each one came from."""

    matrix: np.ndarray
    provenance: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        if self.matrix.ndim == 1 and self.matrix.size == 0:
            self.matrix = self.matrix.reshape(0, PACKED_LENGTH)
        if self.matrix.ndim != 2:
            raise InvalidConfiguration(f"corpus must be 2-D, got shape {self.matrix.shape}")
        if self.provenance is not None:
            self.provenance = tuple(self.provenance)
            if len(self.provenance) != len(self.matrix):
                raise InvalidConfiguration("provenance length differs from sample count")

    @classmethod
    def from_samples(
        cls, samples: list[PackedSample], provenance: list[str] | None = None
    ) -> "Corpus":
        """Stack packed samples into a corpus."""
        if not samples:
            return cls(np.empty((0, PACKED_LENGTH)), tuple(provenance) if provenance else None)
        return cls(np.vstack([sample.values for sample in samples]), provenance)

    def __len__(self) -> int:
        return len(self.matrix)

    def __iter__(self) -> Iterator[PackedSample]:
        for row in self.matrix:
            yield PackedSample(row.copy())

    @property
    def width(self) -> int:
        return self.matrix.shape[1]

    def class_counts(self) -> dict[str, int]:
        """Number of samples per road user class name."""
        counts = Counter(int(label) for label in self.matrix[:, 0]) if len(self) else Counter()
        return {ObjectClass(key).name.lower(): counts[key] for key in sorted(counts)}

    def concat(self, other: "Corpus") -> "Corpus":
        """Corpus with the samples of both, in order."""
        provenance = None
        if self.provenance is not None and other.provenance is not None:
            provenance = self.provenance + other.provenance
        return Corpus(np.vstack([self.matrix, other.matrix]), provenance)


@dataclass
class ExtractionResult:
    """Tracks extracted from annotations plus objects that had to be skipped."""

    tracks: list[ObjectTrack]
    skipped_object_ids: list[int] = field(default_factory=list)

    @property
    def skipped_count(self) -> int:
        return len(self.skipped_object_ids)

    def class_counts(self) -> dict[str, int]:
        counts = Counter(track.class_label for track in self.tracks)
        return {label.name.lower(): counts[label] for label in sorted(counts)}


@dataclass(frozen=True)
class SceneBounds:
    """Rectangular extent of a scene in pixels."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self) -> None:
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise InvalidConfiguration(f"invalid scene bounds {self}")

    @property
    def center(self) -> tuple[float, float]:
        return (self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @classmethod
    def enclosing(cls, tracks: list[ObjectTrack]) -> "SceneBounds":
        """Smallest bounds containing every position of the tracks."""
        if not tracks:
            raise EmptyInput("track list")
        positions = np.vstack([track.positions for track in tracks])
        low, high = positions.min(axis=0), positions.max(axis=0)
        # Scène dégénérée (une seule position) : on élargit d'un pixel
        high = np.where(high > low, high, low + 1.0)
        return cls(float(low[0]), float(low[1]), float(high[0]), float(high[1]))


@dataclass(frozen=True)
class AugmentConfig:
    """Jitter augmentation of real tracks."""

    count_per_track: int = 50
    position_noise_sigma: float = 2.0
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.count_per_track < 0:
            raise InvalidConfiguration("count_per_track must be >= 0")
        if self.position_noise_sigma < 0:
            raise InvalidConfiguration("position_noise_sigma must be >= 0")


@dataclass(frozen=True)
class TrainConfig:
    """Mini-batch RMSProp training hyper-parameters."""

    batch_size: int = 128
    epochs: int = 100
    learning_rate: float = 0.001
    rmsprop_decay: float = 0.9
    rmsprop_epsilon: float = 1e-8
    cv_fraction: float = 0.1
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise InvalidConfiguration("batch_size must be >= 1")
        if self.epochs < 1:
            raise InvalidConfiguration("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise InvalidConfiguration("learning_rate must be > 0")
        if not 0.0 < self.cv_fraction < 1.0:
            raise InvalidConfiguration("cv_fraction must be in (0, 1)")
        if not 0.0 <= self.rmsprop_decay < 1.0:
            raise InvalidConfiguration("rmsprop_decay must be in [0, 1)")
        if self.rmsprop_epsilon <= 0:
            raise InvalidConfiguration("rmsprop_epsilon must be > 0")


@dataclass(frozen=True)
class ForestConfig:
    """Isolation forest hyper-parameters."""

    tree_count: int = 100
    subsample_size: int = 256
    contamination: float = 0.1

    def __post_init__(self) -> None:
        if self.tree_count < 1:
            raise InvalidConfiguration("tree_count must be >= 1")
        if self.subsample_size < 2:
            raise InvalidConfiguration("subsample_size must be >= 2")
        if not 0.0 < self.contamination < 0.5:
            raise InvalidConfiguration("contamination must be in (0, 0.5)")


@dataclass(frozen=True)
class SyntheticSceneConfig:
    """Two crossing flows: cars on a horizontal corridor, pedestrians on a vertical one."""

    width: float = 640.0
    height: float = 480.0
    car_count: int = 15
    pedestrian_count: int = 5
    car_speed: float = 8.0
    pedestrian_speed: float = 2.0
    corridor_half_width: float = 20.0
    jitter_sigma: float = 0.3
    car_box: tuple[float, float] = (40.0, 20.0)
    pedestrian_box: tuple[float, float] = (10.0, 25.0)

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise InvalidConfiguration("scene width and height must be > 0")
        if self.car_count < 0 or self.pedestrian_count < 0:
            raise InvalidConfiguration("object counts must be >= 0")
        if self.car_speed <= 0 or self.pedestrian_speed <= 0:
            raise InvalidConfiguration("speeds must be > 0")
        if self.jitter_sigma < 0 or self.corridor_half_width < 0:
            raise InvalidConfiguration("jitter and corridor width must be >= 0")

    @property
    def bounds(self) -> SceneBounds:
        return SceneBounds(0.0, 0.0, self.width, self.height)
