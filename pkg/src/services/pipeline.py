"""Trajectory extraction, augmentation, windowing and packing, plus abnormal generators."""

import enum
import logging
import math
from collections import defaultdict
from collections.abc import Iterable, Sequence
from dataclasses import replace

import numpy as np

from src.services.exceptions import (
    EmptyInput,
    EmptyTransformSet,
    InvalidAnnotation,
    InvalidConfiguration,
    NonMonotoneFrames,
    NotDecomposable,
    UnknownTransform,
)
from src.services.models import (
    POINT_FEATURES,
    WINDOW_LENGTH,
    WINDOW_STRIDE,
    AugmentConfig,
    BoundingBoxRecord,
    Corpus,
    ExtractionResult,
    ObjectClass,
    ObjectTrack,
    PackedSample,
    SceneBounds,
    SyntheticSceneConfig,
    TrajectoryWindow,
)
from src.services.seeding import derive_seed

logger: logging.Logger = logging.getLogger(name=__name__)

STRAIGHT_LINE = "straight_line"


class AbnormalTransform(str, enum.Enum):
    """Transforms turning a real track into a realistic abnormal one."""

    LABEL_SWAP = "label_swap"
    ROTATE = "rotate_about_scene_center"
    MIRROR = "mirror"
    TRANSLATE_OFFROAD = "translate_offroad"

    @classmethod
    def parse(cls, name: "str | AbnormalTransform") -> "AbnormalTransform":
        try:
            return cls(name)
        except ValueError as exc:
            raise UnknownTransform(name) from exc


class LineDirection(str, enum.Enum):
    """Headings drawn for straight-line abnormal tracks."""

    ANY = "any"
    DIAGONAL = "diagonal"

    @classmethod
    def parse(cls, name: "str | LineDirection") -> "LineDirection":
        try:
            return cls(name)
        except ValueError:
            raise InvalidConfiguration(f"unknown line direction '{name}'") from None


def finite_difference_velocities(
    positions: np.ndarray, frames: np.ndarray | None = None
) -> np.ndarray:
    """Backward differences per frame; the first point copies the second point's velocity."""
    steps = np.diff(positions, axis=0)
    if frames is not None:
        steps = steps / np.diff(np.asarray(frames, dtype=np.float64))[:, None]
    return np.vstack([steps[:1], steps])


def extract_tracks(records: Sequence[BoundingBoxRecord]) -> ExtractionResult:
    """Group boxes per object and turn box centers into (x, y, vx, vy) tracks."""
    if not records:
        raise EmptyInput("annotation records")

    grouped: dict[int, list[BoundingBoxRecord]] = defaultdict(list)
    for record in records:
        grouped[record.object_id].append(record)

    tracks: list[ObjectTrack] = []
    skipped: list[int] = []
    for object_id in sorted(grouped):
        boxes = grouped[object_id]
        frames = np.array([box.frame_index for box in boxes], dtype=np.int64)
        gaps = np.diff(frames)
        if np.any(gaps <= 0):
            bad = int(np.argmax(gaps <= 0)) + 1
            raise NonMonotoneFrames(object_id=object_id, frame_index=int(frames[bad]))

        if len(boxes) < 2:
            logger.warning("Skipping object %s: only one annotated frame", object_id)
            skipped.append(object_id)
            continue

        labels = {box.class_label for box in boxes}
        if len(labels) > 1:
            raise InvalidAnnotation(f"object {object_id} changes class between frames")

        centers = np.array([box.center for box in boxes], dtype=np.float64)
        velocities = finite_difference_velocities(centers, frames)
        tracks.append(
            ObjectTrack(
                object_id=object_id,
                class_label=boxes[0].class_label,
                points=np.hstack([centers, velocities]),
                frames=frames,
            )
        )

    logger.info("Extracted %s tracks, skipped %s objects", len(tracks), len(skipped))
    return ExtractionResult(tracks=tracks, skipped_object_ids=skipped)


def admissible_length(length: int, window: int = WINDOW_LENGTH, stride: int = WINDOW_STRIDE) -> int:
    """Smallest L' >= max(length, window) with (L' - window) divisible by stride."""
    _check_window(window, stride)
    base = max(length, window)
    return base + (-(base - window)) % stride


def stretch_track(
    track: ObjectTrack, window: int = WINDOW_LENGTH, stride: int = WINDOW_STRIDE
) -> ObjectTrack:
    """Resample a track by linear interpolation so that it decomposes exactly into windows."""
    length = len(track)
    target = admissible_length(length, window, stride)
    if target == length:
        return track

    source = np.arange(length, dtype=np.float64)
    resampled = np.linspace(0.0, length - 1.0, target)
    positions = np.column_stack(
        [np.interp(resampled, source, track.points[:, column]) for column in range(2)]
    )
    # Les vitesses restent exprimées par frame d'origine
    frame_axis = resampled if track.frames is None else np.interp(resampled, source, track.frames)
    velocities = finite_difference_velocities(positions, frame_axis)
    return ObjectTrack(
        object_id=track.object_id,
        class_label=track.class_label,
        points=np.hstack([positions, velocities]),
    )


def decompose(
    track: ObjectTrack, window: int = WINDOW_LENGTH, stride: int = WINDOW_STRIDE
) -> list[TrajectoryWindow]:
    """Cut a stretched track into windows starting every `stride` points."""
    _check_window(window, stride)
    length = len(track)
    if length < window or (length - window) % stride:
        raise NotDecomposable(length, window, stride)

    count = (length - window) // stride + 1
    return [
        TrajectoryWindow(track.class_label, track.points[start : start + window].copy())
        for start in range(0, count * stride, stride)
    ]


def augment_track(track: ObjectTrack, cfg: AugmentConfig) -> list[ObjectTrack]:
    """Jitter every position with Gaussian noise and recompute velocities."""
    if cfg.position_noise_sigma == 0:
        return [
            ObjectTrack(track.object_id, track.class_label, track.points.copy(), track.frames)
            for _ in range(cfg.count_per_track)
        ]

    rng = np.random.default_rng(cfg.rng_seed)
    augmented: list[ObjectTrack] = []
    for _ in range(cfg.count_per_track):
        noise = rng.normal(0.0, cfg.position_noise_sigma, size=track.positions.shape)
        positions = track.positions + noise
        velocities = finite_difference_velocities(positions, track.frames)
        augmented.append(
            ObjectTrack(
                object_id=track.object_id,
                class_label=track.class_label,
                points=np.hstack([positions, velocities]),
                frames=track.frames,
            )
        )
    return augmented


def pack(window: TrajectoryWindow) -> PackedSample:
    """Flatten a window into [label, x1, y1, vx1, vy1, ...]."""
    return PackedSample(np.concatenate([[float(window.class_label)], window.points.ravel()]))


def unpack(sample: PackedSample) -> TrajectoryWindow:
    """Inverse of pack."""
    label = sample.values[0]
    if label not in (0.0, 1.0, 2.0):
        raise InvalidConfiguration(f"packed label {label} is not a class value")
    return TrajectoryWindow(ObjectClass(int(label)), sample.values[1:].reshape(-1, POINT_FEATURES))


def track_samples(
    track: ObjectTrack, window: int = WINDOW_LENGTH, stride: int = WINDOW_STRIDE
) -> list[np.ndarray]:
    """Packed rows of every window of one track, stretching it first."""
    stretched = stretch_track(track, window, stride)
    return [pack(piece).values for piece in decompose(stretched, window, stride)]


def build_corpus_from_tracks(
    tracks: Sequence[ObjectTrack],
    cfg: AugmentConfig,
    window: int = WINDOW_LENGTH,
    stride: int = WINDOW_STRIDE,
) -> Corpus:
    """Windows of each original track followed by the windows of its augmented copies."""
    rows: list[np.ndarray] = []
    for position, track in enumerate(tracks):
        track_cfg = replace(cfg, rng_seed=derive_seed(cfg.rng_seed, position))
        for variant in [track, *augment_track(track, track_cfg)]:
            rows.extend(track_samples(variant, window, stride))

    logger.info("Built corpus of %s samples from %s tracks", len(rows), len(tracks))
    if not rows:
        return Corpus(np.empty((0, 1 + window * POINT_FEATURES)))
    return Corpus(np.vstack(rows))


def build_corpus(
    records: Sequence[BoundingBoxRecord],
    cfg: AugmentConfig,
    window: int = WINDOW_LENGTH,
    stride: int = WINDOW_STRIDE,
) -> Corpus:
    """Extract, augment, stretch, decompose and pack annotations into a corpus."""
    extraction = extract_tracks(records)
    return build_corpus_from_tracks(extraction.tracks, cfg, window, stride)


def gen_straight_abnormal(
    scene_bounds: SceneBounds,
    count: int,
    speed_range: tuple[float, float],
    rng_seed: int,
    window: int = WINDOW_LENGTH,
    direction: "str | LineDirection" = LineDirection.ANY,
) -> Corpus:
    """Constant-velocity straight lines starting anywhere in the scene.

    `LineDirection.DIAGONAL` draws one of the four 45 degree headings, so both
    velocity components have the same magnitude.
    """
    direction = LineDirection.parse(direction)
    low, high = speed_range
    if count < 0:
        raise InvalidConfiguration("count must be >= 0")
    if not 0.0 <= low <= high:
        raise InvalidConfiguration(f"invalid speed range {speed_range}")

    rng = np.random.default_rng(rng_seed)
    steps = np.arange(window, dtype=np.float64)[:, None]
    rows: list[np.ndarray] = []
    for _ in range(count):
        start = rng.uniform(
            [scene_bounds.x_min, scene_bounds.y_min], [scene_bounds.x_max, scene_bounds.y_max]
        )
        if direction is LineDirection.DIAGONAL:
            angle = math.pi / 4.0 + math.pi / 2.0 * int(rng.integers(4))
        else:
            angle = rng.uniform(0.0, 2.0 * math.pi)
        speed = rng.uniform(low, high)
        velocity = speed * np.array([math.cos(angle), math.sin(angle)])
        label = ObjectClass(int(rng.integers(len(ObjectClass))))
        points = np.hstack([start + steps * velocity, np.tile(velocity, (window, 1))])
        rows.append(pack(TrajectoryWindow(label, points)).values)

    if not rows:
        return Corpus(np.empty((0, 1 + window * POINT_FEATURES)), ())
    return Corpus(np.vstack(rows), (STRAIGHT_LINE,) * count)


def apply_transform(
    track: ObjectTrack,
    transform: AbnormalTransform,
    scene: SceneBounds,
    rng: np.random.Generator,
    rotation_degrees: float = 90.0,
    offroad_offset: tuple[float, float] = (0.0, 0.0),
) -> ObjectTrack:
    """Derive an abnormal track from a real one, keeping its point-to-point fluctuation."""
    positions = track.positions.copy()
    velocities = track.velocities.copy()
    label = track.class_label

    match AbnormalTransform.parse(transform):
        case AbnormalTransform.LABEL_SWAP:
            others = [candidate for candidate in ObjectClass if candidate != label]
            label = others[int(rng.integers(len(others)))]
        case AbnormalTransform.ROTATE:
            theta = math.radians(rotation_degrees)
            rotation = np.array(
                [[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]]
            )
            center = np.array(scene.center)
            positions = (positions - center) @ rotation.T + center
            velocities = velocities @ rotation.T
        case AbnormalTransform.MIRROR:
            center_x = scene.center[0]
            positions[:, 0] = 2.0 * center_x - positions[:, 0]
            velocities[:, 0] = -velocities[:, 0]
        case AbnormalTransform.TRANSLATE_OFFROAD:
            positions = positions + np.asarray(offroad_offset, dtype=np.float64)

    return ObjectTrack(
        object_id=track.object_id,
        class_label=label,
        points=np.hstack([positions, velocities]),
        frames=track.frames,
    )


def gen_realistic_abnormal(
    tracks: Sequence[ObjectTrack],
    transforms: Iterable[str | AbnormalTransform],
    rng_seed: int,
    count: int | None = None,
    scene: SceneBounds | None = None,
    rotation_degrees: float = 90.0,
    offroad_offset: tuple[float, float] | None = None,
    window: int = WINDOW_LENGTH,
    stride: int = WINDOW_STRIDE,
) -> Corpus:
    """One window per sampled (track, transform) pair; `count` defaults to one per track."""
    chosen = [AbnormalTransform.parse(name) for name in transforms]
    if not chosen:
        raise EmptyTransformSet()
    if not tracks:
        raise EmptyInput("track list")

    scene = scene or SceneBounds.enclosing(list(tracks))
    if offroad_offset is None:
        offroad_offset = (scene.width / 2.0, scene.height / 2.0)
    total = len(tracks) if count is None else count
    if total < 0:
        raise InvalidConfiguration("count must be >= 0")

    rng = np.random.default_rng(rng_seed)
    rows: list[np.ndarray] = []
    provenance: list[str] = []
    for _ in range(total):
        track = tracks[int(rng.integers(len(tracks)))]
        transform = chosen[int(rng.integers(len(chosen)))]
        transformed = apply_transform(
            track, transform, scene, rng, rotation_degrees, offroad_offset
        )
        candidates = track_samples(transformed, window, stride)
        rows.append(candidates[int(rng.integers(len(candidates)))])
        provenance.append(transform.value)

    logger.info("Generated %s realistic abnormal samples", len(rows))
    if not rows:
        return Corpus(np.empty((0, 1 + window * POINT_FEATURES)), ())
    return Corpus(np.vstack(rows), tuple(provenance))


def gen_synthetic_scene(cfg: SyntheticSceneConfig, rng_seed: int) -> list[BoundingBoxRecord]:
    """Annotation records of jittered cars and pedestrians crossing the scene center."""
    rng = np.random.default_rng(rng_seed)
    flows = [(ObjectClass.CAR, cfg.car_count), (ObjectClass.PEDESTRIAN, cfg.pedestrian_count)]
    records: list[BoundingBoxRecord] = []
    object_id = 0
    for class_label, object_count in flows:
        horizontal = class_label is ObjectClass.CAR
        extent = cfg.width if horizontal else cfg.height
        base_speed = cfg.car_speed if horizontal else cfg.pedestrian_speed
        box_width, box_height = cfg.car_box if horizontal else cfg.pedestrian_box
        for _ in range(object_count):
            object_id += 1
            speed = base_speed * rng.uniform(0.85, 1.15)
            direction = 1.0 if rng.random() < 0.5 else -1.0
            frame_count = int(extent / speed) + 1
            first_frame = int(rng.integers(0, 200))
            along = np.arange(frame_count) * speed
            along = along if direction > 0 else extent - along
            lane = (cfg.height if horizontal else cfg.width) / 2.0 + rng.uniform(
                -cfg.corridor_half_width, cfg.corridor_half_width
            )
            across = np.full(frame_count, lane)
            centers = np.column_stack([along, across] if horizontal else [across, along])
            centers = centers + rng.normal(0.0, cfg.jitter_sigma, size=centers.shape)
            for step, (x, y) in enumerate(centers):
                records.append(
                    BoundingBoxRecord(
                        frame_index=first_frame + step,
                        object_id=object_id,
                        class_label=class_label,
                        x_min=float(x - box_width / 2.0),
                        y_min=float(y - box_height / 2.0),
                        x_max=float(x + box_width / 2.0),
                        y_max=float(y + box_height / 2.0),
                    )
                )

    records.sort(key=lambda record: (record.frame_index, record.object_id))
    logger.info("Synthesized %s boxes for %s objects", len(records), object_id)
    return records


def _check_window(window: int, stride: int) -> None:
    if window < 1 or stride < 1:
        raise InvalidConfiguration(f"window ({window}) and stride ({stride}) must be >= 1")
