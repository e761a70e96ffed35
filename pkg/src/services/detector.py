"""Reconstruction-error detector: scaling, scoring, threshold learning and classification."""

import enum
import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np
from sklearn.model_selection import train_test_split
from sklearn.preprocessing import MinMaxScaler

from src.services.exceptions import (
    DimensionMismatch,
    EmptyInput,
    InsufficientSamples,
    InvalidConfiguration,
)
from src.services.models import Corpus, Decision, PackedSample, TrainConfig
from src.services.neural import (
    DAE_ENCODER_WIDTHS,
    Network,
    TrainHistory,
    build_dae,
    fit,
    reconstruction_errors,
)

logger: logging.Logger = logging.getLogger(name=__name__)

MIN_TRAINING_SAMPLES = 10

NetworkFactory = Callable[[int, int], Network]


class ScoreRole(str, enum.Enum):
    TRAIN = "train"
    VALIDATION = "validation"
    TEST = "test"


class FeatureScaler:
    """Per-feature min-max scaling to [0, 1], clamping values outside the fitted range.

    Constant features get max := min + 1 so they scale to 0 instead of dividing by zero.
    """

    def __init__(self, data_min: np.ndarray, data_max: np.ndarray) -> None:
        data_min = np.asarray(data_min, dtype=np.float64)
        data_max = np.asarray(data_max, dtype=np.float64)
        if data_min.ndim != 1 or data_min.shape != data_max.shape:
            raise InvalidConfiguration("scaler min and max must be 1-D of equal length")
        if np.any(data_min > data_max):
            raise InvalidConfiguration("scaler min exceeds max")
        self.data_min = data_min
        self.data_max = np.where(data_max > data_min, data_max, data_min + 1.0)
        # Refitting sklearn on the two bound rows reproduces identical scale factors
        self._scaler = MinMaxScaler(feature_range=(0.0, 1.0), clip=True)
        self._scaler.fit(np.vstack([self.data_min, self.data_max]))

    @property
    def n_features(self) -> int:
        return len(self.data_min)

    def _check(self, samples: np.ndarray) -> np.ndarray:
        samples = np.asarray(samples, dtype=np.float64)
        if samples.ndim == 1:
            samples = samples[None, :]
        if samples.shape[1] != self.n_features:
            raise DimensionMismatch(self.n_features, samples.shape[1])
        return samples

    def transform(self, samples: np.ndarray) -> np.ndarray:
        samples = self._check(samples)
        if not len(samples):
            return samples.copy()
        return self._scaler.transform(samples)

    def inverse_transform(self, samples: np.ndarray) -> np.ndarray:
        samples = self._check(samples)
        if not len(samples):
            return samples.copy()
        return self._scaler.inverse_transform(samples)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FeatureScaler):
            return NotImplemented
        return np.array_equal(self.data_min, other.data_min) and np.array_equal(
            self.data_max, other.data_max
        )


def fit_scaler(samples: np.ndarray) -> FeatureScaler:
    """Fit per-feature bounds on the given samples only."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2 or not len(samples):
        raise EmptyInput("sample matrix")
    return FeatureScaler(samples.min(axis=0), samples.max(axis=0))


def transform(scaler: FeatureScaler, samples: np.ndarray) -> np.ndarray:
    return scaler.transform(samples)


def inverse_transform(scaler: FeatureScaler, samples: np.ndarray) -> np.ndarray:
    return scaler.inverse_transform(samples)


@dataclass
class ScoreSet:
    """Reconstruction scores of one population."""

    scores: np.ndarray
    role: ScoreRole = ScoreRole.TEST

    def __post_init__(self) -> None:
        self.scores = np.asarray(self.scores, dtype=np.float64)
        self.role = ScoreRole(self.role)
        if np.any(self.scores < 0):
            raise InvalidConfiguration("scores must be >= 0")

    def __len__(self) -> int:
        return len(self.scores)


@dataclass
class DetectorModel:
    """Trained network, the scaler fitted on its training split, and the threshold tau."""

    network: Network
    scaler: FeatureScaler
    threshold: float
    metadata: dict[str, str] = field(default_factory=dict)
    history: TrainHistory | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.network.input_size != self.scaler.n_features:
            raise DimensionMismatch(self.scaler.n_features, self.network.input_size)
        if not math.isfinite(self.threshold) or self.threshold < 0:
            raise InvalidConfiguration(f"threshold must be finite and >= 0, got {self.threshold}")

    @property
    def input_size(self) -> int:
        return self.network.input_size


@dataclass
class DetectionResult:
    """Per-sample scores and decisions for a corpus."""

    scores: np.ndarray
    decisions: list[Decision]
    threshold: float

    def __len__(self) -> int:
        return len(self.decisions)

    @property
    def abnormal_mask(self) -> np.ndarray:
        return np.array([decision is Decision.ABNORMAL for decision in self.decisions], dtype=bool)


def score(
    model: DetectorModel, samples_scaled: np.ndarray, role: ScoreRole = ScoreRole.TEST
) -> ScoreSet:
    """Score = MSE between each scaled sample and its reconstruction."""
    samples_scaled = np.asarray(samples_scaled, dtype=np.float64)
    if samples_scaled.ndim == 2 and not len(samples_scaled):
        return ScoreSet(np.empty(0), role)
    return ScoreSet(reconstruction_errors(model.network, samples_scaled), role)


def compute_threshold(s_tr: ScoreSet, s_va: ScoreSet) -> float:
    """tau = mean(S_tr) + mean(S_va) + 3 * (std(S_tr) + std(S_va)), population std."""
    if not len(s_tr):
        raise EmptyInput("training score set")
    if not len(s_va):
        raise EmptyInput("validation score set")
    return float(
        np.mean(s_tr.scores)
        + np.mean(s_va.scores)
        + 3.0 * (np.std(s_tr.scores) + np.std(s_va.scores))
    )


def decide(sample_score: float, threshold: float) -> Decision:
    """Normal iff the score does not exceed the threshold."""
    return Decision.NORMAL if sample_score <= threshold else Decision.ABNORMAL


def split_normal(
    normal: Corpus | np.ndarray, split_fraction: float, rng_seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Shuffle the normal samples and split them into training and validation sets."""
    matrix = normal.matrix if isinstance(normal, Corpus) else np.asarray(normal, dtype=np.float64)
    if len(matrix) < MIN_TRAINING_SAMPLES:
        raise InsufficientSamples(len(matrix), MIN_TRAINING_SAMPLES)
    if not 0.0 < split_fraction < 1.0:
        raise InvalidConfiguration("split_fraction must be in (0, 1)")
    train_count = math.floor(split_fraction * len(matrix))
    if not 0 < train_count < len(matrix):
        raise InsufficientSamples(min(train_count, len(matrix) - train_count), 1)
    train, validation = train_test_split(
        matrix, train_size=train_count, shuffle=True, random_state=rng_seed
    )
    return train, validation


def dae_network_factory(encoder_widths: Sequence[int] = DAE_ENCODER_WIDTHS) -> NetworkFactory:
    """Network factory building the deep autoencoder with a mirrored decoder."""

    def factory(input_size: int, rng_seed: int) -> Network:
        return build_dae(input_size, encoder_widths, rng_seed=rng_seed)

    return factory


def fit_detector_on_split(
    train: np.ndarray,
    validation: np.ndarray,
    train_cfg: TrainConfig,
    network_factory: NetworkFactory | None = None,
    metadata: dict[str, str] | None = None,
) -> DetectorModel:
    """Build, scale, fit, score both splits and learn the threshold."""
    network_factory = network_factory or dae_network_factory()
    network = network_factory(train.shape[1], train_cfg.rng_seed)
    scaler = fit_scaler(train)
    train_scaled = scaler.transform(train)
    validation_scaled = scaler.transform(validation)

    trained, history = fit(network, train_scaled, train_cfg)
    draft = DetectorModel(network=trained, scaler=scaler, threshold=0.0)
    s_tr = score(draft, train_scaled, ScoreRole.TRAIN)
    s_va = score(draft, validation_scaled, ScoreRole.VALIDATION)
    threshold = compute_threshold(s_tr, s_va)
    logger.info(
        "Threshold %.6g from %s training and %s validation scores",
        threshold,
        len(s_tr),
        len(s_va),
    )

    info = {
        "seed": str(train_cfg.rng_seed),
        "train_samples": str(len(train)),
        "validation_samples": str(len(validation)),
        "best_epoch": str(history.best_epoch),
    }
    info.update(metadata or {})
    return DetectorModel(
        network=trained, scaler=scaler, threshold=threshold, metadata=info, history=history
    )


def train_detector(
    normal: Corpus | np.ndarray,
    split_fraction: float = 0.8,
    train_cfg: TrainConfig | None = None,
    network_factory: NetworkFactory | None = None,
    metadata: dict[str, str] | None = None,
) -> DetectorModel:
    """Shuffle, split, build, scale, fit, score and threshold on normal data only."""
    train_cfg = train_cfg or TrainConfig()
    train, validation = split_normal(normal, split_fraction, train_cfg.rng_seed)
    info = {"method": "dae"}
    info.update(metadata or {})
    return fit_detector_on_split(train, validation, train_cfg, network_factory, info)


def classify(model: DetectorModel, sample: PackedSample | np.ndarray) -> Decision:
    """Decision for a single raw (unscaled) sample."""
    values = sample.values if isinstance(sample, PackedSample) else np.asarray(sample)
    sample_score = score(model, model.scaler.transform(values)).scores[0]
    return decide(float(sample_score), model.threshold)


def detect_batch(model: DetectorModel, corpus: Corpus | np.ndarray) -> DetectionResult:
    """Scale with the stored training scaler, score, and threshold every sample."""
    matrix = corpus.matrix if isinstance(corpus, Corpus) else np.asarray(corpus, dtype=np.float64)
    if matrix.ndim == 2 and not len(matrix):
        return DetectionResult(np.empty(0), [], model.threshold)
    scores = score(model, model.scaler.transform(matrix)).scores
    decisions = [decide(float(value), model.threshold) for value in scores]
    return DetectionResult(scores=scores, decisions=decisions, threshold=model.threshold)
