"""Comparison detectors: an isolation forest and the vanilla (single hidden layer) autoencoder."""

import functools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from src.services.detector import DetectionResult, DetectorModel, NetworkFactory, train_detector
from src.services.exceptions import (
    DimensionMismatch,
    InsufficientSamples,
    InvalidConfiguration,
    NoSplittableFeature,
)
from src.services.models import Corpus, Decision, ForestConfig, PackedSample, TrainConfig
from src.services.neural import Network, build_vae
from src.services.seeding import derive_seed

logger: logging.Logger = logging.getLogger(name=__name__)

LEAF = -1


@functools.lru_cache(maxsize=None)
def harmonic_number(m: int) -> float:
    """H(m) = 1 + 1/2 + ... + 1/m, with H(0) = 0."""
    return math.fsum(1.0 / i for i in range(1, m + 1))


@functools.lru_cache(maxsize=None)
def average_path_length(n: int) -> float:
    """c(n): expected path length of an unsuccessful search in a binary search tree of n items."""
    if n <= 1:
        return 0.0
    return 2.0 * harmonic_number(n - 1) - 2.0 * (n - 1) / n


@dataclass
class IsolationTree:
    """Tree stored as flat arrays in pre-order; feature == LEAF marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    size: np.ndarray

    def __post_init__(self) -> None:
        self.feature = np.asarray(self.feature, dtype=np.int64)
        self.threshold = np.asarray(self.threshold, dtype=np.float64)
        self.left = np.asarray(self.left, dtype=np.int64)
        self.right = np.asarray(self.right, dtype=np.int64)
        self.size = np.asarray(self.size, dtype=np.int64)

    @property
    def node_count(self) -> int:
        return len(self.feature)

    @property
    def split_count(self) -> int:
        return int(np.sum(self.feature != LEAF))

    def depth(self) -> int:
        depths = np.zeros(self.node_count, dtype=np.int64)
        for node in range(self.node_count):
            if self.feature[node] != LEAF:
                depths[self.left[node]] = depths[node] + 1
                depths[self.right[node]] = depths[node] + 1
        return int(depths.max())

    def path_lengths(self, samples: np.ndarray) -> np.ndarray:
        """Depth of the reached leaf plus c(leaf size), for every row."""
        node = np.zeros(len(samples), dtype=np.int64)
        depth = np.zeros(len(samples), dtype=np.float64)
        rows = np.arange(len(samples))
        while True:
            features = self.feature[node]
            internal = features != LEAF
            if not internal.any():
                break
            values = samples[rows, np.where(internal, features, 0)]
            go_left = values < self.threshold[node]
            following = np.where(go_left, self.left[node], self.right[node])
            node = np.where(internal, following, node)
            depth += internal
        leaf_adjustment = np.array([average_path_length(int(s)) for s in self.size[node]])
        return depth + leaf_adjustment

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, IsolationTree):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, name), getattr(other, name))
            for name in ("feature", "threshold", "left", "right", "size")
        )


class _TreeBuilder:
    """Grows one isolation tree in pre-order from a subsample."""

    def __init__(self, rng: np.random.Generator, depth_limit: int) -> None:
        self.rng = rng
        self.depth_limit = depth_limit
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.size: list[int] = []

    def grow(self, samples: np.ndarray, depth: int = 0) -> int:
        node = len(self.feature)
        self.feature.append(LEAF)
        self.threshold.append(0.0)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.size.append(len(samples))
        if depth >= self.depth_limit or len(samples) <= 1:
            return node

        low, high = samples.min(axis=0), samples.max(axis=0)
        splittable = np.flatnonzero(high > low)
        if not len(splittable):
            return node

        feature = int(splittable[self.rng.integers(len(splittable))])
        value = self.rng.uniform(low[feature], high[feature])
        # Strictement entre min et max pour que les deux branches soient non vides
        while not low[feature] < value < high[feature]:
            value = self.rng.uniform(low[feature], high[feature])

        mask = samples[:, feature] < value
        self.feature[node] = feature
        self.threshold[node] = float(value)
        self.left[node] = self.grow(samples[mask], depth + 1)
        self.right[node] = self.grow(samples[~mask], depth + 1)
        return node

    def build(self) -> IsolationTree:
        return IsolationTree(self.feature, self.threshold, self.left, self.right, self.size)


@dataclass
class IsolationForestModel:
    """Fitted forest plus the score threshold derived from the contamination rate."""

    trees: list[IsolationTree]
    subsample_size: int
    n_features: int
    contamination: float = 0.1
    score_threshold: float = 0.5
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.trees:
            raise InvalidConfiguration("an isolation forest needs at least one tree")
        if not 0.0 < self.contamination < 0.5:
            raise InvalidConfiguration("contamination must be in (0, 0.5)")

    @property
    def tree_count(self) -> int:
        return len(self.trees)

    @property
    def depth_limit(self) -> int:
        return math.ceil(math.log2(self.subsample_size))


def _check_width(model: IsolationForestModel, samples: np.ndarray) -> np.ndarray:
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim == 1:
        samples = samples[None, :]
    if samples.shape[1] != model.n_features:
        raise DimensionMismatch(model.n_features, samples.shape[1])
    return samples


def if_scores(model: IsolationForestModel, samples: np.ndarray) -> np.ndarray:
    """s = 2^(-E[h(x)] / c(subsample size)) for every row; higher is more anomalous."""
    samples = _check_width(model, samples)
    if not len(samples):
        return np.empty(0)
    mean_path = np.mean([tree.path_lengths(samples) for tree in model.trees], axis=0)
    return np.power(2.0, -mean_path / average_path_length(model.subsample_size))


def if_fit(
    samples: np.ndarray, cfg: ForestConfig | None = None, rng_seed: int = 0
) -> IsolationForestModel:
    """Grow trees on seeded subsamples and set the threshold at the contamination quantile."""
    cfg = cfg or ForestConfig()
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2 or len(samples) < 2:
        raise InsufficientSamples(len(samples), 2)
    if not np.any(samples.max(axis=0) > samples.min(axis=0)):
        raise NoSplittableFeature()

    subsample_size = min(cfg.subsample_size, len(samples))
    depth_limit = math.ceil(math.log2(subsample_size))
    trees = []
    for index in range(cfg.tree_count):
        rng = np.random.default_rng(derive_seed(rng_seed, index))
        subsample = samples[rng.choice(len(samples), size=subsample_size, replace=False)]
        builder = _TreeBuilder(rng, depth_limit)
        builder.grow(subsample)
        trees.append(builder.build())

    model = IsolationForestModel(
        trees=trees,
        subsample_size=subsample_size,
        n_features=samples.shape[1],
        contamination=cfg.contamination,
        metadata={"method": "if", "seed": str(rng_seed), "train_samples": str(len(samples))},
    )
    model.score_threshold = float(np.quantile(if_scores(model, samples), 1.0 - cfg.contamination))
    logger.info(
        "Isolation forest of %s trees, score threshold %.6g",
        model.tree_count,
        model.score_threshold,
    )
    return model


def if_score(model: IsolationForestModel, sample: PackedSample | np.ndarray) -> float:
    values = sample.values if isinstance(sample, PackedSample) else sample
    return float(if_scores(model, values)[0])


def if_decide(sample_score: float, threshold: float) -> Decision:
    """Abnormal iff the score is strictly above the threshold."""
    return Decision.ABNORMAL if sample_score > threshold else Decision.NORMAL


def if_classify(model: IsolationForestModel, sample: PackedSample | np.ndarray) -> Decision:
    return if_decide(if_score(model, sample), model.score_threshold)


def if_detect_batch(model: IsolationForestModel, corpus: Corpus | np.ndarray) -> DetectionResult:
    matrix = corpus.matrix if isinstance(corpus, Corpus) else np.asarray(corpus, dtype=np.float64)
    scores = if_scores(model, matrix)
    decisions = [if_decide(float(value), model.score_threshold) for value in scores]
    return DetectionResult(scores=scores, decisions=decisions, threshold=model.score_threshold)


def vae_network_factory(hidden: int = 8) -> NetworkFactory:
    """Network factory building a vanilla autoencoder with `hidden` compressed units."""

    def factory(input_size: int, rng_seed: int) -> Network:
        return build_vae(input_size, hidden=hidden, rng_seed=rng_seed)

    return factory


def vae_detector(
    normal: Corpus | np.ndarray,
    split_fraction: float = 0.8,
    train_cfg: TrainConfig | None = None,
    hidden: int = 8,
    metadata: dict[str, str] | None = None,
) -> DetectorModel:
    """Same training path as the deep detector, with a single hidden layer network."""
    factory = vae_network_factory(hidden)
    info = {"method": "vae", "hidden": str(hidden)}
    info.update(metadata or {})
    return train_detector(normal, split_fraction, train_cfg, factory, info)
