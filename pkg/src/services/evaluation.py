"""Repeated random sub-sampling validation of the detectors and report emission."""

import enum
import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

import numpy as np
import pandas as pd
from sklearn.metrics import confusion_matrix

from src.persistances.repositories.interfaces import ModelRepositoryInterface
from src.persistances.storage import atomic_write
from src.services.baselines import (
    IsolationForestModel,
    if_detect_batch,
    if_fit,
    vae_network_factory,
)
from src.services.detector import (
    DetectionResult,
    DetectorModel,
    detect_batch,
    fit_detector_on_split,
    split_normal,
)
from src.services.exceptions import EmptyInput, InvalidConfiguration
from src.services.models import Corpus, ForestConfig, TrainConfig
from src.services.seeding import derive_seed

logger: logging.Logger = logging.getLogger(name=__name__)


class Method(str, enum.Enum):
    DAE = "dae"
    VAE = "vae"
    IF = "if"

    @property
    def label(self) -> str:
        return self.value.upper()


class Status(str, enum.Enum):
    NORMAL = "normal"
    ABNORMAL = "abnormal"


METHOD_ORDER = (Method.DAE, Method.VAE, Method.IF)

REPORT_CONVENTIONS = (
    "normal row: TPR = normal samples classified Normal / normal samples; "
    "FPR = abnormal samples classified Normal / abnormal samples",
    "abnormal row: TPR = abnormal samples classified Abnormal / abnormal samples; "
    "FPR = normal samples classified Abnormal / normal samples",
    "rates in percent; table values rounded half-up, precise lines give mean and population std",
    "Size is the corpus size; normal rows are scored on the held-out validation split",
    "OC-SVM columns are not produced",
)


@dataclass(frozen=True)
class ConfusionCounts:
    """Counts with abnormal as the positive class."""

    tp: int
    tn: int
    fp: int
    fn: int

    @classmethod
    def from_flags(
        cls, normal_flagged: np.ndarray, abnormal_flagged: np.ndarray
    ) -> "ConfusionCounts":
        """Counts from the abnormal flags raised on the normal and the abnormal populations."""
        truth = np.concatenate(
            [np.zeros(len(normal_flagged), dtype=int), np.ones(len(abnormal_flagged), dtype=int)]
        )
        predicted = np.concatenate([normal_flagged, abnormal_flagged]).astype(int)
        tn, fp, fn, tp = confusion_matrix(truth, predicted, labels=[0, 1]).ravel()
        return cls(tp=int(tp), tn=int(tn), fp=int(fp), fn=int(fn))

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    @property
    def normal_count(self) -> int:
        return self.tn + self.fp

    @property
    def abnormal_count(self) -> int:
        return self.tp + self.fn

    @property
    def net_score(self) -> int:
        """tp + tn - fp - fn, the best-model criterion."""
        return self.tp + self.tn - self.fp - self.fn


@dataclass(frozen=True)
class RunMetrics:
    """One report row of one run: rates in percent for one population."""

    method: Method
    dataset: str
    status: Status
    size: int
    tpr: float
    fpr: float
    iteration: int
    seed: int
    corpus_size: int

    def __post_init__(self) -> None:
        if not (0.0 <= self.tpr <= 100.0 and 0.0 <= self.fpr <= 100.0):
            raise InvalidConfiguration(f"rates out of range: {self.tpr}, {self.fpr}")


@dataclass(frozen=True)
class EvaluationSettings:
    split_fraction: float = 0.8
    train: TrainConfig = field(default_factory=TrainConfig)
    vae_hidden: int = 8
    forest: ForestConfig = field(default_factory=ForestConfig)


@dataclass
class EvaluationRun:
    method: Method
    iteration: int
    seed: int
    counts: ConfusionCounts
    metrics: list[RunMetrics]
    model: DetectorModel | IsolationForestModel


@dataclass(frozen=True)
class AggregateMetrics:
    """Mean and population std of one (method, dataset, status) row over the runs."""

    method: Method
    dataset: str
    status: Status
    size: int
    tpr_mean: float
    tpr_std: float
    fpr_mean: float
    fpr_std: float
    runs: int


@dataclass
class RepeatedEvaluation:
    method: Method
    dataset: str
    runs: list[EvaluationRun]
    aggregates: list[AggregateMetrics]
    best_index: int

    @property
    def best_run(self) -> EvaluationRun:
        return self.runs[self.best_index]

    @property
    def best_model(self) -> DetectorModel | IsolationForestModel:
        return self.best_run.model


def _percent(part: int, whole: int) -> float:
    return 100.0 * part / whole if whole else 0.0


def metrics_from_counts(
    counts: ConfusionCounts,
    method: Method,
    dataset: str,
    iteration: int,
    seed: int,
    corpus_sizes: tuple[int, int],
) -> list[RunMetrics]:
    """Paired normal/abnormal rows; each row's FPR is the miss rate of the other population."""
    normal_row = RunMetrics(
        method=method,
        dataset=dataset,
        status=Status.NORMAL,
        size=counts.normal_count,
        tpr=_percent(counts.tn, counts.normal_count),
        fpr=_percent(counts.fn, counts.abnormal_count),
        iteration=iteration,
        seed=seed,
        corpus_size=corpus_sizes[0],
    )
    abnormal_row = RunMetrics(
        method=method,
        dataset=dataset,
        status=Status.ABNORMAL,
        size=counts.abnormal_count,
        tpr=_percent(counts.tp, counts.abnormal_count),
        fpr=_percent(counts.fp, counts.normal_count),
        iteration=iteration,
        seed=seed,
        corpus_size=corpus_sizes[1],
    )
    return [normal_row, abnormal_row]


def _train_and_detect(
    method: Method,
    train: np.ndarray,
    validation: np.ndarray,
    abnormal: np.ndarray,
    seed: int,
    settings: EvaluationSettings,
) -> tuple[DetectorModel | IsolationForestModel, DetectionResult, DetectionResult]:
    if method is Method.IF:
        forest = if_fit(train, settings.forest, seed)
        return forest, if_detect_batch(forest, validation), if_detect_batch(forest, abnormal)

    factory = vae_network_factory(settings.vae_hidden) if method is Method.VAE else None
    train_cfg = replace(settings.train, rng_seed=seed)
    model = fit_detector_on_split(
        train, validation, train_cfg, factory, metadata={"method": method.value}
    )
    return model, detect_batch(model, validation), detect_batch(model, abnormal)


def evaluate_once(
    method: Method | str,
    normal: Corpus,
    abnormal: Corpus,
    seed: int,
    settings: EvaluationSettings | None = None,
    dataset: str = "data",
    iteration: int = 0,
) -> EvaluationRun:
    """Train on the normal training split, then score the held-out normals and every abnormal."""
    method = Method(method)
    settings = settings or EvaluationSettings()
    if not len(normal):
        raise EmptyInput("normal corpus")
    if not len(abnormal):
        raise EmptyInput("abnormal corpus")

    train, validation = split_normal(normal, settings.split_fraction, seed)
    model, normal_result, abnormal_result = _train_and_detect(
        method, train, validation, abnormal.matrix, seed, settings
    )
    counts = ConfusionCounts.from_flags(normal_result.abnormal_mask, abnormal_result.abnormal_mask)
    metrics = metrics_from_counts(
        counts, method, dataset, iteration, seed, (len(normal), len(abnormal))
    )
    logger.info(
        "%s run %s: normal TPR %.1f, abnormal TPR %.1f",
        method.label,
        iteration,
        metrics[0].tpr,
        metrics[1].tpr,
    )
    return EvaluationRun(method, iteration, seed, counts, metrics, model)


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    # fsum is exact, so the result does not depend on the run order
    mean = math.fsum(values) / len(values)
    variance = math.fsum((value - mean) ** 2 for value in values) / len(values)
    return mean, math.sqrt(variance)


def aggregate(runs: Sequence[EvaluationRun]) -> list[AggregateMetrics]:
    """Mean and population std of every (method, dataset, status) row over the runs."""
    if not runs:
        raise EmptyInput("run list")
    grouped: dict[tuple[Method, str, Status], list[RunMetrics]] = {}
    for run in runs:
        for row in run.metrics:
            grouped.setdefault((row.method, row.dataset, row.status), []).append(row)

    aggregates = []
    for (method, dataset, status), rows in grouped.items():
        tpr_mean, tpr_std = _mean_std([row.tpr for row in rows])
        fpr_mean, fpr_std = _mean_std([row.fpr for row in rows])
        aggregates.append(
            AggregateMetrics(
                method=method,
                dataset=dataset,
                status=status,
                size=rows[0].corpus_size,
                tpr_mean=tpr_mean,
                tpr_std=tpr_std,
                fpr_mean=fpr_mean,
                fpr_std=fpr_std,
                runs=len(rows),
            )
        )
    return aggregates


def repeated_eval(
    method: Method | str,
    normal: Corpus,
    abnormal: Corpus,
    iterations: int = 10,
    base_seed: int = 0,
    settings: EvaluationSettings | None = None,
    dataset: str = "data",
    model_repository: ModelRepositoryInterface | None = None,
    model_path: str | None = None,
) -> RepeatedEvaluation:
    """N shuffle-split-train-evaluate runs with derived seeds; keeps the best model."""
    method = Method(method)
    if iterations < 1:
        raise InvalidConfiguration("iterations must be >= 1")

    runs = [
        evaluate_once(
            method, normal, abnormal, derive_seed(base_seed, index), settings, dataset, index
        )
        for index in range(iterations)
    ]
    # max() garde le premier en cas d'égalité
    best_index = max(range(len(runs)), key=lambda index: runs[index].counts.net_score)
    evaluation = RepeatedEvaluation(method, dataset, runs, aggregate(runs), best_index)

    if model_repository is not None and model_path is not None:
        model_repository.save(model_path, evaluation.best_model)
        logger.info("Best %s model (run %s) saved to %s", method.label, best_index, model_path)
    return evaluation


def round_half_up(value: float) -> int:
    return int(Decimal(str(value)).quantize(Decimal("1"), rounding=ROUND_HALF_UP))


def _precise(value: float) -> str:
    return format(value, ".17g")


def report_table(metrics: Sequence[AggregateMetrics]) -> pd.DataFrame:
    """Data, Status, Size, then rounded TPR/FPR per method present."""
    if not metrics:
        raise EmptyInput("metrics")
    methods = [method for method in METHOD_ORDER if any(row.method is method for row in metrics)]
    keys: list[tuple[str, Status]] = []
    for row in metrics:
        if (row.dataset, row.status) not in keys:
            keys.append((row.dataset, row.status))

    lookup = {(row.dataset, row.status, row.method): row for row in metrics}
    records = []
    for dataset, status in keys:
        sizes = [lookup[key].size for key in lookup if key[:2] == (dataset, status)]
        record: dict[str, object] = {"Data": dataset, "Status": status.value, "Size": sizes[0]}
        for method in methods:
            row = lookup.get((dataset, status, method))
            record[f"{method.label} TPR"] = round_half_up(row.tpr_mean) if row else ""
            record[f"{method.label} FPR"] = round_half_up(row.fpr_mean) if row else ""
        records.append(record)
    return pd.DataFrame.from_records(records)


def emit_report(
    metrics: Sequence[AggregateMetrics],
    path: str | Path,
    header: Mapping[str, str] | None = None,
) -> Path:
    """Write the comparison table with `#` header lines (conventions, seeds, precise values)."""
    table = report_table(metrics)
    target = Path(path)
    with atomic_write(target) as handle:
        handle.write("# trajnorm evaluation report\n")
        for convention in REPORT_CONVENTIONS:
            handle.write(f"# convention: {convention}\n")
        for key, value in (header or {}).items():
            handle.write(f"# {key}: {value}\n")
        handle.write("# precise,data,status,method,tpr_mean,tpr_std,fpr_mean,fpr_std,runs\n")
        for row in metrics:
            values = (row.tpr_mean, row.tpr_std, row.fpr_mean, row.fpr_std)
            handle.write(
                f"# precise,{row.dataset},{row.status.value},{row.method.label},"
                + ",".join(_precise(value) for value in values)
                + f",{row.runs}\n"
            )
        table.to_csv(handle, index=False, lineterminator="\n")

    logger.info("Report written to %s", target)
    return target
