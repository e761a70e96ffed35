"""Workflow service: the end-to-end commands over annotation, corpus and model repositories."""

import logging
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field
from pathlib import Path

from src.config.run_config import RunConfig
from src.persistances.repositories.interfaces import (
    AnnotationRepositoryInterface,
    CorpusRepositoryInterface,
    ModelRepositoryInterface,
)
from src.services.baselines import IsolationForestModel, if_detect_batch, if_fit, vae_detector
from src.services.detector import (
    MIN_TRAINING_SAMPLES,
    DetectionResult,
    DetectorModel,
    detect_batch,
    train_detector,
)
from src.services.evaluation import (
    AggregateMetrics,
    Method,
    RepeatedEvaluation,
    emit_report,
    repeated_eval,
)
from src.services.exceptions import (
    EmptyTransformSet,
    InsufficientSamples,
    InvalidConfiguration,
)
from src.services.models import Corpus, ExtractionResult, SceneBounds
from src.services.neural import TrainHistory
from src.services.pipeline import (
    STRAIGHT_LINE,
    build_corpus_from_tracks,
    extract_tracks,
    gen_realistic_abnormal,
    gen_straight_abnormal,
    gen_synthetic_scene,
)
from src.services.seeding import (
    STAGE_ABNORMAL,
    STAGE_EVAL,
    STAGE_SCENE,
    STAGE_TRAIN,
    derive_seed,
)

logger = logging.getLogger(__name__)


@dataclass
class SynthSummary:
    path: str
    record_count: int
    object_count: int


@dataclass
class IngestSummary:
    path: str
    extraction: ExtractionResult
    corpus: Corpus

    @property
    def track_count(self) -> int:
        return len(self.extraction.tracks)

    @property
    def sample_count(self) -> int:
        return len(self.corpus)


@dataclass
class AbnormalSummary:
    path: str
    corpus: Corpus
    counts_by_source: dict[str, int]


@dataclass
class TrainSummary:
    path: str
    method: Method
    model: DetectorModel | IsolationForestModel
    threshold: float
    hyperparameters: dict[str, object]
    digest: str

    @property
    def history(self) -> TrainHistory | None:
        return self.model.history if isinstance(self.model, DetectorModel) else None


@dataclass
class DatasetPaths:
    """Normal and abnormal corpora evaluated together under one report label."""

    name: str
    normal: str
    abnormal: str


@dataclass
class EvaluationSummary:
    report_path: str
    evaluations: list[RepeatedEvaluation]
    model_paths: dict[str, str] = field(default_factory=dict)
    model_digests: dict[str, str] = field(default_factory=dict)

    @property
    def aggregates(self) -> list[AggregateMetrics]:
        return [row for evaluation in self.evaluations for row in evaluation.aggregates]


def best_model_path(model_path: str, method: Method, dataset: str | None = None) -> str:
    """Where the best model of one method (and dataset, when several) is saved by eval."""
    path = Path(model_path)
    tag = f"{dataset}-{method.value}" if dataset else method.value
    return str(path.with_name(f"{path.stem}.best-{tag}{path.suffix}"))


class WorkflowService:
    """Runs the ingestion, generation, training, detection and evaluation workflows."""

    def __init__(
        self,
        annotation_repo: AnnotationRepositoryInterface,
        corpus_repo: CorpusRepositoryInterface,
        model_repo: ModelRepositoryInterface,
    ) -> None:
        self.annotation_repo = annotation_repo
        self.corpus_repo = corpus_repo
        self.model_repo = model_repo

    def synth(self, config: RunConfig, out: str | None = None) -> SynthSummary:
        """Write a synthetic two-flow annotation file."""
        path = out or config.paths.annotations
        records = gen_synthetic_scene(config.scene_config(), derive_seed(config.seed, STAGE_SCENE))
        self.annotation_repo.save(path, records)
        object_count = len({record.object_id for record in records})
        return SynthSummary(path=path, record_count=len(records), object_count=object_count)

    def _extract(self, config: RunConfig, annotations: str | None) -> ExtractionResult:
        records = self.annotation_repo.load(annotations or config.paths.annotations)
        return extract_tracks(records)

    def ingest(
        self, config: RunConfig, annotations: str | None = None, out: str | None = None
    ) -> IngestSummary:
        """Annotations to an augmented, packed normal corpus."""
        extraction = self._extract(config, annotations)
        corpus = build_corpus_from_tracks(
            extraction.tracks,
            config.augment_config(),
            config.window.length,
            config.window.stride,
        )
        path = out or config.paths.corpus
        self.corpus_repo.save(path, corpus)
        logger.info(
            "Ingested %s tracks into %s samples (%s)", len(extraction.tracks), len(corpus), path
        )
        return IngestSummary(path=path, extraction=extraction, corpus=corpus)

    def generate_abnormal(
        self, config: RunConfig, annotations: str | None = None, out: str | None = None
    ) -> AbnormalSummary:
        """Straight-line abnormals plus an exact share of realistic abnormals per transform."""
        settings = config.abnormal
        if settings.straight_count + settings.realistic_count == 0:
            raise InvalidConfiguration("no abnormal samples requested")
        if settings.realistic_count and not settings.transforms:
            raise EmptyTransformSet()

        tracks = []
        annotation_path = annotations or config.paths.annotations
        if settings.realistic_count or self.annotation_repo.exists(annotation_path):
            tracks = self._extract(config, annotation_path).tracks
        scene = SceneBounds.enclosing(tracks) if tracks else config.scene_config().bounds

        corpus = gen_straight_abnormal(
            scene,
            settings.straight_count,
            (settings.speed_min, settings.speed_max),
            derive_seed(config.seed, STAGE_ABNORMAL, 0),
            config.window.length,
            settings.direction,
        )
        share, extra = divmod(settings.realistic_count, max(len(settings.transforms), 1))
        for index, transform in enumerate(settings.transforms):
            count = share + (1 if index < extra else 0)
            if not count:
                continue
            corpus = corpus.concat(
                gen_realistic_abnormal(
                    tracks,
                    [transform],
                    derive_seed(config.seed, STAGE_ABNORMAL, index + 1),
                    count=count,
                    scene=scene,
                    rotation_degrees=settings.rotation_degrees,
                    offroad_offset=settings.offroad_offset,
                    window=config.window.length,
                    stride=config.window.stride,
                )
            )

        path = out or config.paths.abnormal
        self.corpus_repo.save(path, corpus)
        counts: dict[str, int] = {}
        for source in corpus.provenance or ():
            counts[source] = counts.get(source, 0) + 1
        counts.setdefault(STRAIGHT_LINE, 0)
        return AbnormalSummary(path=path, corpus=corpus, counts_by_source=counts)

    def train(
        self,
        config: RunConfig,
        corpus: str | None = None,
        out: str | None = None,
    ) -> TrainSummary:
        """Train the configured method on a normal corpus and persist it."""
        method = Method(config.run.method)
        normal = self.corpus_repo.load(corpus or config.paths.corpus)
        if len(normal) < MIN_TRAINING_SAMPLES:
            raise InsufficientSamples(len(normal), MIN_TRAINING_SAMPLES)

        metadata = {"dataset": config.run.dataset, "config_digest": config.digest()}
        train_cfg = config.train_config()
        model: DetectorModel | IsolationForestModel
        if method is Method.IF:
            forest_cfg = config.forest_config()
            model = if_fit(normal.matrix, forest_cfg, derive_seed(config.seed, STAGE_TRAIN))
            model.metadata.update(metadata)
            threshold = model.score_threshold
            hyperparameters: dict[str, object] = asdict(forest_cfg)
        else:
            if method is Method.VAE:
                model = vae_detector(
                    normal,
                    config.train.split_fraction,
                    train_cfg,
                    hidden=config.train.vae_hidden,
                    metadata=metadata,
                )
            else:
                model = train_detector(
                    normal, config.train.split_fraction, train_cfg, metadata=metadata
                )
            threshold = model.threshold
            hyperparameters = {
                **asdict(train_cfg),
                "split_fraction": config.train.split_fraction,
                "widths": "-".join(str(width) for width in model.network.widths),
            }

        path = out or config.paths.model
        self.model_repo.save(path, model)
        return TrainSummary(
            path=path,
            method=method,
            model=model,
            threshold=threshold,
            hyperparameters=hyperparameters,
            digest=self.model_repo.digest(path),
        )

    def detect(
        self, config: RunConfig, corpus: str | None = None, model: str | None = None
    ) -> DetectionResult:
        """Decisions for every sample of a corpus under a stored detector or forest."""
        loaded = self.model_repo.load(model or config.paths.model)
        samples = self.corpus_repo.load(corpus or config.paths.abnormal)
        if isinstance(loaded, IsolationForestModel):
            return if_detect_batch(loaded, samples)
        return detect_batch(loaded, samples)

    def evaluate(
        self,
        config: RunConfig,
        datasets: Sequence[DatasetPaths] | None = None,
        report: str | None = None,
    ) -> EvaluationSummary:
        """Repeated evaluation of every configured method, one report for all datasets."""
        datasets = list(datasets or [])
        if not datasets:
            datasets = [
                DatasetPaths(config.run.dataset, config.paths.corpus, config.paths.abnormal)
            ]
        names = [dataset.name for dataset in datasets]
        if len(set(names)) != len(names):
            raise InvalidConfiguration(f"duplicate dataset names: {', '.join(names)}")

        base_seed = derive_seed(config.seed, STAGE_EVAL)
        settings = config.evaluation_settings()
        summary = EvaluationSummary(report_path=report or config.paths.report, evaluations=[])
        for dataset in datasets:
            normal = self.corpus_repo.load(dataset.normal)
            abnormal = self.corpus_repo.load(dataset.abnormal)
            for name in config.run.methods:
                method = Method(name)
                model_path = best_model_path(
                    config.paths.model, method, dataset.name if len(datasets) > 1 else None
                )
                evaluation = repeated_eval(
                    method,
                    normal,
                    abnormal,
                    iterations=config.eval.iterations,
                    base_seed=base_seed,
                    settings=settings,
                    dataset=dataset.name,
                    model_repository=self.model_repo,
                    model_path=model_path,
                )
                summary.evaluations.append(evaluation)
                key = f"{dataset.name}/{method.value}"
                summary.model_paths[key] = model_path
                summary.model_digests[key] = self.model_repo.digest(model_path)

        run_seeds = [run.seed for run in summary.evaluations[0].runs]
        header = {
            "seed": str(config.seed),
            "eval_base_seed": str(base_seed),
            "run_seeds": " ".join(str(seed) for seed in run_seeds),
            "iterations": str(config.eval.iterations),
            "split_fraction": repr(config.eval.split_fraction),
            "methods": ",".join(config.run.methods),
            "config_digest": config.digest(),
        }
        emit_report(summary.aggregates, summary.report_path, header)
        return summary

    def show_config(self, config: RunConfig) -> tuple[str, str]:
        """Normalized configuration text and its digest."""
        return config.to_ini(), config.digest()
