"""Unit tests for WorkflowService over in-memory repositories."""

import numpy as np
import pytest

from src.config.run_config import parse_run_config
from src.di.container import create_test_container
from src.services.baselines import IsolationForestModel
from src.services.detector import DetectorModel
from src.services.evaluation import Method, Status
from src.services.exceptions import (
    CorpusFormatError,
    InsufficientSamples,
    InvalidAnnotation,
    InvalidConfiguration,
)
from src.services.models import Corpus
from src.services.workflow_service import DatasetPaths, best_model_path

SMALL_RUN = """
[run]
seed = 5
methods = dae,vae,if

[scene]
car_count = 3
pedestrian_count = 2

[augment]
count_per_track = 2

[abnormal]
straight_count = 10
realistic_count = 7
transforms = mirror,label_swap,rotate_about_scene_center

[train]
epochs = 2
batch_size = 32
vae_hidden = 4

[forest]
tree_count = 10
subsample_size = 32

[eval]
iterations = 2
"""


@pytest.mark.unit
class TestWorkflowServiceUnit:
    def setup_method(self):
        self.container = create_test_container()
        self.service = self.container.workflow_service()
        self.config = parse_run_config(SMALL_RUN)

    def prepare(self):
        self.service.synth(self.config)
        self.service.ingest(self.config)
        self.service.generate_abnormal(self.config)

    def test_synth_stores_annotations(self):
        summary = self.service.synth(self.config)

        assert summary.path == self.config.paths.annotations
        assert summary.object_count == 5
        stored = self.container.annotation_repository().load(summary.path)
        assert len(stored) == summary.record_count

    def test_ingest_builds_the_normal_corpus(self):
        # Given
        self.service.synth(self.config)

        # When
        summary = self.service.ingest(self.config)

        # Then
        assert summary.track_count == 5
        assert summary.extraction.skipped_count == 0
        assert set(summary.corpus.class_counts()) == {"pedestrian", "car"}
        stored = self.container.corpus_repository().load(self.config.paths.corpus)
        np.testing.assert_array_equal(stored.matrix, summary.corpus.matrix)
        assert stored.width == 125

    def test_ingest_without_annotations(self):
        with pytest.raises(InvalidAnnotation):
            self.service.ingest(self.config)

    def test_abnormal_counts_split_exactly_between_transforms(self):
        self.service.synth(self.config)

        summary = self.service.generate_abnormal(self.config)

        assert len(summary.corpus) == 17
        assert summary.counts_by_source == {
            "straight_line": 10,
            "mirror": 3,
            "label_swap": 2,
            "rotate_about_scene_center": 2,
        }

    def test_straight_only_generation_needs_no_annotations(self):
        config = parse_run_config("[abnormal]\nstraight_count = 4\nrealistic_count = 0\n")

        summary = self.service.generate_abnormal(config)

        assert summary.counts_by_source == {"straight_line": 4}

    def test_diagonal_direction_reaches_the_generator(self):
        config = parse_run_config(
            "[abnormal]\nstraight_count = 6\nrealistic_count = 0\ndirection = diagonal\n"
        )

        summary = self.service.generate_abnormal(config)

        velocities = summary.corpus.matrix[:, 3:5]
        np.testing.assert_allclose(np.abs(velocities[:, 0]), np.abs(velocities[:, 1]), atol=1e-12)

    def test_nothing_to_generate(self):
        config = parse_run_config("[abnormal]\nstraight_count = 0\nrealistic_count = 0\n")

        with pytest.raises(InvalidConfiguration):
            self.service.generate_abnormal(config)

    def test_same_seed_same_corpora(self):
        self.prepare()
        other = create_test_container().workflow_service()
        other.synth(self.config)
        other.ingest(self.config)
        other.generate_abnormal(self.config)

        for path in (self.config.paths.corpus, self.config.paths.abnormal):
            np.testing.assert_array_equal(
                self.container.corpus_repository().load(path).matrix,
                other.corpus_repo.load(path).matrix,
            )

    def test_train_deep_detector(self):
        # Given
        self.prepare()

        # When
        summary = self.service.train(self.config)

        # Then
        assert summary.method is Method.DAE
        assert isinstance(summary.model, DetectorModel)
        assert len(summary.history) == 2
        assert summary.hyperparameters["widths"] == "125-128-64-32-16-8-16-32-64-128-125"
        assert summary.model.metadata["config_digest"] == self.config.digest()
        assert summary.digest == self.container.model_repository().digest(summary.path)

    def test_train_isolation_forest(self):
        self.prepare()

        summary = self.service.train(self.config.with_method("if"), out="forest.model")

        assert isinstance(summary.model, IsolationForestModel)
        assert summary.threshold == summary.model.score_threshold
        assert summary.history is None

    def test_train_on_a_tiny_corpus(self):
        self.container.corpus_repository().save("tiny", Corpus(np.zeros((3, 125))))

        with pytest.raises(InsufficientSamples):
            self.service.train(self.config, corpus="tiny")

    def test_detect_uses_the_stored_model(self):
        self.prepare()
        self.service.train(self.config.with_method("vae"))

        result = self.service.detect(self.config)

        assert len(result) == 17
        assert result.threshold > 0.0

    def test_detect_unknown_corpus(self):
        self.prepare()
        self.service.train(self.config.with_method("if"))

        with pytest.raises(CorpusFormatError):
            self.service.detect(self.config, corpus="missing.csv")

    def test_evaluate_every_method(self, tmp_path):
        # Given
        self.prepare()
        report = tmp_path / "report.csv"

        # When
        summary = self.service.evaluate(self.config, report=str(report))

        # Then
        assert [(row.method, row.status) for row in summary.aggregates] == [
            (Method.DAE, Status.NORMAL),
            (Method.DAE, Status.ABNORMAL),
            (Method.VAE, Status.NORMAL),
            (Method.VAE, Status.ABNORMAL),
            (Method.IF, Status.NORMAL),
            (Method.IF, Status.ABNORMAL),
        ]
        assert all(row.runs == 2 for row in summary.aggregates)
        assert summary.model_paths["synthetic/if"] == "models/detector.best-if.model"
        text = report.read_text(encoding="utf-8")
        assert f"# config_digest: {self.config.digest()}\n" in text
        assert "Data,Status,Size,DAE TPR,DAE FPR,VAE TPR,VAE FPR,IF TPR,IF FPR\n" in text

    def test_evaluate_two_datasets_in_one_report(self, tmp_path):
        self.prepare()
        config = self.config.with_methods(["if"])
        paths = self.config.paths
        datasets = [
            DatasetPaths("first", paths.corpus, paths.abnormal),
            DatasetPaths("second", paths.corpus, paths.abnormal),
        ]

        summary = self.service.evaluate(config, datasets, report=str(tmp_path / "r.csv"))

        assert [row.dataset for row in summary.aggregates] == ["first"] * 2 + ["second"] * 2
        assert set(summary.model_paths.values()) == {
            "models/detector.best-first-if.model",
            "models/detector.best-second-if.model",
        }

    def test_duplicate_dataset_names(self, tmp_path):
        paths = self.config.paths
        datasets = [DatasetPaths("same", paths.corpus, paths.abnormal)] * 2

        with pytest.raises(InvalidConfiguration):
            self.service.evaluate(self.config, datasets, report=str(tmp_path / "r.csv"))

    def test_show_config(self):
        text, digest = self.service.show_config(self.config)

        assert parse_run_config(text) == self.config
        assert digest == self.config.digest()


@pytest.mark.unit
class TestBestModelPathUnit:
    def test_single_dataset(self):
        assert best_model_path("out/m.model", Method.DAE) == "out/m.best-dae.model"

    def test_named_dataset(self):
        assert best_model_path("m.txt", Method.VAE, "crossing") == "m.best-crossing-vae.txt"
