"""Synthetic benchmark: crossing car and pedestrian flows with generated abnormal trajectories.

Slow. Run with `./run_tests.sh --all` or `pytest -m slow`.
"""

import numpy as np
import pytest

from src.config.run_config import parse_run_config
from src.di.container import create_test_container
from src.services.detector import score, split_normal, train_detector
from src.services.evaluation import Method, Status
from src.services.models import AugmentConfig, SyntheticSceneConfig, TrainConfig
from src.services.neural import build_dae, fit
from src.services.pipeline import build_corpus, gen_synthetic_scene

BENCHMARK_RUN = """
[run]
seed = 42
dataset = synthetic
methods = dae,vae,if

[augment]
position_noise_sigma = 0.3

[abnormal]
straight_count = 200
speed_min = 4
speed_max = 12
direction = diagonal
realistic_count = 200
transforms = rotate_about_scene_center
rotation_degrees = 90

[eval]
iterations = 1
"""


@pytest.mark.slow
@pytest.mark.integration
class TestMemorizationIntegration:
    def test_single_repeated_sample_is_memorized(self):
        sample = np.random.default_rng(0).uniform(0.2, 0.8, size=125)

        _, history = fit(build_dae(rng_seed=0), np.tile(sample, (500, 1)), TrainConfig())

        assert history.train_loss[history.best_epoch - 1] < 1e-4

    def test_three_augmented_tracks(self):
        # Given: 3 voitures, 500 copies bruitées chacune
        scene = SyntheticSceneConfig(car_count=3, pedestrian_count=0, jitter_sigma=0.5)
        records = gen_synthetic_scene(scene, rng_seed=1)
        augment = AugmentConfig(count_per_track=500, position_noise_sigma=0.5, rng_seed=2)
        corpus = build_corpus(records, augment)
        cfg = TrainConfig(rng_seed=3)

        # When
        model = train_detector(corpus, 0.8, cfg)

        # Then
        train, _ = split_normal(corpus, 0.8, cfg.rng_seed)
        train_scores = score(model, model.scaler.transform(train)).scores
        assert train_scores.mean() < 0.1 * model.history.train_loss[0]
        assert np.mean(train_scores > model.threshold) <= 0.01


@pytest.mark.slow
@pytest.mark.integration
class TestSyntheticBenchmarkIntegration:
    def setup_method(self):
        self.container = create_test_container()
        self.service = self.container.workflow_service()
        self.config = parse_run_config(BENCHMARK_RUN)

    def test_deep_autoencoder_leads_the_comparison(self, tmp_path):
        # Given
        self.service.synth(self.config)
        ingest = self.service.ingest(self.config)
        abnormal = self.service.generate_abnormal(self.config)

        # When
        summary = self.service.evaluate(self.config, report=str(tmp_path / "benchmark.csv"))

        # Then
        assert ingest.track_count == 20
        assert len(abnormal.corpus) == 400
        rows = {(row.method, row.status): row for row in summary.aggregates}
        assert rows[(Method.DAE, Status.NORMAL)].tpr_mean >= 95.0
        assert rows[(Method.DAE, Status.ABNORMAL)].tpr_mean >= 80.0
        dae_detection = rows[(Method.DAE, Status.ABNORMAL)].tpr_mean
        assert dae_detection >= rows[(Method.VAE, Status.ABNORMAL)].tpr_mean
        assert dae_detection >= rows[(Method.IF, Status.ABNORMAL)].tpr_mean
