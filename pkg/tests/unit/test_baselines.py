"""Unit tests for the isolation forest and the vanilla autoencoder baselines."""

import math
from fractions import Fraction

import numpy as np
import pytest

from src.services.baselines import (
    LEAF,
    average_path_length,
    harmonic_number,
    if_classify,
    if_decide,
    if_detect_batch,
    if_fit,
    if_score,
    if_scores,
    vae_detector,
)
from src.services.exceptions import (
    DimensionMismatch,
    InsufficientSamples,
    NoSplittableFeature,
)
from src.services.models import Decision, ForestConfig, TrainConfig


@pytest.mark.unit
class TestAveragePathLengthUnit:
    def test_small_values(self):
        assert average_path_length(0) == 0.0
        assert average_path_length(1) == 0.0
        assert average_path_length(2) == 1.0

    def test_harmonic_number_against_exact_fractions(self):
        for m in (1, 2, 7, 30):
            exact = sum(Fraction(1, i) for i in range(1, m + 1))
            assert harmonic_number(m) == pytest.approx(float(exact), rel=1e-15)

    def test_matches_the_logarithmic_approximation_for_large_n(self):
        n = 256
        approximation = 2.0 * (math.log(n - 1) + 0.5772156649) - 2.0 * (n - 1) / n

        assert average_path_length(n) == pytest.approx(approximation, rel=1e-3)

    def test_matches_brute_force_harmonic_sums(self):
        for n in (3, 10, 257, 1000, 10_000):
            harmonic = sum(1.0 / i for i in range(n - 1, 0, -1))
            brute_force = 2.0 * harmonic - 2.0 * (n - 1) / n
            assert average_path_length(n) == pytest.approx(brute_force, rel=1e-12)

    def test_matches_unsuccessful_search_depth_by_enumeration(self):
        # c(n) = profondeur moyenne des feuilles externes d'un ABR de n - 1 clés
        # 2 clés : profondeurs 1, 2, 2 quel que soit l'ordre d'insertion
        assert average_path_length(3) == pytest.approx(5.0 / 3.0, rel=1e-12)
        # 3 clés : 4 ordres donnent 1, 2, 3, 3 et 2 ordres donnent 2, 2, 2, 2
        expected = (4 * (1 + 2 + 3 + 3) / 4.0 + 2 * 2.0) / 6.0
        assert average_path_length(4) == pytest.approx(expected, rel=1e-12)


@pytest.mark.unit
class TestIsolationForestUnit:
    def setup_method(self):
        rng = np.random.default_rng(11)
        self.inliers = rng.normal(0.0, 1.0, size=(500, 5))
        self.cfg = ForestConfig(tree_count=50, subsample_size=128, contamination=0.1)

    def test_planted_outliers_are_flagged(self):
        # Given
        model = if_fit(self.inliers, self.cfg, rng_seed=1)
        outliers = np.full((5, 5), 10.0) * np.array([1, -1, 1, -1, 1])

        # When
        result = if_detect_batch(model, outliers)

        # Then
        assert all(decision is Decision.ABNORMAL for decision in result.decisions)
        assert result.scores.min() > np.quantile(if_scores(model, self.inliers), 0.99)

    def test_outliers_score_above_the_inlier_95th_percentile(self):
        # Given
        rng = np.random.default_rng(21)
        inliers = rng.normal(0.0, 0.5, size=(1000, 2))
        angles = rng.uniform(0.0, 2.0 * np.pi, size=20)
        outliers = 12.0 * 0.5 * np.column_stack([np.cos(angles), np.sin(angles)])
        model = if_fit(np.vstack([inliers, outliers]), ForestConfig(), rng_seed=0)

        # When
        inlier_scores = if_scores(model, inliers)
        outlier_scores = if_scores(model, outliers)

        # Then
        assert outlier_scores.min() > np.percentile(inlier_scores, 95)

    def test_flagged_training_fraction_follows_contamination(self):
        model = if_fit(self.inliers, self.cfg, rng_seed=1)

        flagged = if_detect_batch(model, self.inliers).abnormal_mask.mean()

        assert 0.08 <= flagged <= 0.10

    def test_scores_are_in_unit_interval(self):
        model = if_fit(self.inliers, self.cfg, rng_seed=2)

        scores = if_scores(model, self.inliers)

        assert np.all((scores > 0.0) & (scores <= 1.0))

    def test_trees_respect_the_depth_limit(self):
        model = if_fit(self.inliers, self.cfg, rng_seed=3)

        assert model.depth_limit == 7
        assert all(tree.depth() <= 7 for tree in model.trees)
        assert all(tree.size[0] == 128 for tree in model.trees)

    def test_split_nodes_partition_their_samples(self):
        model = if_fit(self.inliers, self.cfg, rng_seed=3)
        tree = model.trees[0]

        for node in range(tree.node_count):
            if tree.feature[node] != LEAF:
                children = tree.size[tree.left[node]] + tree.size[tree.right[node]]
                assert children == tree.size[node]
                assert tree.size[tree.left[node]] > 0
                assert tree.size[tree.right[node]] > 0

    def test_same_seed_same_forest(self):
        first = if_fit(self.inliers, self.cfg, rng_seed=5)
        second = if_fit(self.inliers, self.cfg, rng_seed=5)

        assert first.trees == second.trees
        assert first.score_threshold == second.score_threshold

    def test_different_seeds_grow_different_forests(self):
        first = if_fit(self.inliers, self.cfg, rng_seed=5)
        second = if_fit(self.inliers, self.cfg, rng_seed=6)

        assert first.trees != second.trees

    def test_small_corpus_caps_the_subsample(self):
        model = if_fit(self.inliers[:40], self.cfg, rng_seed=0)

        assert model.subsample_size == 40

    def test_single_sample_helpers_agree_with_batch(self):
        model = if_fit(self.inliers, self.cfg, rng_seed=4)
        sample = self.inliers[17]

        assert if_score(model, sample) == if_scores(model, sample[None, :])[0]
        assert if_classify(model, sample) is if_detect_batch(model, sample[None, :]).decisions[0]

    def test_constant_features_cannot_be_split(self):
        with pytest.raises(NoSplittableFeature):
            if_fit(np.ones((20, 3)), self.cfg)

    def test_needs_two_samples(self):
        with pytest.raises(InsufficientSamples):
            if_fit(np.ones((1, 3)), self.cfg)

    def test_wrong_width_is_rejected(self):
        model = if_fit(self.inliers, self.cfg, rng_seed=0)

        with pytest.raises(DimensionMismatch):
            if_scores(model, np.zeros((2, 4)))


@pytest.mark.unit
class TestIfDecideUnit:
    def test_score_equal_to_threshold_is_normal(self):
        assert if_decide(0.6, 0.6) is Decision.NORMAL

    def test_score_above_threshold_is_abnormal(self):
        assert if_decide(0.61, 0.6) is Decision.ABNORMAL


@pytest.mark.unit
class TestVanillaAutoencoderUnit:
    def test_single_hidden_layer_detector(self):
        # Given
        rng = np.random.default_rng(0)
        normal = rng.random((40, 9))

        # When
        model = vae_detector(normal, 0.8, TrainConfig(batch_size=8, epochs=3), hidden=4)

        # Then
        assert model.network.widths == [9, 4, 9]
        assert model.metadata["method"] == "vae"
        assert model.metadata["hidden"] == "4"
        assert model.threshold > 0.0
