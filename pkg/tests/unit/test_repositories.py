"""Unit tests for annotation, corpus and model persistence."""

import hashlib

import numpy as np
import pytest

from src.persistances.model_codec import dumps_model, loads_model
from src.persistances.repositories.implementations import (
    FileAnnotationRepository,
    FileCorpusRepository,
    FileModelRepository,
    InMemoryAnnotationRepository,
    InMemoryCorpusRepository,
    InMemoryModelRepository,
)
from src.persistances.repositories.implementations.file.annotation_repository import (
    ANNOTATION_COLUMNS,
)
from src.persistances.storage import atomic_write
from src.services.baselines import if_fit, if_scores
from src.services.detector import DetectorModel, FeatureScaler, detect_batch
from src.services.exceptions import (
    CorpusFormatError,
    InvalidAnnotation,
    ModelFormatError,
    ModelVersionMismatch,
)
from src.services.models import BoundingBoxRecord, Corpus, ForestConfig, ObjectClass
from src.services.neural import build_dae, build_vae

HEADER = ",".join(ANNOTATION_COLUMNS)


def detector(network, seed=0):
    rng = np.random.default_rng(seed)
    low = rng.normal(size=network.input_size)
    scaler = FeatureScaler(low, low + rng.random(network.input_size) + 0.1)
    return DetectorModel(network, scaler, 0.0123456789, {"method": "dae", "seed": str(seed)})


def forest():
    samples = np.random.default_rng(3).normal(size=(60, 5))
    return if_fit(samples, ForestConfig(tree_count=4, subsample_size=32), rng_seed=8)


def assert_same_detector(loaded, original):
    assert loaded.threshold == original.threshold
    assert loaded.metadata == original.metadata
    assert loaded.scaler == original.scaler
    for a, b in zip(loaded.network.layers, original.network.layers):
        assert a.activation is b.activation
        np.testing.assert_array_equal(a.weights, b.weights)
        np.testing.assert_array_equal(a.biases, b.biases)


@pytest.mark.unit
class TestFileAnnotationRepositoryUnit:
    def setup_method(self):
        self.repository = FileAnnotationRepository()

    def test_save_then_load(self, tmp_path):
        # Given
        records = [
            BoundingBoxRecord(0, 4, ObjectClass.CAR, 10.0, 20.0, 30.5, 40.25),
            BoundingBoxRecord(1, 4, ObjectClass.CAR, 12.0, 21.0, 32.5, 41.25),
            BoundingBoxRecord(1, 9, ObjectClass.BIKE, 0.1, 0.2, 0.3, 0.4),
        ]
        path = str(tmp_path / "boxes.csv")

        # When
        self.repository.save(path, records)

        # Then
        assert self.repository.exists(path)
        assert self.repository.load(path) == records

    def test_bad_label_reports_its_line(self, tmp_path):
        path = tmp_path / "boxes.csv"
        path.write_text(f"{HEADER}\n0,1,1,0,0,2,2\n1,1,7,0,0,2,2\n", encoding="utf-8")

        with pytest.raises(InvalidAnnotation) as error:
            self.repository.load(str(path))

        assert error.value.line_number == 3

    def test_inverted_box_reports_its_line(self, tmp_path):
        path = tmp_path / "boxes.csv"
        path.write_text(f"{HEADER}\n0,1,1,5,0,2,2\n", encoding="utf-8")

        with pytest.raises(InvalidAnnotation) as error:
            self.repository.load(str(path))

        assert error.value.line_number == 2

    def test_non_numeric_coordinate(self, tmp_path):
        path = tmp_path / "boxes.csv"
        path.write_text(f"{HEADER}\n0,1,1,abc,0,2,2\n", encoding="utf-8")

        with pytest.raises(InvalidAnnotation):
            self.repository.load(str(path))

    def test_wrong_header(self, tmp_path):
        path = tmp_path / "boxes.csv"
        path.write_text("frame,id,label,a,b,c,d\n0,1,1,0,0,2,2\n", encoding="utf-8")

        with pytest.raises(InvalidAnnotation) as error:
            self.repository.load(str(path))

        assert error.value.line_number == 1

    def test_header_only_file_has_no_records(self, tmp_path):
        path = tmp_path / "boxes.csv"
        path.write_text(f"{HEADER}\n", encoding="utf-8")

        assert self.repository.load(str(path)) == []

    def test_missing_file(self, tmp_path):
        with pytest.raises(InvalidAnnotation):
            self.repository.load(str(tmp_path / "absent.csv"))


@pytest.mark.unit
class TestFileCorpusRepositoryUnit:
    def setup_method(self):
        self.repository = FileCorpusRepository()
        rng = np.random.default_rng(1)
        self.matrix = rng.normal(100.0, 40.0, size=(6, 125)) / 3.0
        self.matrix[:, 0] = [0, 1, 2, 1, 1, 0]

    def test_round_trip_is_bit_exact(self, tmp_path):
        path = str(tmp_path / "corpus.csv")

        self.repository.save(path, Corpus(self.matrix))
        loaded = self.repository.load(path)

        np.testing.assert_array_equal(loaded.matrix, self.matrix)
        assert loaded.provenance is None

    def test_provenance_column_is_kept(self, tmp_path):
        path = str(tmp_path / "corpus.csv")
        provenance = ("straight_line", "mirror", "mirror", "label_swap", "mirror", "mirror")

        self.repository.save(path, Corpus(self.matrix, provenance))

        assert self.repository.load(path).provenance == provenance

    def test_header_names_every_point(self, tmp_path):
        path = tmp_path / "corpus.csv"

        self.repository.save(str(path), Corpus(self.matrix))

        header = path.read_text(encoding="utf-8").splitlines()[0].split(",")
        assert header[:5] == ["label", "x1", "y1", "vx1", "vy1"]
        assert header[-1] == "vy31"

    def test_empty_corpus_keeps_its_header(self, tmp_path):
        path = str(tmp_path / "corpus.csv")

        self.repository.save(path, Corpus(np.empty((0, 125))))

        assert len(self.repository.load(path)) == 0

    def test_layout_is_checked(self, tmp_path):
        path = tmp_path / "corpus.csv"
        path.write_text("label,x1,y1,vx1\n0,1,2,3\n", encoding="utf-8")

        with pytest.raises(CorpusFormatError):
            self.repository.load(str(path))

    def test_non_numeric_value(self, tmp_path):
        path = tmp_path / "corpus.csv"
        path.write_text("label,x1,y1,vx1,vy1\n0,1,oops,3,4\n", encoding="utf-8")

        with pytest.raises(CorpusFormatError):
            self.repository.load(str(path))


@pytest.mark.unit
class TestModelCodecUnit:
    def test_deep_detector_round_trip(self):
        original = detector(build_dae(rng_seed=4))

        loaded = loads_model(dumps_model(original))

        assert_same_detector(loaded, original)

    def test_vanilla_detector_round_trip(self):
        original = detector(build_vae(125, 8, rng_seed=2), seed=5)

        loaded = loads_model(dumps_model(original))

        assert_same_detector(loaded, original)
        assert loaded.network.parameter_count == 2133

    def test_forest_round_trip(self):
        original = forest()

        loaded = loads_model(dumps_model(original))

        assert loaded.trees == original.trees
        assert loaded.score_threshold == original.score_threshold
        assert loaded.subsample_size == original.subsample_size
        assert loaded.metadata == original.metadata

    @pytest.mark.parametrize("build", [lambda: build_dae(rng_seed=1), lambda: build_vae(125, 8)])
    def test_loaded_detector_scores_identically(self, build):
        original = detector(build())
        samples = np.random.default_rng(2).normal(size=(1000, 125))

        loaded = loads_model(dumps_model(original))

        np.testing.assert_array_equal(
            detect_batch(loaded, samples).scores, detect_batch(original, samples).scores
        )

    def test_loaded_forest_scores_identically(self):
        original = forest()
        samples = np.random.default_rng(2).normal(size=(1000, 5))

        loaded = loads_model(dumps_model(original))

        np.testing.assert_array_equal(if_scores(loaded, samples), if_scores(original, samples))

    def test_text_is_stable(self):
        text = dumps_model(detector(build_vae(9, 3)))

        assert dumps_model(loads_model(text)) == text
        assert text.splitlines()[0] == "TRAJNORM-MODEL v1"
        assert text.endswith("end\n")

    def test_tampered_magic(self):
        text = dumps_model(forest()).replace("TRAJNORM-IFOREST", "SOMETHING-ELSE", 1)

        with pytest.raises(ModelFormatError) as error:
            loads_model(text)

        assert type(error.value) is ModelFormatError
        assert error.value.line_number == 1

    def test_unsupported_version(self):
        text = dumps_model(detector(build_vae(9, 3))).replace("v1", "v2", 1)

        with pytest.raises(ModelVersionMismatch):
            loads_model(text)

    def test_truncated_file(self):
        lines = dumps_model(detector(build_vae(9, 3))).splitlines()

        with pytest.raises(ModelFormatError, match="truncated"):
            loads_model("\n".join(lines[: len(lines) // 2]))

    def test_malformed_real(self):
        lines = dumps_model(detector(build_vae(9, 3))).splitlines()
        lines[3] = lines[3].replace(" ", " x", 1)

        with pytest.raises(ModelFormatError) as error:
            loads_model("\n".join(lines))

        assert error.value.line_number == 4

    def test_empty_text(self):
        with pytest.raises(ModelFormatError):
            loads_model("")


@pytest.mark.unit
class TestFileModelRepositoryUnit:
    def test_save_load_and_digest(self, tmp_path):
        repository = FileModelRepository()
        path = str(tmp_path / "models" / "detector.model")
        original = detector(build_vae(9, 3))

        repository.save(path, original)

        assert_same_detector(repository.load(path), original)
        expected = hashlib.sha256((tmp_path / "models" / "detector.model").read_bytes())
        assert repository.digest(path) == expected.hexdigest()

    def test_missing_file(self, tmp_path):
        with pytest.raises(ModelFormatError):
            FileModelRepository().load(str(tmp_path / "absent.model"))


@pytest.mark.unit
class TestInMemoryRepositoriesUnit:
    def test_models_go_through_the_codec(self):
        repository = InMemoryModelRepository()
        original = forest()

        repository.save("forest", original)

        assert repository.load("forest").trees == original.trees
        assert repository.digest("forest") == hashlib.sha256(
            dumps_model(original).encode("utf-8")
        ).hexdigest()

    def test_stored_corpus_is_a_copy(self):
        repository = InMemoryCorpusRepository()
        corpus = Corpus(np.zeros((2, 5)))

        repository.save("normal", corpus)
        corpus.matrix[0, 0] = 9.0

        assert repository.load("normal").matrix[0, 0] == 0.0

    def test_unknown_locations(self):
        with pytest.raises(InvalidAnnotation):
            InMemoryAnnotationRepository().load("nowhere")
        with pytest.raises(CorpusFormatError):
            InMemoryCorpusRepository().load("nowhere")
        with pytest.raises(ModelFormatError):
            InMemoryModelRepository().digest("nowhere")


@pytest.mark.unit
class TestAtomicWriteUnit:
    def test_failed_write_leaves_nothing(self, tmp_path):
        target = tmp_path / "out.txt"

        with pytest.raises(RuntimeError):
            with atomic_write(target) as handle:
                handle.write("partial")
                raise RuntimeError("boom")

        assert list(tmp_path.iterdir()) == []

    def test_failed_write_keeps_the_previous_file(self, tmp_path):
        target = tmp_path / "out.txt"
        target.write_text("old", encoding="utf-8")

        with pytest.raises(RuntimeError):
            with atomic_write(target) as handle:
                handle.write("new")
                raise RuntimeError("boom")

        assert target.read_text(encoding="utf-8") == "old"
