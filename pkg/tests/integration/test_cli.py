"""Integration tests for the trajnorm command line.

These tests run `main()` end to end on real files in a temporary directory.
"""

import numpy as np
import pytest

from src.cli.errors_handler import (
    EXIT_CONFIG,
    EXIT_INPUT,
    EXIT_MODEL_FILE,
    EXIT_OK,
    EXIT_TRAINING,
)
from src.di.container import reset_container
from src.main import main
from src.persistances.repositories.implementations import FileCorpusRepository
from src.services.models import Corpus

RUN_TEMPLATE = """
[run]
seed = 3
methods = dae,vae,if

[paths]
annotations = {root}/annotations.csv
corpus = {root}/normal.csv
abnormal = {root}/abnormal.csv
model = {root}/models/detector.model
report = {root}/reports/evaluation.csv

[scene]
car_count = 3
pedestrian_count = 2

[augment]
count_per_track = 2

[abnormal]
straight_count = 8
realistic_count = 4
transforms = mirror,translate_offroad

[train]
epochs = 2
batch_size = 32

[forest]
tree_count = 10
subsample_size = 32

[eval]
iterations = 2
"""


def write_config(root):
    path = root / "run.ini"
    path.write_text(RUN_TEMPLATE.format(root=root.as_posix()), encoding="utf-8")
    return str(path)


@pytest.mark.integration
class TestCliIntegration:
    def setup_method(self):
        reset_container()

    def teardown_method(self):
        reset_container()

    def run(self, *argv):
        return main(list(argv))

    def prepare(self, root):
        config = write_config(root)
        assert self.run("synth", "--config", config) == EXIT_OK
        assert self.run("ingest", "--config", config) == EXIT_OK
        assert self.run("gen-abnormal", "--config", config) == EXIT_OK
        return config

    def test_complete_workflow(self, tmp_path, capsys):
        # Given
        config = self.prepare(tmp_path)

        # When
        train_status = self.run("train", "--config", config)
        detect_status = self.run("detect", "--config", config, "--out", str(tmp_path / "d.csv"))
        eval_status = self.run("eval", "--config", config)

        # Then
        assert (train_status, detect_status, eval_status) == (EXIT_OK, EXIT_OK, EXIT_OK)
        decisions = (tmp_path / "d.csv").read_text(encoding="utf-8").splitlines()
        assert decisions[0] == "index,score,threshold,decision"
        assert len(decisions) == 1 + 12
        assert {line.rsplit(",", 1)[1] for line in decisions[1:]} <= {"normal", "abnormal"}
        report = (tmp_path / "reports" / "evaluation.csv").read_text(encoding="utf-8")
        assert "DAE TPR" in report and "IF FPR" in report
        assert (tmp_path / "models" / "detector.best-vae.model").is_file()
        output = capsys.readouterr().out
        assert "best_epoch: " in output
        assert "report: " in output

    def test_same_seed_gives_identical_files(self, tmp_path):
        first, second = tmp_path / "first", tmp_path / "second"
        for root in (first, second):
            root.mkdir()
            config = self.prepare(root)
            assert self.run("train", "--config", config, "--method", "if") == EXIT_OK

        for name in ("annotations.csv", "normal.csv", "abnormal.csv"):
            assert (first / name).read_bytes() == (second / name).read_bytes()
        # seule la ligne config_digest change (les chemins diffèrent)
        models = [
            [
                line
                for line in (root / "models" / "detector.model").read_text().splitlines()
                if not line.startswith("meta config_digest")
            ]
            for root in (first, second)
        ]
        assert models[0] == models[1]

    def test_seed_override_changes_the_scene(self, tmp_path):
        config = write_config(tmp_path)

        self.run("synth", "--config", config, "--out", str(tmp_path / "a.csv"))
        self.run("synth", "--config", config, "--seed", "4", "--out", str(tmp_path / "b.csv"))

        assert (tmp_path / "a.csv").read_bytes() != (tmp_path / "b.csv").read_bytes()

    def test_detect_on_an_empty_corpus_prints_the_header(self, tmp_path, capsys):
        # Given
        config = self.prepare(tmp_path)
        self.run("train", "--config", config, "--method", "vae")
        empty = tmp_path / "empty.csv"
        FileCorpusRepository().save(str(empty), Corpus(np.empty((0, 125))))
        capsys.readouterr()

        # When
        model = str(tmp_path / "models" / "detector.model")
        status = self.run("detect", "--config", config, model, str(empty))

        # Then
        assert status == EXIT_OK
        assert capsys.readouterr().out == "index,score,threshold,decision\n"

    def test_show_config(self, tmp_path, capsys):
        config = write_config(tmp_path)

        status = self.run("show-config", "--config", config)

        output = capsys.readouterr().out
        assert status == EXIT_OK
        assert "[train]\n" in output
        assert "epochs = 2\n" in output
        assert output.splitlines()[-1].startswith("# digest: ")

    def test_unknown_config_key_exits_with_config_status(self, tmp_path, capsys):
        path = tmp_path / "bad.ini"
        path.write_text("[train]\nmomentum = 0.9\n", encoding="utf-8")

        status = self.run("show-config", "--config", str(path))

        assert status == EXIT_CONFIG
        assert capsys.readouterr().err.startswith("error: ")

    def test_missing_annotations_exit_with_input_status(self, tmp_path):
        config = write_config(tmp_path)

        assert self.run("ingest", "--config", config) == EXIT_INPUT

    def test_corrupt_model_exits_with_model_status(self, tmp_path):
        config = self.prepare(tmp_path)
        model = tmp_path / "broken.model"
        model.write_text("TRAJNORM-MODEL v1\nlayers 2\n", encoding="utf-8")

        assert self.run("detect", "--config", config, str(model)) == EXIT_MODEL_FILE

    def test_tiny_corpus_exits_with_training_status(self, tmp_path):
        config = write_config(tmp_path)
        tiny = tmp_path / "tiny.csv"
        FileCorpusRepository().save(str(tiny), Corpus(np.ones((4, 125))))

        assert self.run("train", "--config", config, str(tiny)) == EXIT_TRAINING

    def test_unreadable_corpus_exits_with_input_status(self, tmp_path):
        config = write_config(tmp_path)
        corpus = tmp_path / "corpus.csv"
        corpus.write_text("a,b\n1,2\n", encoding="utf-8")

        assert self.run("train", "--config", config, str(corpus)) == EXIT_INPUT

    def test_eval_twice_gives_identical_report_and_models(self, tmp_path):
        # Given
        config = self.prepare(tmp_path)
        report = tmp_path / "reports" / "evaluation.csv"
        best = tmp_path / "models" / "detector.best-dae.model"

        # When
        self.run("eval", "--config", config, "--method", "dae")
        first_report, first_model = report.read_bytes(), best.read_bytes()
        self.run("eval", "--config", config, "--method", "dae")

        # Then
        assert report.read_bytes() == first_report
        assert best.read_bytes() == first_model
