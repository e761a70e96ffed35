"""Versioned text formats for trained detectors and isolation forests.

Detector file::

    TRAJNORM-MODEL v1
    layers <count>
    layer <in> <out> <activation>
    <one line per weight row, row-major>
    <biases>
    ...
    scaler_min <values>
    scaler_max <values>
    tau <value>
    meta <key> <value>
    end

Isolation forest file::

    TRAJNORM-IFOREST v1
    features <n>
    subsample <size>
    contamination <rate>
    threshold <score threshold>
    trees <count>
    tree <node count>
    split <feature> <value> <size> | leaf <size>     (pre-order)
    ...
    meta <key> <value>
    end

Reals are written with 17 significant digits, which round-trips float64 exactly.
"""

import logging
from io import StringIO
from pathlib import Path
from typing import TextIO

import numpy as np

from src.persistances.storage import atomic_write
from src.services.baselines import LEAF, IsolationForestModel, IsolationTree
from src.services.detector import DetectorModel, FeatureScaler
from src.services.exceptions import ModelFormatError, ModelVersionMismatch, TrajnormError
from src.services.neural import Activation, DenseLayer, Network

logger: logging.Logger = logging.getLogger(name=__name__)

DETECTOR_MAGIC = "TRAJNORM-MODEL"
FOREST_MAGIC = "TRAJNORM-IFOREST"
FORMAT_VERSION = "v1"

AnyModel = DetectorModel | IsolationForestModel


def _real(value: float) -> str:
    return format(float(value), ".17g")


def _reals(values: np.ndarray) -> str:
    return " ".join(_real(value) for value in np.ravel(values))


def _write_metadata(handle: TextIO, metadata: dict[str, str]) -> None:
    for key in sorted(metadata):
        if not key or any(char.isspace() for char in key):
            raise ModelFormatError(f"metadata key '{key}' must be a single token")
        value = str(metadata[key])
        if "\n" in value:
            raise ModelFormatError(f"metadata value for '{key}' must fit on one line")
        handle.write(f"meta {key} {value}\n")


def write_detector(handle: TextIO, model: DetectorModel) -> None:
    handle.write(f"{DETECTOR_MAGIC} {FORMAT_VERSION}\n")
    handle.write(f"layers {len(model.network.layers)}\n")
    for layer in model.network.layers:
        handle.write(f"layer {layer.in_units} {layer.out_units} {layer.activation.value}\n")
        for row in layer.weights:
            handle.write(_reals(row) + "\n")
        handle.write(_reals(layer.biases) + "\n")
    handle.write(f"scaler_min {_reals(model.scaler.data_min)}\n")
    handle.write(f"scaler_max {_reals(model.scaler.data_max)}\n")
    handle.write(f"tau {_real(model.threshold)}\n")
    _write_metadata(handle, model.metadata)
    handle.write("end\n")


def write_forest(handle: TextIO, model: IsolationForestModel) -> None:
    handle.write(f"{FOREST_MAGIC} {FORMAT_VERSION}\n")
    handle.write(f"features {model.n_features}\n")
    handle.write(f"subsample {model.subsample_size}\n")
    handle.write(f"contamination {_real(model.contamination)}\n")
    handle.write(f"threshold {_real(model.score_threshold)}\n")
    handle.write(f"trees {model.tree_count}\n")
    for tree in model.trees:
        handle.write(f"tree {tree.node_count}\n")
        for node in range(tree.node_count):
            if tree.feature[node] == LEAF:
                handle.write(f"leaf {tree.size[node]}\n")
            else:
                handle.write(
                    f"split {tree.feature[node]} {_real(tree.threshold[node])} {tree.size[node]}\n"
                )
    _write_metadata(handle, model.metadata)
    handle.write("end\n")


def save_model(model: AnyModel, path: str | Path) -> Path:
    """Write a detector or forest atomically to `path`."""
    target = Path(path)
    with atomic_write(target) as handle:
        if isinstance(model, DetectorModel):
            write_detector(handle, model)
        elif isinstance(model, IsolationForestModel):
            write_forest(handle, model)
        else:
            raise ModelFormatError(f"cannot serialize {type(model).__name__}")
    logger.info("Model saved to %s", target)
    return target


class _LineReader:
    """Numbered line cursor that turns every parsing problem into a ModelFormatError."""

    def __init__(self, lines: list[str]) -> None:
        self._lines = lines
        self.position = 0

    @property
    def line_number(self) -> int:
        return self.position

    def next(self, what: str) -> str:
        if self.position >= len(self._lines):
            raise ModelFormatError(f"truncated file, expected {what}", self.position + 1)
        line = self._lines[self.position].rstrip("\r\n")
        self.position += 1
        return line

    def keyword(self, keyword: str) -> list[str]:
        tokens = self.next(f"'{keyword}'").split()
        if not tokens or tokens[0] != keyword:
            raise ModelFormatError(f"expected '{keyword}'", self.line_number)
        return tokens[1:]

    def int_field(self, keyword: str) -> int:
        tokens = self.keyword(keyword)
        if len(tokens) != 1:
            raise ModelFormatError(f"'{keyword}' takes one value", self.line_number)
        return self.integer(tokens[0])

    def integer(self, token: str) -> int:
        try:
            return int(token)
        except ValueError:
            raise ModelFormatError(f"'{token}' is not an integer", self.line_number) from None

    def reals(self, tokens: list[str], count: int) -> np.ndarray:
        if len(tokens) != count:
            raise ModelFormatError(f"expected {count} values, got {len(tokens)}", self.line_number)
        try:
            return np.array([float(token) for token in tokens], dtype=np.float64)
        except ValueError:
            raise ModelFormatError("malformed real value", self.line_number) from None

    def metadata_and_end(self) -> dict[str, str]:
        metadata: dict[str, str] = {}
        while True:
            line = self.next("'end'")
            if line == "end":
                return metadata
            parts = line.split(" ", 2)
            if parts[0] != "meta" or len(parts) < 2:
                raise ModelFormatError("expected 'meta' or 'end'", self.line_number)
            metadata[parts[1]] = parts[2] if len(parts) == 3 else ""


def _check_header(first_line: str) -> str:
    tokens = first_line.split()
    if len(tokens) != 2 or tokens[0] not in (DETECTOR_MAGIC, FOREST_MAGIC):
        raise ModelFormatError(f"unknown magic '{first_line}'", 1)
    if tokens[1] != FORMAT_VERSION:
        raise ModelVersionMismatch(first_line)
    return tokens[0]


def _read_detector(reader: _LineReader) -> DetectorModel:
    layers = []
    for _ in range(reader.int_field("layers")):
        header = reader.keyword("layer")
        if len(header) != 3:
            raise ModelFormatError("layer header needs <in> <out> <activation>", reader.line_number)
        in_units, out_units = reader.integer(header[0]), reader.integer(header[1])
        if in_units < 1 or out_units < 1:
            raise ModelFormatError("layer widths must be >= 1", reader.line_number)
        try:
            activation = Activation(header[2])
        except ValueError:
            raise ModelFormatError(
                f"unknown activation '{header[2]}'", reader.line_number
            ) from None
        weights = np.vstack(
            [reader.reals(reader.next("weights").split(), in_units) for _ in range(out_units)]
        )
        biases = reader.reals(reader.next("biases").split(), out_units)
        layers.append(DenseLayer(weights, biases, activation))

    network = Network(layers)
    data_min = reader.reals(reader.keyword("scaler_min"), network.input_size)
    data_max = reader.reals(reader.keyword("scaler_max"), network.input_size)
    tau = reader.reals(reader.keyword("tau"), 1)[0]
    metadata = reader.metadata_and_end()
    return DetectorModel(network, FeatureScaler(data_min, data_max), float(tau), metadata)


def _read_tree(reader: _LineReader, node_count: int) -> IsolationTree:
    feature = np.full(node_count, LEAF, dtype=np.int64)
    threshold = np.zeros(node_count)
    left = np.full(node_count, LEAF, dtype=np.int64)
    right = np.full(node_count, LEAF, dtype=np.int64)
    size = np.zeros(node_count, dtype=np.int64)
    cursor = iter(range(node_count))

    def read_node() -> int:
        node = next(cursor, None)
        if node is None:
            raise ModelFormatError("tree has more nodes than declared", reader.line_number)
        tokens = reader.next("tree node").split()
        if tokens[:1] == ["leaf"] and len(tokens) == 2:
            size[node] = reader.integer(tokens[1])
            return node
        if tokens[:1] != ["split"] or len(tokens) != 4:
            raise ModelFormatError("expected 'split' or 'leaf'", reader.line_number)
        feature[node] = reader.integer(tokens[1])
        threshold[node] = reader.reals(tokens[2:3], 1)[0]
        size[node] = reader.integer(tokens[3])
        left[node] = read_node()
        right[node] = read_node()
        return node

    read_node()
    if next(cursor, None) is not None:
        raise ModelFormatError("tree has fewer nodes than declared", reader.line_number)
    return IsolationTree(feature, threshold, left, right, size)


def _read_forest(reader: _LineReader) -> IsolationForestModel:
    n_features = reader.int_field("features")
    subsample_size = reader.int_field("subsample")
    contamination = reader.reals(reader.keyword("contamination"), 1)[0]
    score_threshold = reader.reals(reader.keyword("threshold"), 1)[0]
    tree_count = reader.int_field("trees")
    trees = [
        _read_tree(reader, reader.int_field("tree"))
        for _ in range(tree_count)
    ]
    metadata = reader.metadata_and_end()
    return IsolationForestModel(
        trees=trees,
        subsample_size=subsample_size,
        n_features=n_features,
        contamination=float(contamination),
        score_threshold=float(score_threshold),
        metadata=metadata,
    )


def read_model(lines: list[str]) -> AnyModel:
    if not lines:
        raise ModelFormatError("empty model file", 1)
    reader = _LineReader(lines)
    magic = _check_header(reader.next("header"))
    try:
        if magic == DETECTOR_MAGIC:
            return _read_detector(reader)
        return _read_forest(reader)
    except ModelFormatError:
        raise
    except TrajnormError as error:
        # Paramètres lus mais incohérents entre eux
        raise ModelFormatError(str(error), reader.line_number) from error


def load_model(path: str | Path) -> AnyModel:
    """Read a detector or forest file; the magic line decides which."""
    source = Path(path)
    try:
        text = source.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ModelFormatError(f"model file {source} does not exist") from None
    model = loads_model(text)
    logger.info("Model loaded from %s", source)
    return model


def dumps_model(model: AnyModel) -> str:
    """Serialized text of a model, as save_model would write it."""
    buffer = StringIO()
    if isinstance(model, DetectorModel):
        write_detector(buffer, model)
    else:
        write_forest(buffer, model)
    return buffer.getvalue()


def loads_model(text: str) -> AnyModel:
    return read_model(text.splitlines())
