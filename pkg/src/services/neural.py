"""Dense autoencoder engine: forward pass, backpropagation of the MSE loss and RMSProp."""

import enum
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from sklearn.model_selection import train_test_split

from src.services.exceptions import (
    DimensionMismatch,
    InsufficientSamples,
    InvalidConfiguration,
    TrainingDiverged,
)
from src.services.models import PACKED_LENGTH, TrainConfig

logger: logging.Logger = logging.getLogger(name=__name__)

DAE_ENCODER_WIDTHS = (128, 64, 32, 16, 8)
SIGMOID_MARGIN = float(np.finfo(np.float64).eps)


class Activation(str, enum.Enum):
    RELU = "relu"
    SIGMOID = "sigmoid"
    IDENTITY = "identity"

    def apply(self, pre_activation: np.ndarray) -> np.ndarray:
        if self is Activation.RELU:
            return np.maximum(pre_activation, 0.0)
        if self is Activation.SIGMOID:
            # tanh form: no overflow, and sigmoid(0) is exactly 0.5
            output = 0.5 * (1.0 + np.tanh(0.5 * pre_activation))
            return np.clip(output, SIGMOID_MARGIN, 1.0 - SIGMOID_MARGIN)
        return pre_activation

    def derivative(self, pre_activation: np.ndarray, output: np.ndarray) -> np.ndarray:
        if self is Activation.RELU:
            return (pre_activation > 0.0).astype(np.float64)
        if self is Activation.SIGMOID:
            return output * (1.0 - output)
        return np.ones_like(pre_activation)


@dataclass
class DenseLayer:
    """Fully connected layer; weights are [out_units x in_units]."""

    weights: np.ndarray
    biases: np.ndarray
    activation: Activation

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.biases = np.asarray(self.biases, dtype=np.float64)
        self.activation = Activation(self.activation)
        if self.weights.ndim != 2 or self.biases.shape != (self.weights.shape[0],):
            raise InvalidConfiguration(
                f"inconsistent layer shapes {self.weights.shape} / {self.biases.shape}"
            )
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.biases))):
            raise InvalidConfiguration("layer parameters must be finite")

    @property
    def in_units(self) -> int:
        return self.weights.shape[1]

    @property
    def out_units(self) -> int:
        return self.weights.shape[0]

    @property
    def parameter_count(self) -> int:
        return self.weights.size + self.biases.size


@dataclass
class Network:
    """Ordered stack of dense layers."""

    layers: list[DenseLayer]

    def __post_init__(self) -> None:
        if not self.layers:
            raise InvalidConfiguration("a network needs at least one layer")
        for previous, current in zip(self.layers, self.layers[1:]):
            if previous.out_units != current.in_units:
                raise InvalidConfiguration(
                    f"layer of {previous.out_units} units feeds a layer expecting "
                    f"{current.in_units}"
                )

    @property
    def input_size(self) -> int:
        return self.layers[0].in_units

    @property
    def output_size(self) -> int:
        return self.layers[-1].out_units

    @property
    def parameter_count(self) -> int:
        return sum(layer.parameter_count for layer in self.layers)

    @property
    def bottleneck_width(self) -> int:
        """Width of the narrowest layer output (the compressed feature vector)."""
        return min(layer.out_units for layer in self.layers)

    @property
    def widths(self) -> list[int]:
        return [self.input_size] + [layer.out_units for layer in self.layers]

    def copy(self) -> "Network":
        return Network(
            [
                DenseLayer(layer.weights.copy(), layer.biases.copy(), layer.activation)
                for layer in self.layers
            ]
        )


@dataclass
class LayerGradient:
    weights: np.ndarray
    biases: np.ndarray


@dataclass
class Gradients:
    """Gradient of the mean per-sample MSE with respect to every parameter."""

    layers: list[LayerGradient]
    loss: float


@dataclass
class RmsPropState:
    """Running averages of squared gradients, shaped like the parameters."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @classmethod
    def zeros_like(cls, net: Network) -> "RmsPropState":
        return cls(
            weights=[np.zeros_like(layer.weights) for layer in net.layers],
            biases=[np.zeros_like(layer.biases) for layer in net.layers],
        )


class RmsPropOptimizer:
    """acc <- rho * acc + (1 - rho) * g^2 ; theta <- theta - lr * g / sqrt(acc + eps)."""

    def __init__(self, net: Network, learning_rate: float, decay: float, epsilon: float) -> None:
        self.learning_rate = learning_rate
        self.decay = decay
        self.epsilon = epsilon
        self.state = RmsPropState.zeros_like(net)

    def step(self, net: Network, gradients: Gradients) -> None:
        """Update the network parameters in place."""
        for index, (layer, grad) in enumerate(zip(net.layers, gradients.layers)):
            self._update(layer.weights, grad.weights, self.state.weights[index])
            self._update(layer.biases, grad.biases, self.state.biases[index])

    def _update(self, parameter: np.ndarray, grad: np.ndarray, accumulator: np.ndarray) -> None:
        accumulator *= self.decay
        accumulator += (1.0 - self.decay) * grad * grad
        parameter -= self.learning_rate * grad / np.sqrt(accumulator + self.epsilon)


@dataclass
class TrainHistory:
    """Per-epoch losses and the epoch whose parameters were kept."""

    train_loss: list[float] = field(default_factory=list)
    cv_loss: list[float] = field(default_factory=list)
    best_epoch: int = 0

    def __len__(self) -> int:
        return len(self.train_loss)


def _glorot_layer(
    rng: np.random.Generator, in_units: int, out_units: int, activation: Activation
) -> DenseLayer:
    limit = np.sqrt(6.0 / (in_units + out_units))
    return DenseLayer(
        weights=rng.uniform(-limit, limit, size=(out_units, in_units)),
        biases=np.zeros(out_units),
        activation=activation,
    )


def build_network(widths: Sequence[int], rng_seed: int = 0) -> Network:
    """ReLU hidden layers and a Sigmoid output, Glorot-uniform weights, zero biases."""
    if len(widths) < 2 or min(widths) < 1:
        raise InvalidConfiguration(f"invalid layer widths {list(widths)}")
    rng = np.random.default_rng(rng_seed)
    last = len(widths) - 2
    return Network(
        [
            _glorot_layer(
                rng,
                widths[index],
                widths[index + 1],
                Activation.SIGMOID if index == last else Activation.RELU,
            )
            for index in range(len(widths) - 1)
        ]
    )


def build_dae(
    input_size: int = PACKED_LENGTH,
    encoder_widths: Sequence[int] = DAE_ENCODER_WIDTHS,
    rng_seed: int = 0,
) -> Network:
    """Deep autoencoder with a mirrored decoder: 125-128-64-32-16-8-16-32-64-128-125."""
    if input_size < 1:
        raise InvalidConfiguration("input_size must be >= 1")
    encoder = list(encoder_widths)
    widths = [input_size, *encoder, *reversed(encoder[:-1]), input_size]
    return build_network(widths, rng_seed)


def build_vae(input_size: int = PACKED_LENGTH, hidden: int = 8, rng_seed: int = 0) -> Network:
    """Vanilla autoencoder: input, one hidden (compressed) layer, reconstruction."""
    if hidden < 1:
        raise InvalidConfiguration("hidden must be >= 1")
    return build_network([input_size, hidden, input_size], rng_seed)


def _check_batch(net: Network, batch: np.ndarray) -> np.ndarray:
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim == 1:
        batch = batch[None, :]
    if batch.ndim != 2 or batch.shape[1] != net.input_size:
        raise DimensionMismatch(net.input_size, batch.shape[-1], what="input width")
    return batch


def _forward_trace(net: Network, batch: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Pre-activations and activations of every layer; activations[0] is the input."""
    activations = [batch]
    pre_activations = []
    for layer in net.layers:
        pre_activation = activations[-1] @ layer.weights.T + layer.biases
        pre_activations.append(pre_activation)
        activations.append(layer.activation.apply(pre_activation))
    return pre_activations, activations


def forward(net: Network, batch: np.ndarray) -> np.ndarray:
    """Reconstruction of every row of the batch."""
    _, activations = _forward_trace(net, _check_batch(net, batch))
    return activations[-1]


def backward(net: Network, batch: np.ndarray) -> Gradients:
    """Gradient of mean over the batch of the per-sample reconstruction MSE."""
    batch = _check_batch(net, batch)
    if net.output_size != net.input_size:
        raise DimensionMismatch(net.input_size, net.output_size, what="autoencoder output width")

    pre_activations, activations = _forward_trace(net, batch)
    residual = activations[-1] - batch
    loss = float(np.mean(residual * residual))

    # dL/d(output) pour L = moyenne sur (n x d) des carrés
    upstream = 2.0 * residual / residual.size
    gradients: list[LayerGradient] = []
    for index in reversed(range(len(net.layers))):
        layer = net.layers[index]
        delta = upstream * layer.activation.derivative(
            pre_activations[index], activations[index + 1]
        )
        gradients.append(
            LayerGradient(weights=delta.T @ activations[index], biases=delta.sum(axis=0))
        )
        upstream = delta @ layer.weights

    gradients.reverse()
    return Gradients(layers=gradients, loss=loss)


def mse(z: np.ndarray, z_hat: np.ndarray) -> float:
    """Mean of squared componentwise differences."""
    z = np.asarray(z, dtype=np.float64)
    z_hat = np.asarray(z_hat, dtype=np.float64)
    if z.shape != z_hat.shape:
        raise DimensionMismatch(z.shape, z_hat.shape, what="sequence length")
    difference = z - z_hat
    return float(np.mean(difference * difference))


def reconstruction_errors(net: Network, batch: np.ndarray) -> np.ndarray:
    """Per-row MSE between a batch and its reconstruction."""
    batch = _check_batch(net, batch)
    difference = batch - forward(net, batch)
    return np.mean(difference * difference, axis=1)


def fit(net: Network, train: np.ndarray, cfg: TrainConfig) -> tuple[Network, TrainHistory]:
    """Train with mini-batch RMSProp, keeping the parameters of the best cross-validation epoch."""
    train = _check_batch(net, train)
    if len(train) < 2:
        raise InsufficientSamples(len(train), 2)

    cv_count = math.ceil(cfg.cv_fraction * len(train))
    if not 0 < cv_count < len(train):
        raise InsufficientSamples(min(cv_count, len(train) - cv_count), 1)
    fit_rows, cv_rows = train_test_split(
        train, test_size=cv_count, shuffle=True, random_state=cfg.rng_seed
    )
    trained = net.copy()
    optimizer = RmsPropOptimizer(
        trained, cfg.learning_rate, cfg.rmsprop_decay, cfg.rmsprop_epsilon
    )
    rng = np.random.default_rng(cfg.rng_seed)
    history = TrainHistory()
    best: Network | None = None
    best_cv_loss = np.inf

    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(fit_rows))
        for start in range(0, len(order), cfg.batch_size):
            gradients = backward(trained, fit_rows[order[start : start + cfg.batch_size]])
            optimizer.step(trained, gradients)

        train_loss = float(np.mean(reconstruction_errors(trained, fit_rows)))
        cv_loss = float(np.mean(reconstruction_errors(trained, cv_rows)))
        if not (np.isfinite(train_loss) and np.isfinite(cv_loss)):
            raise TrainingDiverged(epoch, train_loss, cv_loss)

        history.train_loss.append(train_loss)
        history.cv_loss.append(cv_loss)
        logger.debug("epoch %s: train %.6g cv %.6g", epoch, train_loss, cv_loss)
        if cv_loss < best_cv_loss:
            best_cv_loss = cv_loss
            best = trained.copy()
            history.best_epoch = epoch

    logger.info(
        "Training done: best epoch %s, cv loss %.6g", history.best_epoch, best_cv_loss
    )
    return (best if best is not None else trained), history
