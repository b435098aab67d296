"""Plain NumPy multilayer perceptron with explicit backpropagation.

Kept free of any offloading semantics; the decision layer owns feature
normalization and label decoding.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

RELU = "relu"
SIGMOID = "sigmoid"
TANH = "tanh"
IDENTITY = "identity"
SOFTMAX = "softmax"

LOSS_MSE = "mse"
LOSS_CCE = "cce"

_CCE_CLAMP = 1e-12


def _relu(z):
    return np.maximum(z, 0.0)


def _relu_grad(z):
    return (z > 0.0).astype(float)


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _sigmoid_grad(z):
    s = _sigmoid(z)
    return s * (1.0 - s)


def _tanh_grad(z):
    t = np.tanh(z)
    return 1.0 - t * t


def softmax(z):
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


ACTIVATIONS = {
    RELU: (_relu, _relu_grad),
    SIGMOID: (_sigmoid, _sigmoid_grad),
    TANH: (np.tanh, _tanh_grad),
    IDENTITY: (lambda z: z, lambda z: np.ones_like(z)),
}


@dataclass
class Layer:
    weights: np.ndarray  # (out, in)
    biases: np.ndarray  # (out,)
    activation: str


@dataclass
class Network:
    layers: list[Layer]

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        sizes = [self.layers[0].weights.shape[1]]
        sizes.extend(layer.weights.shape[0] for layer in self.layers)
        return tuple(sizes)


def init_network(layer_sizes, activations, seed: int) -> Network:
    """Glorot-uniform weights, zero biases, one seeded stream."""
    if len(activations) != len(layer_sizes) - 1:
        raise ValueError("need one activation per weight layer")
    for name in activations[:-1]:
        if name not in ACTIVATIONS:
            raise ValueError(f"unknown hidden activation: {name}")
    if activations[-1] not in ACTIVATIONS and activations[-1] != SOFTMAX:
        raise ValueError(f"unknown output activation: {activations[-1]}")
    rng = np.random.default_rng(seed)
    layers = []
    for fan_in, fan_out, name in zip(layer_sizes, layer_sizes[1:], activations):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights = rng.uniform(-limit, limit, size=(fan_out, fan_in))
        layers.append(Layer(weights, np.zeros(fan_out), name))
    return Network(layers)


def _as_batch(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    return arr[None, :] if arr.ndim == 1 else arr


def forward_trace(net: Network, x) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Pre- and post-activation values per layer; index 0 of posts is input."""
    a = _as_batch(x)
    pres: list[np.ndarray] = []
    posts: list[np.ndarray] = [a]
    for layer in net.layers:
        z = a @ layer.weights.T + layer.biases
        pres.append(z)
        if layer.activation == SOFTMAX:
            a = softmax(z)
        else:
            a = ACTIVATIONS[layer.activation][0](z)
        posts.append(a)
    return pres, posts


def forward(net: Network, x) -> np.ndarray:
    out = forward_trace(net, x)[1][-1]
    return out[0] if np.asarray(x).ndim == 1 else out


def mse_loss(predictions, targets) -> float:
    p = _as_batch(predictions)
    t = _as_batch(targets)
    return float(((p - t) ** 2).sum(axis=1).mean())


def cce_loss(predictions, targets) -> float:
    p = np.clip(_as_batch(predictions), _CCE_CLAMP, None)
    t = _as_batch(targets)
    return float(-(t * np.log(p)).sum(axis=1).mean())


def _output_delta(loss: str, activation: str, z: np.ndarray,
                  prediction: np.ndarray, target: np.ndarray) -> np.ndarray:
    batch = prediction.shape[0]
    if loss == LOSS_CCE:
        if activation != SOFTMAX:
            raise ValueError("cross-entropy requires a softmax output layer")
        return (prediction - target) / batch
    if activation == SOFTMAX:
        raise ValueError("softmax output requires the cross-entropy loss")
    grad = ACTIVATIONS[activation][1](z)
    return 2.0 * (prediction - target) * grad / batch


def gradient(net: Network, x, targets, loss: str = LOSS_MSE):
    """Batch-mean loss gradient as [(dW, db)] matching net.layers."""
    t = _as_batch(targets)
    pres, posts = forward_trace(net, x)
    delta = _output_delta(loss, net.layers[-1].activation, pres[-1], posts[-1], t)
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(net.layers)
    for idx in range(len(net.layers) - 1, -1, -1):
        grads[idx] = (delta.T @ posts[idx], delta.sum(axis=0))
        if idx:
            layer = net.layers[idx]
            back = delta @ layer.weights
            delta = back * ACTIVATIONS[net.layers[idx - 1].activation][1](pres[idx - 1])
    return grads


def apply_gradient(net: Network, grads, learning_rate: float) -> None:
    for layer, (dw, db) in zip(net.layers, grads):
        layer.weights -= learning_rate * dw
        layer.biases -= learning_rate * db


def evaluate_loss(net: Network, x, targets, loss: str = LOSS_MSE) -> float:
    pred = forward_trace(net, x)[1][-1]
    fn = cce_loss if loss == LOSS_CCE else mse_loss
    return fn(pred, targets)


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainParams:
    learning_rate: float = 0.01
    epochs: int = 500
    batch_size: int = 32
    validation_fraction: float = 0.2
    loss: str = LOSS_MSE
    seed: int = 0


@dataclass
class TrainReport:
    train_loss: list[float] = field(default_factory=list)
    test_loss: list[float] = field(default_factory=list)

    @property
    def min_test_loss(self) -> float:
        return min(self.test_loss) if self.test_loss else math.inf

    @property
    def final_test_loss(self) -> float:
        return self.test_loss[-1] if self.test_loss else math.inf

    def to_csv(self, path: str | Path) -> None:
        lines = ["epoch,train_loss,test_loss"]
        for e, (tr, te) in enumerate(zip(self.train_loss, self.test_loss), 1):
            lines.append(f"{e},{tr!r},{te!r}")
        Path(path).write_text("\n".join(lines) + "\n")


def split_dataset(n_samples: int, validation_fraction: float, seed: int):
    """Shuffled train/test index split; test gets the rounded tail share."""
    rng = np.random.default_rng([seed, 0])
    order = rng.permutation(n_samples)
    n_test = int(round(n_samples * validation_fraction))
    return order[: n_samples - n_test], order[n_samples - n_test:]


def train(net: Network, inputs, targets, params: TrainParams) -> TrainReport:
    """Plain SGD on the batch-mean loss with a fixed held-out split."""
    x = _as_batch(inputs)
    t = _as_batch(targets)
    if x.shape[0] != t.shape[0]:
        raise ValueError("inputs and targets disagree on sample count")
    train_idx, test_idx = split_dataset(x.shape[0], params.validation_fraction,
                                        params.seed)
    if train_idx.size == 0:
        raise ValueError("empty training split")
    x_train, t_train = x[train_idx], t[train_idx]
    x_test, t_test = x[test_idx], t[test_idx]

    report = TrainReport()
    for epoch in range(1, params.epochs + 1):
        rng = np.random.default_rng([params.seed, 1, epoch])
        order = rng.permutation(x_train.shape[0])
        for start in range(0, order.size, params.batch_size):
            batch = order[start:start + params.batch_size]
            grads = gradient(net, x_train[batch], t_train[batch], params.loss)
            apply_gradient(net, grads, params.learning_rate)
        tr = evaluate_loss(net, x_train, t_train, params.loss)
        te = evaluate_loss(net, x_test, t_test, params.loss) if test_idx.size else tr
        if not (math.isfinite(tr) and math.isfinite(te)):
            raise TrainingDiverged(
                f"non-finite loss at epoch {epoch}: train={tr} test={te}")
        report.train_loss.append(tr)
        report.test_loss.append(te)
    return report


def save_network(net: Network, path: str | Path, meta: dict | None = None) -> None:
    """Text checkpoint: topology, activations, metadata, exact parameters."""
    lines = ["# mecsim network v1"]
    sizes = net.layer_sizes
    lines.append("sizes = " + ",".join(str(s) for s in sizes))
    lines.append("activations = " + ",".join(l.activation for l in net.layers))
    for key in sorted(meta or {}):
        value = (meta or {})[key]
        if not isinstance(value, str):
            value = repr(float(value))
        lines.append(f"meta {key} = {value}")
    for idx, layer in enumerate(net.layers):
        for r, row in enumerate(layer.weights):
            lines.append(f"w {idx} {r} " + " ".join("%.17g" % v for v in row))
        lines.append(f"b {idx} " + " ".join("%.17g" % v for v in layer.biases))
    Path(path).write_text("\n".join(lines) + "\n")


def load_network(path: str | Path) -> tuple[Network, dict]:
    text = Path(path).read_text().splitlines()
    if not text or text[0].strip() != "# mecsim network v1":
        raise ValueError(f"not a network checkpoint: {path}")
    sizes: list[int] = []
    activations: list[str] = []
    meta: dict[str, float | str] = {}
    weights: dict[int, dict[int, list[float]]] = {}
    biases: dict[int, list[float]] = {}
    for lineno, raw in enumerate(text[1:], 2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("sizes = "):
            sizes = [int(v) for v in line[len("sizes = "):].split(",")]
        elif line.startswith("activations = "):
            activations = line[len("activations = "):].split(",")
        elif line.startswith("meta "):
            key, _, value = line[len("meta "):].partition(" = ")
            try:
                meta[key.strip()] = float(value)
            except ValueError:
                meta[key.strip()] = value.strip()
        elif line.startswith("w "):
            _, idx, row, rest = line.split(" ", 3)
            weights.setdefault(int(idx), {})[int(row)] = [
                float(v) for v in rest.split()]
        elif line.startswith("b "):
            _, idx, rest = line.split(" ", 2)
            biases[int(idx)] = [float(v) for v in rest.split()]
        else:
            raise ValueError(f"{path}:{lineno}: unrecognized line: {line}")
    if not sizes or not activations:
        raise ValueError(f"incomplete network checkpoint: {path}")
    layers = []
    for idx, (fan_in, fan_out) in enumerate(zip(sizes, sizes[1:])):
        w = np.array([weights[idx][r] for r in range(fan_out)], dtype=float)
        if w.shape != (fan_out, fan_in):
            raise ValueError(f"layer {idx} weight shape mismatch in {path}")
        b = np.array(biases[idx], dtype=float)
        if b.shape != (fan_out,):
            raise ValueError(f"layer {idx} bias shape mismatch in {path}")
        layers.append(Layer(w, b, activations[idx]))
    return Network(layers), meta
